#pragma once

// Conformance checking of a dataset against one file kind. Each check
// emits findings drawn from rule_catalogue(); a report passes when it holds
// no finding of severity Error.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "etsf/content.hpp"
#include "etsf/error.hpp"
#include "etsf/model.hpp"
#include "etsf/netcdf.hpp"
#include "etsf/physics.hpp"

namespace etsf {

enum class Severity { Error, Warning, Info };

constexpr std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Error: return "ERROR";
    case Severity::Warning: return "WARNING";
    case Severity::Info: return "INFO";
  }
  return "?";
}

struct RuleInfo {
  std::string_view id;
  Severity severity;
  std::string_view summary;
};

// clang-format off
/// Closed catalogue of rule identifiers. Numeric tolerances: k-point weights
/// sum to 1 within 1e-8, state norms equal 1 within 1e-6, a translation
/// counts as zero within 1e-10 per component.
inline const std::vector<RuleInfo>& rule_catalogue() {
  static const std::vector<RuleInfo> rules{
      {"ATTR-MISSING", Severity::Error, "mandatory global attribute absent"},
      {"ATTR-TYPE", Severity::Error, "global attribute has the wrong type"},
      {"ATTR-VALUE", Severity::Warning, "file_format is not \"ETSF Nanoquanta\""},
      {"DIM-MISSING", Severity::Error, "mandatory dimension absent"},
      {"DIM-VALUE", Severity::Error, "dimension differs from its fixed length"},
      {"DIM-RANGE", Severity::Error, "dimension length outside its allowed values"},
      {"DIM-POSITIVE", Severity::Error, "counting dimension has length zero"},
      {"VAR-MISSING", Severity::Error, "mandatory variable absent"},
      {"VAR-TYPE", Severity::Error, "variable has the wrong element type"},
      {"VAR-SHAPE", Severity::Error, "variable dimensions differ from the agreed signature"},
      {"FLAG-MALFORMED", Severity::Error, "flag attribute does not start with y or n"},
      {"UNITS-MISSING", Severity::Error, "unit-carrying variable has no units attribute"},
      {"UNITS-SCALE-MISSING", Severity::Error, "units other than atomic units without scale_to_atomic_units"},
      {"UNITS-SCALE-NONPOSITIVE", Severity::Error, "scale_to_atomic_units is not positive"},
      {"SPIN-INCONSISTENT", Severity::Error, "spin dimensions form no sanctioned combination"},
      {"CRYST-SPECIES-ID-MISSING", Severity::Error, "none of atomic_numbers, atom_species_names, chemical_symbols"},
      {"CRYST-SPECIES-SOURCE", Severity::Info, "which species identification governs"},
      {"CRYST-IDENTITY-FIRST", Severity::Error, "first symmetry operation is not unity with zero translation"},
      {"CRYST-SYMMETRY-DET", Severity::Error, "symmetry matrix determinant is not +1 or -1"},
      {"CRYST-SYMMORPHIC-MISSING", Severity::Error, "symmorphic flag absent on a symmetry variable"},
      {"CRYST-SYMMORPHIC-INCONSISTENT", Severity::Warning, "symmorphic flag disagrees with the translations"},
      {"CRYST-SPACEGROUP-RANGE", Severity::Error, "space_group outside 1..232"},
      {"CRYST-SPECIES-RANGE", Severity::Error, "atom_species outside 1..number_of_atom_species"},
      {"FIELD-MISSING", Severity::Error, "requested density or potential variable absent"},
      {"FIELD-UNITS-MISSING", Severity::Error, "density or potential has no units attribute"},
      {"POT-NONE-PRESENT", Severity::Error, "potential file holds none of the three potentials"},
      {"KPT-WEIGHT-SUM", Severity::Error, "k-point weights do not sum to 1"},
      {"WF-REPRESENTATION-MISSING", Severity::Error, "neither coefficients_of_wavefunctions nor real_space_wavefunctions"},
      {"WF-DUAL-REPRESENTATION", Severity::Info, "both wavefunction representations present"},
      {"WF-BASIS-SET-MISSING", Severity::Error, "basis_set absent for a basis-set representation"},
      {"WF-BASIS-NONPW", Severity::Info, "basis set other than plane waves"},
      {"WF-NSTATES-RANGE", Severity::Error, "number_of_states outside 0..max_number_of_states"},
      {"WF-NCOEF-RANGE", Severity::Error, "number_of_coefficients outside 0..max_number_of_coefficients"},
      {"WF-NORM", Severity::Error, "wavefunction norm differs from 1"},
      {"WF-DECODE", Severity::Error, "wavefunction payload cannot be decoded"},
      {"EIG-UNITS-MISSING", Severity::Error, "eigenvalues have no units attribute"},
      {"EIG-ALL-ZERO", Severity::Info, "all eigenvalues are 0 (unknown)"},
      {"OCC-RANGE", Severity::Warning, "occupation outside [0, full occupation]"},
      {"KDEP-MISSING", Severity::Error, "k_dependent flag absent"},
      {"KDEP-KPOINT-DIM", Severity::Error, "k-point dimension inconsistent with k_dependent"},
      {"TRG-BASIS", Severity::Error, "time reversal at Gamma used without a plane-wave basis"},
      {"TRG-NO-GAMMA", Severity::Error, "time reversal at Gamma used but no Gamma point present"},
      {"TRG-INCONSISTENT", Severity::Error, "used_time_reversal_at_gamma differs between G-vectors and coefficients"},
      {"TRG-STORAGE", Severity::Error, "time-reversal storage lacks the origin or holds a +G/-G pair"},
      {"KB-FORMFACTOR-PLURAL", Severity::Info, "kb_formfactor_derivatives spelled in the plural"},
      {"TYPE-D-EXTRA", Severity::Info, "code-specific entity outside the agreed vocabulary"},
      {"NAME-SUFFIX", Severity::Warning, "file name does not end in -etsf.nc"},
      {"KIND-UNDETECTED", Severity::Error, "no file kind has all of its mandatory entities"},
  };
  return rules;
}
// clang-format on

inline const RuleInfo* find_rule(std::string_view id) {
  for (const auto& r : rule_catalogue())
    if (r.id == id) return &r;
  return nullptr;
}

struct Finding {
  std::string rule_id;
  Severity severity = Severity::Info;
  std::string location;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
  FileKind kind = FileKind::Crystallographic;
  std::vector<Finding> findings;

  bool passed() const { return count(Severity::Error) == 0; }

  std::size_t count(Severity s) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [&](const Finding& f) { return f.severity == s; }));
  }

  bool has(std::string_view rule) const {
    return std::any_of(findings.begin(), findings.end(), [&](const Finding& f) { return f.rule_id == rule; });
  }

  std::set<std::string> error_rules() const {
    std::set<std::string> out;
    for (const auto& f : findings)
      if (f.severity == Severity::Error) out.insert(f.rule_id);
    return out;
  }
};

/// `SEVERITY rule_id location: message`
inline std::string format_finding(const Finding& f) {
  std::string out(to_string(f.severity));
  out += ' ';
  out += f.rule_id;
  out += ' ';
  out += f.location.empty() ? std::string("-") : f.location;
  out += ": ";
  out += f.message;
  return out;
}

namespace detail {

inline bool is_zero_vector(const physics::Vec3& t) {
  return std::all_of(t.begin(), t.end(), [](double x) { return std::abs(x) <= physics::tolerance::zero_translation; });
}

class Checker {
 public:
  Checker(const nc::Dataset& ds, FileKind kind) : ds_(ds) { report_.kind = kind; }

  ValidationReport take() { return std::move(report_); }

  void emit(std::string_view rule, std::string location, std::string message) {
    const RuleInfo* info = find_rule(rule);
    report_.findings.push_back(
        {std::string(rule), info ? info->severity : Severity::Error, std::move(location), std::move(message)});
  }

  // -- entities common to every kind ---------------------------------------

  void global_attributes() {
    for (std::string_view name : {"file_format", "file_format_version", "Conventions"}) {
      const auto* a = nc::find_attribute(ds_.attrs, name);
      if (!a) {
        emit("ATTR-MISSING", std::string(name), "mandatory global attribute is absent");
        continue;
      }
      const auto t = nc::type_of(a->value);
      if (name == "file_format_version") {
        if ((t != nc::Type::Double && t != nc::Type::Float) || nc::size_of(a->value) != 1)
          emit("ATTR-TYPE", std::string(name), "must be a single real number");
      } else if (t != nc::Type::Char) {
        emit("ATTR-TYPE", std::string(name), "must be a character attribute");
      }
    }
    if (auto ff = nc::string_attribute(ds_.attrs, "file_format"); ff && *ff != file_format_name)
      emit("ATTR-VALUE", "file_format", "is \"" + *ff + "\", expected \"" + std::string(file_format_name) + "\"");
    for (std::string_view name : {"history", "title"}) {
      const auto* a = nc::find_attribute(ds_.attrs, name);
      if (a && nc::type_of(a->value) != nc::Type::Char)
        emit("ATTR-TYPE", std::string(name), "must be a character attribute");
    }
    for (const auto& a : ds_.attrs)
      if (!lookup(a.name, EntityKind::GlobalAttribute))
        emit("TYPE-D-EXTRA", a.name, "global attribute outside the agreed vocabulary");
  }

  void registered_dimensions() {
    for (std::size_t i = 0; i < ds_.dims.size(); ++i) {
      const auto& d = ds_.dims[i];
      const auto* e = lookup(d.name, EntityKind::Dimension);
      if (!e) {
        emit("TYPE-D-EXTRA", d.name, "dimension outside the agreed vocabulary");
        continue;
      }
      const long len = static_cast<long>(ds_.dim_length(i));
      if (e->fixed_value && len != *e->fixed_value)
        emit("DIM-VALUE", d.name, "is " + std::to_string(len) + ", must be " + std::to_string(*e->fixed_value));
      if (!e->allowed_values.empty() &&
          std::find(e->allowed_values.begin(), e->allowed_values.end(), len) == e->allowed_values.end())
        emit("DIM-RANGE", d.name, "is " + std::to_string(len) + ", not an allowed value");
    }
  }

  /// Type and signature of every registered variable that is present, plus
  /// unit attributes and flag syntax.
  void registered_variables() {
    for (const auto& v : ds_.vars) {
      const SchemaEntry* e = lookup(v.name, EntityKind::Variable);
      if (!e && v.name == "kb_formfactor_derivatives") {
        emit("KB-FORMFACTOR-PLURAL", v.name, "accepted as kb_formfactor_derivative");
        e = lookup("kb_formfactor_derivative", EntityKind::Variable);
      }
      if (!e) {
        emit("TYPE-D-EXTRA", v.name, "variable outside the agreed vocabulary");
        continue;
      }
      if (v.type() != e->type)
        emit("VAR-TYPE", v.name,
             "is " + std::string(nc::type_name(v.type())) + ", must be " + std::string(nc::type_name(e->type)));
      if (!signature_ok(v, *e)) emit("VAR-SHAPE", v.name, "dimensions " + describe(ds_.dim_names(v)) +
                                                               ", expected " + describe(e->dims));
      if (e->range && v.type() != nc::Type::Char) {
        const auto values = nc::to_doubles(v.data);
        for (std::size_t i = 0; i < values.size(); ++i)
          if (values[i] < e->range->first || values[i] > e->range->second)
            emit(v.name == "space_group" ? "CRYST-SPACEGROUP-RANGE" : "VAR-SHAPE", indexed(v.name, i, values.size()),
                 "value " + format_number(values[i]) + " outside [" + format_number(e->range->first) + ", " +
                     format_number(e->range->second) + "]");
      }
      if (e->units_required && !kind_specific_units(v.name)) {
        if (!nc::find_attribute(v.attrs, "units"))
          emit("UNITS-MISSING", v.name, "units attribute is required");
        else
          units(v);
      }
      if (e->units_optional && nc::find_attribute(v.attrs, "units")) units(v);
      for (std::string_view flag : {"symmorphic", "k_dependent", "used_time_reversal_at_gamma"}) flag_syntax(v, flag);
    }
  }

  bool signature_ok(const nc::Variable& v, const SchemaEntry& e) const {
    const auto actual = ds_.dim_names(v);
    auto matches = [&](const std::vector<std::string_view>& expected) {
      return std::equal(actual.begin(), actual.end(), expected.begin(), expected.end());
    };
    if (matches(e.dims)) return true;
    // With k_dependent = "no" the k-point dimension is omitted.
    if (v.name == "reduced_coordinates_of_plane_waves")
      return matches({names::max_number_of_coefficients, names::number_of_reduced_dimensions});
    return false;
  }

  /// Present, of the registered type and signature.
  const nc::Variable* conforming(std::string_view name) const {
    const auto* v = ds_.find_var(name);
    if (!v) return nullptr;
    const auto* e = lookup(name, EntityKind::Variable);
    if (!e || v->type() != e->type || !signature_ok(*v, *e)) return nullptr;
    return v;
  }

  bool units(const nc::Variable& v) {
    try {
      resolve_to_atomic_units(v);
      return true;
    } catch (const Error& err) {
      switch (err.code()) {
        case Errc::MissingScaleFactor: emit("UNITS-SCALE-MISSING", v.name, err.what()); break;
        case Errc::NonPositiveScale: emit("UNITS-SCALE-NONPOSITIVE", v.name, err.what()); break;
        default: emit("UNITS-MISSING", v.name, err.what()); break;
      }
      return false;
    }
  }

  void flag_syntax(const nc::Variable& v, std::string_view flag) {
    try {
      get_flag(v.attrs, flag);
    } catch (const Error& err) {
      emit("FLAG-MALFORMED", v.name + ":" + std::string(flag), err.what());
    }
  }

  /// Flag value, or Absent when missing or malformed (reported elsewhere).
  Flag flag(const nc::Variable& v, std::string_view name) const {
    try {
      return get_flag(v.attrs, name);
    } catch (const Error&) {
      return Flag::Absent;
    }
  }

  bool flag_present(const nc::Variable& v, std::string_view name) const {
    return nc::find_attribute(v.attrs, name) != nullptr;
  }

  // -- presence helpers ------------------------------------------------------

  bool require_dims(std::initializer_list<std::string_view> dims) {
    bool ok = true;
    for (auto d : dims)
      if (!ds_.dim_id(d)) {
        emit("DIM-MISSING", std::string(d), "mandatory dimension is absent");
        ok = false;
      }
    return ok;
  }

  void require_positive(std::initializer_list<std::string_view> dims) {
    for (auto d : dims)
      if (auto n = ds_.dim_length(d); n && *n == 0) emit("DIM-POSITIVE", std::string(d), "must be at least 1");
  }

  bool require_vars(std::initializer_list<std::string_view> vars) {
    bool ok = true;
    for (auto v : vars)
      if (!ds_.find_var(v)) {
        emit("VAR-MISSING", std::string(v), "mandatory variable is absent");
        ok = false;
      }
    return ok;
  }

  bool all_conforming(std::initializer_list<std::string_view> vars) const {
    return std::all_of(vars.begin(), vars.end(), [&](std::string_view v) { return conforming(v) != nullptr; });
  }

  // -- shared kind-specific pieces ------------------------------------------

  /// Identity first, determinants, symmorphic flags.
  void symmetry_operations() {
    const auto* mats = ds_.find_var("reduced_symmetry_matrices");
    const auto* trans = ds_.find_var("reduced_symmetry_translations");
    for (const auto* v : {mats, trans})
      if (v && !flag_present(*v, "symmorphic"))
        emit("CRYST-SYMMORPHIC-MISSING", v->name, "symmorphic flag attribute is required");
    if (!all_conforming({"reduced_symmetry_matrices", "reduced_symmetry_translations"})) return;

    std::vector<physics::SymmetryOp> ops;
    try {
      ops = load_symmetry_ops(ds_);
    } catch (const Error&) {
      return;
    }
    if (!ops.empty() && !ops.front().is_identity())
      emit("CRYST-IDENTITY-FIRST", "reduced_symmetry_matrices[0]",
           "first symmetry operation must be unity with translation (0,0,0)");
    bool all_zero = true;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const int det = ops[i].determinant();
      if (det != 1 && det != -1)
        emit("CRYST-SYMMETRY-DET", "reduced_symmetry_matrices[" + std::to_string(i) + "]",
             "determinant is " + std::to_string(det));
      all_zero = all_zero && is_zero_vector(ops[i].translation);
    }
    for (const auto* v : {mats, trans}) {
      const Flag f = flag(*v, "symmorphic");
      if (f == Flag::No && all_zero)
        emit("CRYST-SYMMORPHIC-INCONSISTENT", v->name + ":symmorphic", "all translations are zero, expected \"yes\"");
      if (f == Flag::Yes && !all_zero)
        emit("CRYST-SYMMORPHIC-INCONSISTENT", v->name + ":symmorphic", "non-zero translations present, expected \"no\"");
    }
  }

  const nc::Dataset& dataset() const { return ds_; }

  static std::string describe(const auto& names) {
    std::string s = "[";
    for (const auto& n : names) {
      if (s.size() > 1) s += ", ";
      s += std::string(n);
    }
    return s + "]";
  }

  static std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
  }

  static std::string indexed(const std::string& name, std::size_t i, std::size_t n) {
    return n == 1 ? name : name + "[" + std::to_string(i) + "]";
  }

 private:
  static bool kind_specific_units(std::string_view name) {
    return name == "density" || name == "eigenvalues" || name == "exchange_potential" ||
           name == "correlation_potential" || name == "exchange_correlation_potential";
  }

  const nc::Dataset& ds_;
  ValidationReport report_;
};

inline void common_checks(Checker& c) {
  c.global_attributes();
  c.registered_dimensions();
  c.registered_variables();
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline ValidationReport validate_crystallographic(const nc::Dataset& ds) {
  detail::Checker c(ds, FileKind::Crystallographic);
  detail::common_checks(c);
  c.require_dims({names::number_of_cartesian_directions, names::number_of_vectors, names::number_of_reduced_dimensions,
                  names::number_of_atoms, names::number_of_atom_species, names::number_of_symmetry_operations});
  c.require_positive({names::number_of_atoms, names::number_of_atom_species, names::number_of_symmetry_operations});
  c.require_vars({"primitive_vectors", "reduced_symmetry_matrices", "reduced_symmetry_translations", "space_group",
                  "atom_species", "reduced_atom_positions"});

  const char* governing = nullptr;
  for (const char* name : {"atomic_numbers", "atom_species_names", "chemical_symbols"})
    if (ds.find_var(name)) {
      governing = name;
      break;
    }
  if (!governing)
    c.emit("CRYST-SPECIES-ID-MISSING", "atomic_numbers",
           "one of atomic_numbers, atom_species_names, chemical_symbols is required");
  else
    c.emit("CRYST-SPECIES-SOURCE", governing, "species identified by " + std::string(governing));

  c.symmetry_operations();

  if (const auto* species = c.conforming("atom_species")) {
    const auto nspecies = ds.dim_length(names::number_of_atom_species).value_or(0);
    const auto values = nc::to_doubles(species->data);
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] < 1 || values[i] > static_cast<double>(nspecies))
        c.emit("CRYST-SPECIES-RANGE", "atom_species[" + std::to_string(i) + "]",
               "value " + detail::Checker::format_number(values[i]) + " outside [1, " + std::to_string(nspecies) + "]");
  }
  return c.take();
}

enum class ScalarFieldKind { Density, Exchange, Correlation, ExchangeCorrelation };

constexpr std::string_view variable_name(ScalarFieldKind k) {
  switch (k) {
    case ScalarFieldKind::Density: return "density";
    case ScalarFieldKind::Exchange: return "exchange_potential";
    case ScalarFieldKind::Correlation: return "correlation_potential";
    case ScalarFieldKind::ExchangeCorrelation: return "exchange_correlation_potential";
  }
  return "";
}

inline constexpr std::array<std::string_view, 3> potential_names{"exchange_potential", "correlation_potential",
                                                                 "exchange_correlation_potential"};

namespace detail {

inline ValidationReport validate_fields(const nc::Dataset& ds, FileKind kind, std::vector<std::string_view> fields,
                                        bool any_potential) {
  Checker c(ds, kind);
  common_checks(c);
  const auto rc = kind == FileKind::Density ? names::real_or_complex_density : names::real_or_complex_potential;
  c.require_dims({names::number_of_cartesian_directions, names::number_of_vectors, rc, names::number_of_components,
                  names::number_of_grid_points_vector1, names::number_of_grid_points_vector2,
                  names::number_of_grid_points_vector3});
  c.require_positive(
      {names::number_of_grid_points_vector1, names::number_of_grid_points_vector2, names::number_of_grid_points_vector3});
  c.require_vars({"primitive_vectors"});

  if (kind == FileKind::Potential &&
      std::none_of(potential_names.begin(), potential_names.end(), [&](auto n) { return ds.find_var(n) != nullptr; })) {
    c.emit("POT-NONE-PRESENT", "", "at least one of exchange_potential, correlation_potential, "
                                   "exchange_correlation_potential is required");
    return c.take();
  }
  if (any_potential) {
    fields.clear();
    for (auto n : potential_names)
      if (ds.find_var(n)) fields.push_back(n);
  }
  for (auto name : fields) {
    const auto* v = ds.find_var(name);
    if (!v) {
      c.emit("FIELD-MISSING", std::string(name), "variable is absent");
      continue;
    }
    if (!nc::find_attribute(v->attrs, "units"))
      c.emit("FIELD-UNITS-MISSING", v->name, "units attribute is required");
    else
      c.units(*v);
  }
  return c.take();
}

}  // namespace detail

inline ValidationReport validate_scalar_field(const nc::Dataset& ds, ScalarFieldKind which) {
  const bool density = which == ScalarFieldKind::Density;
  return detail::validate_fields(ds, density ? FileKind::Density : FileKind::Potential, {variable_name(which)}, false);
}

/// Every potential present is checked; at least one is required.
inline ValidationReport validate_potential(const nc::Dataset& ds) {
  return detail::validate_fields(ds, FileKind::Potential, {}, true);
}

inline ValidationReport validate_wavefunctions(const nc::Dataset& ds) {
  using detail::Checker;
  Checker c(ds, FileKind::Wavefunctions);
  detail::common_checks(c);

  const bool dims_ok =
      c.require_dims({names::character_string_length, names::number_of_cartesian_directions, names::number_of_vectors,
                      names::number_of_spinor_components, names::number_of_symmetry_operations,
                      names::number_of_reduced_dimensions, names::max_number_of_states, names::number_of_kpoints,
                      names::number_of_spins});
  c.require_positive({names::number_of_kpoints, names::number_of_symmetry_operations});

  bool spin_ok = dims_ok;
  if (dims_ok) {
    try {
      spin_mode(ds);
    } catch (const Error& err) {
      c.emit("SPIN-INCONSISTENT", std::string(names::number_of_spins), err.what());
      spin_ok = false;
    }
  }

  const auto* coef = ds.find_var("coefficients_of_wavefunctions");
  const auto* rs = ds.find_var("real_space_wavefunctions");
  bool repr_ok = true;
  if (!coef && !rs) {
    c.emit("WF-REPRESENTATION-MISSING", "",
           "either coefficients_of_wavefunctions or real_space_wavefunctions is required");
    repr_ok = false;
  }
  if (coef && rs) c.emit("WF-DUAL-REPRESENTATION", "", "both representations present; both are checked");

  bool vars_ok = c.require_vars({"primitive_vectors", "reduced_symmetry_matrices", "reduced_symmetry_translations",
                                 "reduced_coordinates_of_kpoints", "kpoint_weights", "number_of_states", "eigenvalues",
                                 "occupations"});
  c.symmetry_operations();

  // States.
  if (const auto* ns = ds.find_var("number_of_states")) {
    if (!c.flag_present(*ns, "k_dependent"))
      c.emit("KDEP-MISSING", "number_of_states:k_dependent", "k_dependent flag attribute is required");
    else if (c.flag(*ns, "k_dependent") == Flag::Yes && c.conforming("number_of_states")) {
      const double max = static_cast<double>(ds.dim_length(names::max_number_of_states).value_or(0));
      const auto values = nc::to_doubles(ns->data);
      for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] < 0 || values[i] > max)
          c.emit("WF-NSTATES-RANGE", "number_of_states[" + std::to_string(i) + "]",
                 "value " + Checker::format_number(values[i]) + " outside [0, max_number_of_states]");
    }
  }
  if (const auto* eig = ds.find_var("eigenvalues")) {
    if (!nc::find_attribute(eig->attrs, "units"))
      c.emit("EIG-UNITS-MISSING", "eigenvalues", "units attribute is required");
    else
      c.units(*eig);
    if (eig->type() != nc::Type::Char) {
      const auto values = nc::to_doubles(eig->data);
      if (!values.empty() && std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; }))
        c.emit("EIG-ALL-ZERO", "eigenvalues", "all eigenvalues are 0 (unknown)");
    }
  }

  // K-points.
  if (const auto* w = c.conforming("kpoint_weights")) {
    const auto values = nc::to_doubles(w->data);
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    if (std::abs(sum - 1.0) > physics::tolerance::weight_sum)
      c.emit("KPT-WEIGHT-SUM", "kpoint_weights", "weights sum to " + Checker::format_number(sum) + ", must be 1");
  }

  // Plane-wave (or other basis set) representation.
  if (coef) {
    c.require_dims({names::max_number_of_coefficients, names::real_or_complex_coefficients});
    c.require_positive({names::max_number_of_coefficients});
    std::string basis;
    if (!ds.find_var("basis_set")) {
      c.emit("WF-BASIS-SET-MISSING", "basis_set", "basis_set is required with coefficients_of_wavefunctions");
    } else {
      basis = char_value(ds, "basis_set");
      if (basis != "plane_waves")
        c.emit("WF-BASIS-NONPW", "basis_set", "basis set \"" + basis + "\"; plane-wave checks do not apply");
    }
    const bool plane_waves = basis.empty() || basis == "plane_waves";
    vars_ok = c.require_vars({"number_of_coefficients"}) && vars_ok;
    if (plane_waves) vars_ok = c.require_vars({"reduced_coordinates_of_plane_waves"}) && vars_ok;

    if (const auto* nc_var = ds.find_var("number_of_coefficients")) {
      if (!c.flag_present(*nc_var, "k_dependent"))
        c.emit("KDEP-MISSING", "number_of_coefficients:k_dependent", "k_dependent flag attribute is required");
      else if (c.flag(*nc_var, "k_dependent") == Flag::Yes && c.conforming("number_of_coefficients")) {
        const double max = static_cast<double>(ds.dim_length(names::max_number_of_coefficients).value_or(0));
        const auto values = nc::to_doubles(nc_var->data);
        for (std::size_t i = 0; i < values.size(); ++i)
          if (values[i] < 0 || values[i] > max)
            c.emit("WF-NCOEF-RANGE", "number_of_coefficients[" + std::to_string(i) + "]",
                   "value " + Checker::format_number(values[i]) + " outside [0, max_number_of_coefficients]");
      }
    }
    const auto* gv = ds.find_var("reduced_coordinates_of_plane_waves");
    if (gv) {
      if (!c.flag_present(*gv, "k_dependent")) {
        c.emit("KDEP-MISSING", "reduced_coordinates_of_plane_waves:k_dependent",
               "k_dependent flag attribute is required");
      } else if (c.conforming(gv->name)) {
        const bool has_k = ds.dim_names(*gv).front() == names::number_of_kpoints;
        const Flag f = c.flag(*gv, "k_dependent");
        if (f == Flag::No && has_k)
          c.emit("KDEP-KPOINT-DIM", gv->name, "k_dependent is \"no\": the number_of_kpoints dimension must be omitted");
        if (f == Flag::Yes && !has_k)
          c.emit("KDEP-KPOINT-DIM", gv->name, "k_dependent is \"yes\": the number_of_kpoints dimension is required");
      }
    }

    const Flag tr_coef = c.flag(*coef, "used_time_reversal_at_gamma");
    const Flag tr_g = gv ? c.flag(*gv, "used_time_reversal_at_gamma") : Flag::Absent;
    auto yes = [](Flag f) { return f == Flag::Yes; };
    if (gv && yes(tr_coef) != yes(tr_g))
      c.emit("TRG-INCONSISTENT", "used_time_reversal_at_gamma",
             "must be set identically on reduced_coordinates_of_plane_waves and coefficients_of_wavefunctions");
    if (yes(tr_coef) || yes(tr_g)) {
      if (basis != "plane_waves")
        c.emit("TRG-BASIS", "used_time_reversal_at_gamma", "only allowed for the plane-wave basis set");
      if (const auto* kp = c.conforming("reduced_coordinates_of_kpoints")) {
        const auto k = nc::to_doubles(kp->data);
        bool gamma = false;
        for (std::size_t i = 0; i + 2 < k.size(); i += 3)
          gamma = gamma || (std::abs(k[i]) <= physics::tolerance::gamma_point &&
                            std::abs(k[i + 1]) <= physics::tolerance::gamma_point &&
                            std::abs(k[i + 2]) <= physics::tolerance::gamma_point);
        if (!gamma)
          c.emit("TRG-NO-GAMMA", "reduced_coordinates_of_kpoints", "time reversal at Gamma needs a Gamma k-point");
      }
    }
  }

  if (rs) {
    c.require_dims({names::number_of_grid_points_vector1, names::number_of_grid_points_vector2,
                    names::number_of_grid_points_vector3, names::real_or_complex_wavefunctions});
    c.require_positive({names::number_of_grid_points_vector1, names::number_of_grid_points_vector2,
                        names::number_of_grid_points_vector3});
  }

  // Occupations and norms need a structurally sound file.
  const auto report_so_far = c.take();
  const bool structural_errors = !report_so_far.passed();
  detail::Checker tail(ds, FileKind::Wavefunctions);
  ValidationReport report = report_so_far;
  if (!structural_errors && dims_ok && spin_ok && repr_ok && vars_ok) {
    try {
      const auto wfs = load_wavefunctions(ds);
      const double full = wfs.spin_mode() == SpinMode::Unpolarized ? 2.0 : 1.0;
      for (std::size_t s = 0; s < wfs.spins; ++s)
        for (std::size_t k = 0; k < wfs.kpoint_count(); ++k)
          for (std::size_t n = 0; n < wfs.states_at(s, k); ++n) {
            const double f = wfs.occupation(s, k, n);
            if (f < 0.0 || f > full)
              tail.emit("OCC-RANGE",
                        "occupations[" + std::to_string(s) + "," + std::to_string(k) + "," + std::to_string(n) + "]",
                        "value " + Checker::format_number(f) + " outside [0, " + Checker::format_number(full) + "]");
          }
      for (const auto& n : physics::state_norms(wfs))
        if (std::abs(n.norm - 1.0) > physics::tolerance::state_norm)
          tail.emit("WF-NORM",
                    (wfs.plane_waves ? std::string("coefficients_of_wavefunctions[") : std::string("real_space_wavefunctions[")) +
                        std::to_string(n.spin) + "," + std::to_string(n.kpoint) + "," + std::to_string(n.state) + "]",
                    "norm " + Checker::format_number(n.norm) + " differs from 1 by more than 1e-6");
    } catch (const Error& err) {
      if (err.code() == Errc::MissingOrigin || err.code() == Errc::PairPresentTwice)
        tail.emit("TRG-STORAGE", "reduced_coordinates_of_plane_waves", err.what());
      else
        tail.emit("WF-DECODE", "", err.what());
    }
  }
  auto extra = tail.take();
  report.findings.insert(report.findings.end(), extra.findings.begin(), extra.findings.end());
  return report;
}

/// Conformance report for one kind.
inline ValidationReport validate(const nc::Dataset& ds, FileKind kind) {
  switch (kind) {
    case FileKind::Crystallographic: return validate_crystallographic(ds);
    case FileKind::Density: return validate_scalar_field(ds, ScalarFieldKind::Density);
    case FileKind::Potential: return validate_potential(ds);
    case FileKind::Wavefunctions: return validate_wavefunctions(ds);
  }
  return {};
}

inline constexpr std::string_view etsf_suffix = "-etsf.nc";

/// Warning when the file name lacks the conventional suffix.
inline std::optional<Finding> validate_filename(std::string_view path) {
  const auto slash = path.find_last_of('/');
  const auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
  if (name.size() >= etsf_suffix.size() && name.substr(name.size() - etsf_suffix.size()) == etsf_suffix)
    return std::nullopt;
  return Finding{"NAME-SUFFIX", Severity::Warning, std::string(name),
                 "file name does not end in \"" + std::string(etsf_suffix) + "\""};
}

}  // namespace etsf
