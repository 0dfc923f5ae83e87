#pragma once

// Vocabulary of ETSF files: the registry of agreed names (attributes,
// dimensions, variables), flag attributes, unit scaling, spin modes and
// file-kind detection.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "etsf/error.hpp"
#include "etsf/netcdf.hpp"

namespace etsf {

enum class FileKind : std::uint8_t { Crystallographic, Density, Potential, Wavefunctions };

inline constexpr std::array<FileKind, 4> all_file_kinds{FileKind::Crystallographic, FileKind::Density,
                                                        FileKind::Potential, FileKind::Wavefunctions};

constexpr std::string_view to_string(FileKind k) {
  switch (k) {
    case FileKind::Crystallographic: return "crystallographic";
    case FileKind::Density: return "density";
    case FileKind::Potential: return "potential";
    case FileKind::Wavefunctions: return "wavefunctions";
  }
  return "?";
}

inline std::optional<FileKind> parse_file_kind(std::string_view s) {
  for (auto k : all_file_kinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Small set of file kinds.
class FileKinds {
 public:
  constexpr FileKinds() = default;
  constexpr FileKinds(std::initializer_list<FileKind> kinds) {
    for (auto k : kinds) insert(k);
  }
  constexpr void insert(FileKind k) { bits_ |= bit(k); }
  constexpr bool contains(FileKind k) const { return (bits_ & bit(k)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  std::vector<FileKind> list() const {
    std::vector<FileKind> out;
    for (auto k : all_file_kinds)
      if (contains(k)) out.push_back(k);
    return out;
  }
  friend constexpr bool operator==(FileKinds, FileKinds) = default;

 private:
  static constexpr std::uint8_t bit(FileKind k) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k)); }
  std::uint8_t bits_ = 0;
};

enum class EntityKind { GlobalAttribute, VariableAttribute, Dimension, Variable };

/// Subject area of a registry entry.
enum class Topic {
  Header,
  Units,
  Dimension,
  SplittingDimension,
  Atoms,
  Electrons,
  Reciprocal,
  Structure,
  Density,
  Potential,
  Kpoints,
  States,
  PlaneWaves,
  RealSpace,
  GwKb
};

/// One agreed name of the vocabulary.
struct SchemaEntry {
  std::string_view name;
  EntityKind kind;
  nc::Type type;
  std::vector<std::string_view> dims;  ///< row-major, slowest first
  std::optional<long> fixed_value;     ///< dimensions with a mandated length
  std::vector<long> allowed_values;    ///< enumerated dimension lengths
  std::optional<std::pair<double, double>> range;  ///< inclusive bounds on variable values
  FileKinds required_in;
  Topic topic = Topic::Header;
  bool units_required = false;  ///< "units" attribute mandatory
  bool units_optional = false;  ///< may carry units; absent means atomic units
  std::vector<std::string_view> applies_to;  ///< owners of a variable attribute
};

namespace names {
inline constexpr std::string_view character_string_length = "character_string_length";
inline constexpr std::string_view number_of_cartesian_directions = "number_of_cartesian_directions";
inline constexpr std::string_view number_of_reduced_dimensions = "number_of_reduced_dimensions";
inline constexpr std::string_view number_of_vectors = "number_of_vectors";
inline constexpr std::string_view number_of_symmetry_operations = "number_of_symmetry_operations";
inline constexpr std::string_view number_of_atoms = "number_of_atoms";
inline constexpr std::string_view number_of_atom_species = "number_of_atom_species";
inline constexpr std::string_view symbol_length = "symbol_length";
inline constexpr std::string_view max_number_of_states = "max_number_of_states";
inline constexpr std::string_view number_of_kpoints = "number_of_kpoints";
inline constexpr std::string_view number_of_spins = "number_of_spins";
inline constexpr std::string_view number_of_spinor_components = "number_of_spinor_components";
inline constexpr std::string_view number_of_components = "number_of_components";
inline constexpr std::string_view max_number_of_coefficients = "max_number_of_coefficients";
inline constexpr std::string_view number_of_grid_points_vector1 = "number_of_grid_points_vector1";
inline constexpr std::string_view number_of_grid_points_vector2 = "number_of_grid_points_vector2";
inline constexpr std::string_view number_of_grid_points_vector3 = "number_of_grid_points_vector3";
inline constexpr std::string_view real_or_complex_coefficients = "real_or_complex_coefficients";
inline constexpr std::string_view real_or_complex_density = "real_or_complex_density";
inline constexpr std::string_view real_or_complex_gw_corrections = "real_or_complex_gw_corrections";
inline constexpr std::string_view real_or_complex_potential = "real_or_complex_potential";
inline constexpr std::string_view real_or_complex_wavefunctions = "real_or_complex_wavefunctions";
inline constexpr std::string_view max_number_of_angular_momenta = "max_number_of_angular_momenta";
inline constexpr std::string_view max_number_of_projectors = "max_number_of_projectors";
}  // namespace names

namespace detail {

inline std::vector<SchemaEntry> build_registry() {
  using T = nc::Type;
  using K = EntityKind;
  using F = FileKind;
  using P = Topic;
  const FileKinds all{F::Crystallographic, F::Density, F::Potential, F::Wavefunctions};
  const FileKinds cry{F::Crystallographic};
  const FileKinds field{F::Density, F::Potential};
  const FileKinds wf{F::Wavefunctions};
  const FileKinds cry_wf{F::Crystallographic, F::Wavefunctions};
  const FileKinds geom{F::Crystallographic, F::Density, F::Potential, F::Wavefunctions};

  std::vector<SchemaEntry> r;
  auto entry = [](std::string_view n, K k, T t, FileKinds req, Topic topic) {
    SchemaEntry e{};
    e.name = n;
    e.kind = k;
    e.type = t;
    e.required_in = req;
    e.topic = topic;
    return e;
  };
  auto gatt = [&](std::string_view n, T t, FileKinds req, Topic topic) {
    r.push_back(entry(n, K::GlobalAttribute, t, req, topic));
  };
  auto vatt = [&](std::string_view n, T t, Topic topic, std::vector<std::string_view> owners) {
    auto e = entry(n, K::VariableAttribute, t, {}, topic);
    e.applies_to = std::move(owners);
    r.push_back(std::move(e));
  };
  auto dim = [&](std::string_view n, std::optional<long> fixed, std::vector<long> allowed, FileKinds req, Topic topic) {
    auto e = entry(n, K::Dimension, T::Int, req, topic);
    e.fixed_value = fixed;
    e.allowed_values = std::move(allowed);
    r.push_back(std::move(e));
  };
  auto var = [&](std::string_view n, T t, std::vector<std::string_view> dims, FileKinds req, Topic topic) -> SchemaEntry& {
    auto e = entry(n, K::Variable, t, req, topic);
    e.dims = std::move(dims);
    r.push_back(std::move(e));
    return r.back();
  };

  gatt("file_format", T::Char, all, P::Header);
  gatt("file_format_version", T::Double, all, P::Header);
  gatt("Conventions", T::Char, all, P::Header);
  gatt("history", T::Char, {}, P::Header);
  gatt("title", T::Char, {}, P::Header);

  vatt("units", T::Char, P::Units, {});
  vatt("scale_to_atomic_units", T::Double, P::Units, {});

  dim(names::character_string_length, 80, {}, wf, P::Dimension);
  dim(names::real_or_complex_coefficients, {}, {1, 2}, {}, P::Dimension);
  dim(names::real_or_complex_density, {}, {1, 2}, {}, P::Dimension);
  dim(names::real_or_complex_gw_corrections, {}, {1, 2}, {}, P::Dimension);
  dim(names::real_or_complex_potential, {}, {1, 2}, {}, P::Dimension);
  dim(names::real_or_complex_wavefunctions, {}, {1, 2}, {}, P::Dimension);
  dim(names::number_of_cartesian_directions, 3, {}, geom, P::Dimension);
  dim(names::number_of_reduced_dimensions, 3, {}, cry_wf, P::Dimension);
  dim(names::number_of_vectors, 3, {}, geom, P::Dimension);
  dim(names::number_of_symmetry_operations, {}, {}, cry_wf, P::Dimension);
  dim(names::number_of_atoms, {}, {}, cry, P::Dimension);
  dim(names::number_of_atom_species, {}, {}, cry, P::Dimension);
  dim(names::symbol_length, 2, {}, {}, P::Dimension);

  dim(names::max_number_of_states, {}, {}, wf, P::SplittingDimension);
  dim(names::number_of_kpoints, {}, {}, wf, P::SplittingDimension);
  dim(names::number_of_spins, {}, {1, 2}, wf, P::SplittingDimension);
  dim(names::number_of_spinor_components, {}, {1, 2}, wf, P::SplittingDimension);
  dim(names::number_of_components, {}, {1, 2, 4}, field, P::SplittingDimension);
  dim(names::max_number_of_coefficients, {}, {}, {}, P::SplittingDimension);
  dim(names::number_of_grid_points_vector1, {}, {}, field, P::SplittingDimension);
  dim(names::number_of_grid_points_vector2, {}, {}, field, P::SplittingDimension);
  dim(names::number_of_grid_points_vector3, {}, {}, field, P::SplittingDimension);

  dim(names::max_number_of_angular_momenta, {}, {0, 1, 2, 3, 4}, {}, P::GwKb);
  dim(names::max_number_of_projectors, {}, {}, {}, P::GwKb);

  var("valence_charges", T::Double, {"number_of_atom_species"}, {}, P::Atoms);
  var("pseudopotential_types", T::Char, {"number_of_atom_species", "character_string_length"}, {}, P::Atoms);

  var("number_of_electrons", T::Int, {}, {}, P::Electrons);
  var("exchange_functional", T::Char, {"character_string_length"}, {}, P::Electrons);
  var("correlation_functional", T::Char, {"character_string_length"}, {}, P::Electrons);
  var("fermi_energy", T::Double, {}, {}, P::Electrons).units_required = true;
  var("smearing_scheme", T::Char, {"character_string_length"}, {}, P::Electrons);
  var("smearing_width", T::Double, {}, {}, P::Electrons).units_required = true;

  var("kinetic_energy_cutoff", T::Double, {}, {}, P::Reciprocal).units_required = true;
  var("kpoint_grid_shift", T::Double, {"number_of_reduced_dimensions"}, {}, P::Reciprocal);
  var("kpoint_grid_vectors", T::Double, {"number_of_vectors", "number_of_reduced_dimensions"}, {}, P::Reciprocal);
  var("monkhorst_pack_folding", T::Int, {"number_of_vectors"}, {}, P::Reciprocal);

  var("primitive_vectors", T::Double, {"number_of_vectors", "number_of_cartesian_directions"}, geom, P::Structure)
      .units_optional = true;
  var("reduced_symmetry_matrices", T::Int,
      {"number_of_symmetry_operations", "number_of_reduced_dimensions", "number_of_reduced_dimensions"}, cry_wf, P::Structure);
  var("reduced_symmetry_translations", T::Double, {"number_of_symmetry_operations", "number_of_reduced_dimensions"},
      cry_wf, P::Structure);
  var("space_group", T::Int, {}, cry, P::Structure).range = std::pair{1.0, 232.0};
  var("atom_species", T::Int, {"number_of_atoms"}, cry, P::Structure);
  var("reduced_atom_positions", T::Double, {"number_of_atoms", "number_of_reduced_dimensions"}, cry, P::Structure);
  var("atomic_numbers", T::Double, {"number_of_atom_species"}, {}, P::Structure);
  var("atom_species_names", T::Char, {"number_of_atom_species", "character_string_length"}, {}, P::Structure);
  var("chemical_symbols", T::Char, {"number_of_atom_species", "symbol_length"}, {}, P::Structure);
  vatt("symmorphic", T::Char, P::Structure, {"reduced_symmetry_matrices", "reduced_symmetry_translations"});

  const std::vector<std::string_view> grid{"number_of_components", "number_of_grid_points_vector3",
                                           "number_of_grid_points_vector2", "number_of_grid_points_vector1"};
  auto with = [](std::vector<std::string_view> v, std::string_view last) {
    v.push_back(last);
    return v;
  };
  var("density", T::Double, with(grid, "real_or_complex_density"), {F::Density}, P::Density).units_required = true;
  for (auto n : {"exchange_potential", "correlation_potential", "exchange_correlation_potential"})
    var(n, T::Double, with(grid, "real_or_complex_potential"), {}, P::Potential).units_required = true;

  var("reduced_coordinates_of_kpoints", T::Double, {"number_of_kpoints", "number_of_reduced_dimensions"}, wf, P::Kpoints);
  var("kpoint_weights", T::Double, {"number_of_kpoints"}, wf, P::Kpoints);

  var("number_of_states", T::Int, {"number_of_spins", "number_of_kpoints"}, wf, P::States);
  var("eigenvalues", T::Double, {"number_of_spins", "number_of_kpoints", "max_number_of_states"}, wf, P::States)
      .units_required = true;
  var("occupations", T::Double, {"number_of_spins", "number_of_kpoints", "max_number_of_states"}, wf, P::States);
  vatt("k_dependent", T::Char, P::States, {"number_of_states", "number_of_coefficients", "reduced_coordinates_of_plane_waves"});

  var("basis_set", T::Char, {"character_string_length"}, {}, P::PlaneWaves);
  var("number_of_coefficients", T::Int, {"number_of_kpoints"}, {}, P::PlaneWaves);
  var("reduced_coordinates_of_plane_waves", T::Int,
      {"number_of_kpoints", "max_number_of_coefficients", "number_of_reduced_dimensions"}, {}, P::PlaneWaves);
  var("coefficients_of_wavefunctions", T::Double,
      {"number_of_spins", "number_of_kpoints", "max_number_of_states", "number_of_spinor_components",
       "max_number_of_coefficients", "real_or_complex_coefficients"},
      {}, P::PlaneWaves);
  vatt("used_time_reversal_at_gamma", T::Char, P::PlaneWaves,
       {"reduced_coordinates_of_plane_waves", "coefficients_of_wavefunctions"});

  var("real_space_wavefunctions", T::Double,
      {"number_of_spins", "number_of_kpoints", "max_number_of_states", "number_of_spinor_components",
       "number_of_grid_points_vector3", "number_of_grid_points_vector2", "number_of_grid_points_vector1",
       "real_or_complex_wavefunctions"},
      {}, P::RealSpace);

  var("gw_corrections", T::Double,
      {"number_of_spins", "number_of_kpoints", "max_number_of_states", "real_or_complex_gw_corrections"}, {}, P::GwKb)
      .units_required = true;
  var("kb_formfactor_sign", T::Int,
      {"number_of_atom_species", "max_number_of_angular_momenta", "max_number_of_projectors"}, {}, P::GwKb);
  const std::vector<std::string_view> kb{"number_of_atom_species", "max_number_of_angular_momenta",
                                         "max_number_of_projectors", "number_of_kpoints",
                                         "max_number_of_coefficients"};
  var("kb_formfactors", T::Double, kb, {}, P::GwKb);
  var("kb_formfactor_derivative", T::Double, kb, {}, P::GwKb);
  return r;
}

}  // namespace detail

/// The complete static vocabulary.
inline const std::vector<SchemaEntry>& registry() {
  static const std::vector<SchemaEntry> entries = detail::build_registry();
  return entries;
}

inline const SchemaEntry* lookup(std::string_view name) {
  for (const auto& e : registry())
    if (e.name == name) return &e;
  return nullptr;
}

inline const SchemaEntry* lookup(std::string_view name, EntityKind kind) {
  for (const auto& e : registry())
    if (e.name == name && e.kind == kind) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Flags

enum class Flag { Yes, No, Absent };

/// Reads a flag-like attribute. Only the first character is significant.
inline Flag get_flag(const nc::AttributeList& attrs, std::string_view name) {
  const auto* a = nc::find_attribute(attrs, name);
  if (!a) return Flag::Absent;
  const auto* s = std::get_if<std::string>(&a->value);
  if (!s) throw Error(Errc::MalformedFlag, "flag '" + std::string(name) + "' is not a character attribute");
  if (s->empty()) throw Error(Errc::MalformedFlag, "flag '" + std::string(name) + "' is empty");
  switch ((*s)[0]) {
    case 'y':
    case 'Y': return Flag::Yes;
    case 'n':
    case 'N': return Flag::No;
    default: throw Error(Errc::MalformedFlag, "flag '" + std::string(name) + "' has value \"" + *s + "\"");
  }
}

// ---------------------------------------------------------------------------
// Units

inline constexpr std::string_view atomic_units = "atomic units";

struct UnitScale {
  std::string units;
  double scale_to_atomic_units = 1.0;
};

/// True for variables whose "units" attribute is mandatory.
inline bool carries_units(std::string_view var) {
  const auto* e = lookup(var, EntityKind::Variable);
  return e && e->units_required;
}

/// Factor converting the stored values of `var` to atomic units.
inline UnitScale resolve_to_atomic_units(const nc::Variable& var) {
  const auto* entry = lookup(var.name, EntityKind::Variable);
  const bool optional = entry && entry->units_optional;
  const auto* units_attr = nc::find_attribute(var.attrs, "units");
  if (!units_attr) {
    if (optional) return {std::string(atomic_units), 1.0};
    throw Error(Errc::MissingUnits, "variable '" + var.name + "' has no units attribute");
  }
  const auto* units = std::get_if<std::string>(&units_attr->value);
  if (!units) throw Error(Errc::MissingUnits, "units of '" + var.name + "' is not a character attribute");
  if (*units == atomic_units) return {*units, 1.0};

  const auto* scale = nc::find_attribute(var.attrs, "scale_to_atomic_units");
  if (!scale || nc::type_of(scale->value) == nc::Type::Char || nc::size_of(scale->value) == 0)
    throw Error(Errc::MissingScaleFactor,
                "variable '" + var.name + "' has units \"" + *units + "\" but no scale_to_atomic_units");
  const double factor = nc::to_doubles(scale->value).front();
  if (!(factor > 0.0))
    throw Error(Errc::NonPositiveScale, "scale_to_atomic_units of '" + var.name + "' is not positive");
  return {*units, factor};
}

// ---------------------------------------------------------------------------
// Spin modes

struct SpinTriple {
  std::size_t spins = 1;
  std::size_t spinor_components = 1;
  std::size_t components = 1;
  friend bool operator==(const SpinTriple&, const SpinTriple&) = default;
};

enum class SpinMode { Unpolarized, Collinear, NonCollinear };

constexpr std::string_view to_string(SpinMode m) {
  switch (m) {
    case SpinMode::Unpolarized: return "unpolarized";
    case SpinMode::Collinear: return "collinear";
    case SpinMode::NonCollinear: return "non-collinear";
  }
  return "?";
}

constexpr SpinTriple triple_of(SpinMode m) {
  switch (m) {
    case SpinMode::Unpolarized: return {1, 1, 1};
    case SpinMode::Collinear: return {2, 1, 2};
    case SpinMode::NonCollinear: return {1, 2, 4};
  }
  return {};
}

inline SpinMode spin_mode(const SpinTriple& t) {
  for (auto m : {SpinMode::Unpolarized, SpinMode::Collinear, SpinMode::NonCollinear})
    if (triple_of(m) == t) return m;
  throw Error(Errc::InconsistentSpinDimensions,
              "(number_of_spins, number_of_spinor_components, number_of_components) = (" + std::to_string(t.spins) +
                  "," + std::to_string(t.spinor_components) + "," + std::to_string(t.components) + ")");
}

/// Spin mode from the dataset's dimensions. number_of_components may be
/// absent (wavefunction files); it is then implied by the other two.
inline SpinMode spin_mode(const nc::Dataset& ds) {
  auto spins = ds.dim_length(names::number_of_spins);
  auto spinors = ds.dim_length(names::number_of_spinor_components);
  auto comps = ds.dim_length(names::number_of_components);
  if (!spins || !spinors)
    throw Error(Errc::InconsistentSpinDimensions, "number_of_spins and number_of_spinor_components are required");
  SpinTriple t{*spins, *spinors, comps.value_or(0)};
  if (!comps) t.components = (*spins == 2) ? 2 : (*spinors == 2 ? 4 : 1);
  return spin_mode(t);
}

// ---------------------------------------------------------------------------
// File-kind detection

/// Presence checklist for one file kind: every name in `required`, and at
/// least one name of each group in `any_of`.
struct Checklist {
  std::vector<std::string_view> global_attributes;
  std::vector<std::string_view> dimensions;
  std::vector<std::string_view> variables;
  std::vector<std::vector<std::string_view>> any_dimension;
  std::vector<std::vector<std::string_view>> any_variable;
};

inline const Checklist& checklist(FileKind kind) {
  static const Checklist header_only{{"file_format", "file_format_version", "Conventions"}, {}, {}, {}, {}};
  static const Checklist crystallographic = [] {
    Checklist c = header_only;
    c.dimensions = {names::number_of_cartesian_directions, names::number_of_vectors, names::number_of_atoms,
                    names::number_of_atom_species, names::number_of_symmetry_operations};
    c.variables = {"primitive_vectors", "reduced_symmetry_matrices", "reduced_symmetry_translations",
                   "space_group",       "atom_species",              "reduced_atom_positions"};
    c.any_variable = {{"atomic_numbers", "atom_species_names", "chemical_symbols"}};
    return c;
  }();
  static const Checklist density = [] {
    Checklist c = header_only;
    c.dimensions = {names::number_of_cartesian_directions, names::number_of_vectors, names::real_or_complex_density,
                    names::number_of_components,           names::number_of_grid_points_vector1,
                    names::number_of_grid_points_vector2,  names::number_of_grid_points_vector3};
    c.variables = {"primitive_vectors", "density"};
    return c;
  }();
  static const Checklist potential = [] {
    Checklist c = header_only;
    c.dimensions = {names::number_of_cartesian_directions, names::number_of_vectors, names::real_or_complex_potential,
                    names::number_of_components,           names::number_of_grid_points_vector1,
                    names::number_of_grid_points_vector2,  names::number_of_grid_points_vector3};
    c.variables = {"primitive_vectors"};
    c.any_variable = {{"exchange_potential", "correlation_potential", "exchange_correlation_potential"}};
    return c;
  }();
  static const Checklist wavefunctions = [] {
    Checklist c = header_only;
    c.dimensions = {names::character_string_length,       names::number_of_cartesian_directions,
                    names::number_of_vectors,             names::number_of_spinor_components,
                    names::number_of_symmetry_operations, names::number_of_reduced_dimensions,
                    names::max_number_of_states,          names::number_of_kpoints,
                    names::number_of_spins};
    c.any_dimension = {{names::real_or_complex_coefficients, names::real_or_complex_wavefunctions},
                       {names::max_number_of_coefficients, names::number_of_grid_points_vector1}};
    c.variables = {"primitive_vectors", "reduced_symmetry_translations", "reduced_symmetry_matrices",
                   "reduced_coordinates_of_kpoints", "kpoint_weights", "eigenvalues", "occupations"};
    c.any_variable = {{"coefficients_of_wavefunctions", "real_space_wavefunctions"}};
    return c;
  }();
  switch (kind) {
    case FileKind::Crystallographic: return crystallographic;
    case FileKind::Density: return density;
    case FileKind::Potential: return potential;
    case FileKind::Wavefunctions: return wavefunctions;
  }
  return header_only;
}

/// Kinds whose mandatory entities are all present. Presence only; see
/// validate.hpp for conformance checking.
inline FileKinds classify(const nc::Dataset& ds) {
  FileKinds kinds;
  for (auto kind : all_file_kinds) {
    const auto& c = checklist(kind);
    auto has_dim = [&](std::string_view n) { return ds.dim_id(n).has_value(); };
    auto has_var = [&](std::string_view n) { return ds.find_var(n) != nullptr; };
    bool ok = std::all_of(c.global_attributes.begin(), c.global_attributes.end(),
                          [&](std::string_view n) { return nc::find_attribute(ds.attrs, n) != nullptr; }) &&
              std::all_of(c.dimensions.begin(), c.dimensions.end(), has_dim) &&
              std::all_of(c.variables.begin(), c.variables.end(), has_var);
    for (const auto& group : c.any_dimension) ok = ok && std::any_of(group.begin(), group.end(), has_dim);
    for (const auto& group : c.any_variable) ok = ok && std::any_of(group.begin(), group.end(), has_var);
    if (ok) kinds.insert(kind);
  }
  return kinds;
}

}  // namespace etsf
