#pragma once

// etsf-kit command dispatch. run() takes the argument vector without the
// program name and writes to the supplied streams; main.cpp is a thin shell.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "etsf/content.hpp"
#include "etsf/manifest.hpp"
#include "etsf/model.hpp"
#include "etsf/netcdf.hpp"
#include "etsf/physics.hpp"
#include "etsf/validate.hpp"

namespace etsf::kit {

enum Exit : int { Ok = 0, Invalid = 1, Malformed = 2, Usage = 3 };

struct Style {
  bool color = false;

  std::string severity(Severity s) const {
    const std::string word(to_string(s));
    if (!color) return word;
    switch (s) {
      case Severity::Error: return "\033[31m" + word + "\033[0m";
      case Severity::Warning: return "\033[33m" + word + "\033[0m";
      case Severity::Info: return "\033[36m" + word + "\033[0m";
    }
    return word;
  }
};

/// ETSF_KIT_COLOR = always | never | auto (colour only on a terminal).
inline Style style_from_environment(bool terminal) {
  const char* env = std::getenv("ETSF_KIT_COLOR");
  const std::string mode = env ? env : "auto";
  if (mode == "always") return {true};
  if (mode == "never") return {false};
  return {terminal};
}

namespace detail {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format6(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline std::string format15(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

inline std::string array_text(const nc::Array& a) {
  if (const auto* s = std::get_if<std::string>(&a)) return manifest::detail::quote(nc::strip_padding(*s));
  std::string out;
  const auto values = nc::to_doubles(a);
  const bool integral = nc::type_of(a) != nc::Type::Float && nc::type_of(a) != nc::Type::Double;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += integral ? std::to_string(static_cast<long long>(values[i])) : format6(values[i]);
  }
  return out;
}

/// Values in rows of the last extent.
inline void print_values(std::ostream& out, const nc::Array& a, const std::vector<std::size_t>& shape) {
  const std::size_t width = shape.empty() ? 0 : shape.back();
  if (const auto* s = std::get_if<std::string>(&a)) {
    if (width == 0) {
      out << "  " << manifest::detail::quote(nc::strip_padding(*s)) << "\n";
      return;
    }
    for (std::size_t i = 0; i < s->size(); i += width)
      out << "  " << manifest::detail::quote(nc::strip_padding(std::string_view(*s).substr(i, width))) << "\n";
    return;
  }
  const auto values = nc::to_doubles(a);
  const bool integral = nc::type_of(a) != nc::Type::Float && nc::type_of(a) != nc::Type::Double;
  const std::size_t row = width == 0 ? std::max<std::size_t>(values.size(), 1) : width;
  for (std::size_t i = 0; i < values.size(); i += row) {
    out << " ";
    for (std::size_t j = i; j < std::min(values.size(), i + row); ++j) {
      out << (j > i ? ", " : " ");
      out << (integral ? std::to_string(static_cast<long long>(values[j])) : format6(values[j]));
    }
    out << "\n";
  }
}

inline std::string signature(const nc::Dataset& ds, const nc::Variable& v) {
  std::string s = std::string(nc::type_name(v.type())) + " " + v.name + "(";
  const auto names = ds.dim_names(v);
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
  return s + ")";
}

inline std::vector<std::pair<std::size_t, std::size_t>> parse_slab(const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw UsageError("slab axis '" + part + "' is not start:count");
    std::size_t start = 0, count = 0;
    auto a = std::from_chars(part.data(), part.data() + colon, start);
    auto b = std::from_chars(part.data() + colon + 1, part.data() + part.size(), count);
    if (a.ec != std::errc{} || a.ptr != part.data() + colon || b.ec != std::errc{} ||
        b.ptr != part.data() + part.size())
      throw UsageError("slab axis '" + part + "' is not start:count");
    out.emplace_back(start, count);
  }
  if (out.empty()) throw UsageError("empty slab");
  return out;
}

inline physics::Grid parse_grid(const std::string& text) {
  physics::Grid g{};
  std::stringstream ss(text);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 3) throw UsageError("grid needs three values N1,N2,N3");
    auto r = std::from_chars(part.data(), part.data() + part.size(), g[i]);
    if (r.ec != std::errc{} || r.ptr != part.data() + part.size() || g[i] == 0)
      throw UsageError("bad grid value '" + part + "'");
    ++i;
  }
  if (i != 3) throw UsageError("grid needs three values N1,N2,N3");
  return g;
}

inline nc::Dataset load(const std::string& path) { return nc::read_file(path); }

inline std::vector<ValidationReport> validate_all(const nc::Dataset& ds, std::optional<FileKind> kind) {
  std::vector<ValidationReport> reports;
  if (kind) {
    reports.push_back(validate(ds, *kind));
    return reports;
  }
  for (auto k : classify(ds).list()) reports.push_back(validate(ds, k));
  return reports;
}

inline void print_text_report(std::ostream& out, const Style& style, const std::optional<Finding>& name,
                              const std::vector<ValidationReport>& reports) {
  std::size_t errors = 0, warnings = 0;
  if (name) {
    out << style.severity(name->severity) << ' ' << name->rule_id << ' ' << name->location << ": " << name->message
        << "\n";
    ++warnings;
  }
  if (reports.empty()) {
    out << style.severity(Severity::Error) << " KIND-UNDETECTED -: no file kind detected\n";
    ++errors;
  }
  for (const auto& r : reports) {
    out << "[" << to_string(r.kind) << "]\n";
    for (const auto& f : r.findings) {
      out << style.severity(f.severity) << ' ' << f.rule_id << ' ' << (f.location.empty() ? "-" : f.location) << ": "
          << f.message << "\n";
    }
    errors += r.count(Severity::Error);
    warnings += r.count(Severity::Warning);
    out << to_string(r.kind) << ": " << (r.passed() ? "passed" : "failed") << "\n";
  }
  out << errors << " errors, " << warnings << " warnings\n";
}

inline nlohmann::ordered_json finding_json(const Finding& f) {
  nlohmann::ordered_json j;
  j["rule_id"] = f.rule_id;
  j["severity"] = std::string(to_string(f.severity));
  j["location"] = f.location;
  j["message"] = f.message;
  return j;
}

inline void print_structured_report(std::ostream& out, const std::string& path, const std::optional<Finding>& name,
                                    const std::vector<ValidationReport>& reports) {
  nlohmann::ordered_json j;
  j["file"] = path;
  j["filename"] = name ? finding_json(*name) : nlohmann::ordered_json();
  j["reports"] = nlohmann::ordered_json::array();
  std::size_t errors = reports.empty() ? 1 : 0, warnings = name ? 1 : 0;
  for (const auto& r : reports) {
    nlohmann::ordered_json rj;
    rj["kind"] = std::string(to_string(r.kind));
    rj["passed"] = r.passed();
    rj["findings"] = nlohmann::ordered_json::array();
    for (const auto& f : r.findings) rj["findings"].push_back(finding_json(f));
    j["reports"].push_back(std::move(rj));
    errors += r.count(Severity::Error);
    warnings += r.count(Severity::Warning);
  }
  j["errors"] = errors;
  j["warnings"] = warnings;
  out << j.dump(2) << "\n";
}

inline bool any_errors(const std::vector<ValidationReport>& reports) {
  if (reports.empty()) return true;
  return std::any_of(reports.begin(), reports.end(), [](const ValidationReport& r) { return !r.passed(); });
}

// -- commands ---------------------------------------------------------------

inline int cmd_validate(const std::string& path, const std::string& kind_name, const std::string& format,
                        std::ostream& out, const Style& style) {
  std::optional<FileKind> kind;
  if (!kind_name.empty()) kind = parse_file_kind(kind_name);
  const auto ds = load(path);
  const auto name = validate_filename(path);
  const auto reports = validate_all(ds, kind);
  if (format == "structured")
    print_structured_report(out, path, name, reports);
  else
    print_text_report(out, style, name, reports);
  return any_errors(reports) ? Invalid : Ok;
}

inline int cmd_inspect(const std::string& path, const std::string& var, const std::string& slab,
                       const std::string& format, std::ostream& out) {
  if (!slab.empty() && var.empty()) throw UsageError("--slab requires --var");
  const auto ds = load(path);
  if (format == "manifest") {
    out << manifest::to_manifest(ds);
    return Ok;
  }
  if (!var.empty()) {
    const auto* v = ds.find_var(var);
    if (!v) throw UsageError("no variable '" + var + "'");
    auto shape = ds.shape(*v);
    nc::Array values = v->data;
    if (!slab.empty()) {
      const auto axes = parse_slab(slab);
      std::vector<std::size_t> start, count;
      for (auto [s, c] : axes) {
        start.push_back(s);
        count.push_back(c);
      }
      try {
        values = nc::read_slab(ds, var, start, count);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      shape = count;
    }
    out << signature(ds, *v) << " =\n";
    print_values(out, values, shape);
    return Ok;
  }

  out << "format: " << (ds.format == nc::Format::Offset64 ? "64-bit offset" : "classic") << "\n";
  out << "dimensions:" << (ds.dims.empty() ? " (none)" : "") << "\n";
  for (const auto& d : ds.dims) {
    out << "  " << d.name << " = ";
    if (d.is_record())
      out << "UNLIMITED (" << ds.record_count << " currently)\n";
    else
      out << d.length << "\n";
  }
  out << "global attributes:" << (ds.attrs.empty() ? " (none)" : "") << "\n";
  for (const auto& a : ds.attrs)
    out << "  :" << a.name << " = " << array_text(a.value) << " (" << nc::type_name(nc::type_of(a.value)) << ")\n";
  out << "variables:" << (ds.vars.empty() ? " (none)" : "") << "\n";
  for (const auto& v : ds.vars) {
    out << "  " << signature(ds, v) << "\n";
    for (const auto& a : v.attrs) out << "    " << v.name << ":" << a.name << " = " << array_text(a.value) << "\n";
  }
  return Ok;
}

inline int cmd_create(const std::string& manifest_path, const std::string& out_path, std::ostream& out,
                      std::ostream& err, const Style& style) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw UsageError("cannot read manifest '" + manifest_path + "'");
  std::stringstream text;
  text << in.rdbuf();
  nc::Dataset ds;
  try {
    ds = manifest::parse_manifest(text.str());
  } catch (const Error& e) {
    err << manifest_path << ": " << e.what() << "\n";
    return Usage;
  }
  nc::write_file(out_path, ds);
  out << "wrote " << out_path << "\n";
  print_text_report(out, style, validate_filename(out_path), validate_all(ds, std::nullopt));
  return Ok;
}

struct VariableDiff {
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::optional<std::size_t> first;
  double a = 0.0, b = 0.0;
};

inline std::string index_text(const std::vector<std::size_t>& shape, std::size_t flat) {
  std::vector<std::size_t> idx(shape.size());
  for (std::size_t i = shape.size(); i-- > 0;) {
    idx[i] = shape[i] ? flat % shape[i] : 0;
    flat = shape[i] ? flat / shape[i] : 0;
  }
  std::string s = "[";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s + "]";
}

inline std::vector<double> physical_values(const nc::Variable& v) {
  auto d = nc::to_doubles(v.data);
  if (!carries_units(v.name)) return d;
  try {
    const double f = resolve_to_atomic_units(v).scale_to_atomic_units;
    for (auto& x : d) x *= f;
  } catch (const Error&) {
  }
  return d;
}

inline bool is_unit_attribute(const nc::Variable& v, std::string_view attr) {
  return carries_units(v.name) && (attr == "units" || attr == "scale_to_atomic_units");
}

inline bool same_value(const nc::Array& a, const nc::Array& b) {
  if (nc::type_of(a) == nc::Type::Char && nc::type_of(b) == nc::Type::Char)
    return nc::strip_padding(std::get<std::string>(a)) == nc::strip_padding(std::get<std::string>(b));
  return a == b;
}

inline int cmd_diff(const std::string& path_a, const std::string& path_b, double rtol, double atol,
                    std::ostream& out) {
  const auto a = load(path_a);
  const auto b = load(path_b);
  bool differ = false;
  auto note = [&](const std::string& line) {
    out << line << "\n";
    differ = true;
  };

  for (const auto& d : a.dims) {
    auto len = b.dim_length(d.name);
    if (!len)
      note("dimension " + d.name + ": only in " + path_a);
    else if (*len != a.dim_length(*a.dim_id(d.name)))
      note("dimension " + d.name + ": " + std::to_string(a.dim_length(*a.dim_id(d.name))) + " vs " +
           std::to_string(*len));
  }
  for (const auto& d : b.dims)
    if (!a.dim_id(d.name)) note("dimension " + d.name + ": only in " + path_b);

  auto compare_attrs = [&](const nc::AttributeList& x, const nc::AttributeList& y, const std::string& owner,
                           const nc::Variable* var) {
    for (const auto& at : x) {
      if (var && is_unit_attribute(*var, at.name)) continue;
      const auto* other = nc::find_attribute(y, at.name);
      if (!other)
        note("attribute " + owner + ":" + at.name + ": only in " + path_a);
      else if (!same_value(at.value, other->value))
        note("attribute " + owner + ":" + at.name + ": " + array_text(at.value) + " vs " + array_text(other->value));
    }
    for (const auto& at : y) {
      if (var && is_unit_attribute(*var, at.name)) continue;
      if (!nc::find_attribute(x, at.name)) note("attribute " + owner + ":" + at.name + ": only in " + path_b);
    }
  };
  compare_attrs(a.attrs, b.attrs, "", nullptr);

  for (const auto& va : a.vars) {
    const auto* vb = b.find_var(va.name);
    if (!vb) {
      note("variable " + va.name + ": only in " + path_a);
      continue;
    }
    compare_attrs(va.attrs, vb->attrs, va.name, &va);
    if (signature(a, va) != signature(b, *vb) || a.shape(va) != b.shape(*vb)) {
      note("variable " + va.name + ": " + signature(a, va) + " vs " + signature(b, *vb));
      continue;
    }
    if (va.type() == nc::Type::Char) {
      const auto& sa = std::get<std::string>(va.data);
      const auto& sb = std::get<std::string>(vb->data);
      if (sa != sb) {
        std::size_t i = 0;
        while (i < sa.size() && sa[i] == sb[i]) ++i;
        note("variable " + va.name + ": character data differs at " + index_text(a.shape(va), i));
      }
      continue;
    }
    const auto xa = physical_values(va);
    const auto xb = physical_values(*vb);
    VariableDiff d;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      if (std::isnan(xa[i]) && std::isnan(xb[i])) continue;
      const double abs = std::abs(xa[i] - xb[i]);
      const double rel = xb[i] != 0.0 ? abs / std::abs(xb[i]) : (abs == 0.0 ? 0.0 : INFINITY);
      const bool bad = !(abs <= atol + rtol * std::abs(xb[i]));
      if (bad && !d.first) {
        d.first = i;
        d.a = xa[i];
        d.b = xb[i];
      }
      if (!(abs <= d.max_abs)) d.max_abs = abs;
      if (!(rel <= d.max_rel)) d.max_rel = rel;
    }
    if (d.first)
      note("variable " + va.name + ": max abs " + format6(d.max_abs) + ", max rel " + format6(d.max_rel) +
           ", first difference at " + index_text(a.shape(va), *d.first) + " (" + format15(d.a) + " vs " +
           format15(d.b) + ")");
  }
  for (const auto& vb : b.vars)
    if (!a.find_var(vb.name)) note("variable " + vb.name + ": only in " + path_b);
  return differ ? Invalid : Ok;
}

inline int cmd_density(const std::string& path, const std::string& out_path, bool symmetrize,
                       const std::string& grid_text, std::ostream& out, const Style& style) {
  const auto ds = load(path);
  const auto report = validate_wavefunctions(ds);
  if (!report.passed()) {
    print_text_report(out, style, std::nullopt, {report});
    return Invalid;
  }
  physics::Grid grid{};
  if (!grid_text.empty()) {
    grid = parse_grid(grid_text);
  } else {
    auto n1 = ds.dim_length(names::number_of_grid_points_vector1);
    auto n2 = ds.dim_length(names::number_of_grid_points_vector2);
    auto n3 = ds.dim_length(names::number_of_grid_points_vector3);
    if (!n1 || !n2 || !n3) throw UsageError("the file has no grid dimensions; pass --grid N1,N2,N3");
    grid = {*n1, *n2, *n3};
  }

  const auto wfs = load_wavefunctions(ds);
  const auto geom = load_geometry(ds);
  physics::ScalarField rho;
  try {
    rho = physics::build_density(wfs, geom, grid, symmetrize);
  } catch (const Error& e) {
    out << style.severity(Severity::Error) << " " << to_string(e.code()) << ": " << e.what() << "\n";
    return Invalid;
  }

  const double count = physics::electron_count(rho);
  const double expected = physics::occupied_charge(wfs);
  out << "grid: " << grid[0] << " x " << grid[1] << " x " << grid[2] << "\n";
  out << "symmetrized: " << (symmetrize ? "yes" : "no") << "\n";
  out << "electron count: " << format15(count) << "\n";
  out << "occupied charge: " << format15(expected) << "\n";
  out << "closure deviation: " << format15(std::abs(count - expected)) << "\n";

  if (ds.find_var("density")) {
    const auto stored = load_scalar_field(ds, "density");
    if (stored.grid != rho.grid || stored.components != rho.components || stored.real_or_complex != 1) {
      out << "stored density: not comparable (different grid or layout)\n";
    } else {
      double dev = 0.0;
      for (std::size_t i = 0; i < rho.values.size(); ++i) dev = std::max(dev, std::abs(rho.values[i] - stored.values[i]));
      out << "stored density max deviation: " << format15(dev) << "\n";
    }
  }

  if (!out_path.empty()) {
    const auto title = "density built from " + path;
    nc::write_file(out_path, density_dataset(rho, geom.primitive_vectors, title));
    out << "wrote " << out_path << "\n";
    if (auto w = validate_filename(out_path))
      out << style.severity(w->severity) << ' ' << w->rule_id << ' ' << w->location << ": " << w->message << "\n";
  }
  return Ok;
}

}  // namespace detail

/// Runs one command; returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, Style style = {}) {
  CLI::App app{"Read, write, validate and cross-check ETSF electronic-structure files", "etsf-kit"};
  app.require_subcommand(1);

  std::string path, path_b, kind, format = "text", var, slab, out_path, grid;
  double rtol = 0.0, atol = 0.0;
  bool symmetrize = false;

  auto* validate = app.add_subcommand("validate", "Check a file against its file kind(s)");
  validate->add_option("file", path, "Container file")->required();
  validate->add_option("--kind", kind, "crystallographic, density, potential or wavefunctions")
      ->check(CLI::IsMember({"crystallographic", "density", "potential", "wavefunctions"}));
  validate->add_option("--format", format, "text or structured")->check(CLI::IsMember({"text", "structured"}));

  auto* inspect = app.add_subcommand("inspect", "Print the header or the values of one variable");
  inspect->add_option("file", path, "Container file")->required();
  inspect->add_option("--var", var, "Variable to print");
  inspect->add_option("--slab", slab, "start:count per axis, comma separated");
  std::string inspect_format = "text";
  inspect->add_option("--format", inspect_format, "text or manifest")->check(CLI::IsMember({"text", "manifest"}));

  auto* create = app.add_subcommand("create", "Build a container file from a manifest");
  create->add_option("manifest", path, "Manifest text file")->required();
  create->add_option("out", out_path, "Output file")->required();

  auto* diff = app.add_subcommand("diff", "Compare two files, unit-carrying variables in atomic units");
  diff->add_option("a", path, "First file")->required();
  diff->add_option("b", path_b, "Second file")->required();
  diff->add_option("--rtol", rtol, "Relative tolerance")->check(CLI::NonNegativeNumber);
  diff->add_option("--atol", atol, "Absolute tolerance")->check(CLI::NonNegativeNumber);

  auto* density = app.add_subcommand("density", "Build the density from a wavefunction file");
  density->add_option("file", path, "Wavefunction file")->required();
  density->add_option("--out", out_path, "Write a density file");
  density->add_flag("--symmetrize", symmetrize, "Sum over the stored symmetry operations");
  density->add_option("--grid", grid, "N1,N2,N3");

  std::vector<std::string> storage{"etsf-kit"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "etsf-kit: " << e.what() << "\n";
    return Usage;
  }

  try {
    if (*validate) return detail::cmd_validate(path, kind, format, out, style);
    if (*inspect) return detail::cmd_inspect(path, var, slab, inspect_format, out);
    if (*create) return detail::cmd_create(path, out_path, out, err, style);
    if (*diff) return detail::cmd_diff(path, path_b, rtol, atol, out);
    if (*density) return detail::cmd_density(path, out_path, symmetrize, grid, out, style);
  } catch (const detail::UsageError& e) {
    err << "etsf-kit: " << e.what() << "\n";
    return Usage;
  } catch (const Error& e) {
    err << "etsf-kit: " << e.what() << "\n";
    return Malformed;
  }
  return Usage;
}

}  // namespace etsf::kit
