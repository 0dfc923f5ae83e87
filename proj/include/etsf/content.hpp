#pragma once

// Conversions between container datasets and the decoded content used by
// the physics routines. Decoders assume the structural checks of
// validate.hpp have passed and throw ShapeMismatch otherwise.

#include <string>
#include <string_view>
#include <vector>

#include "etsf/error.hpp"
#include "etsf/model.hpp"
#include "etsf/netcdf.hpp"
#include "etsf/physics.hpp"

namespace etsf {

inline constexpr std::string_view file_format_name = "ETSF Nanoquanta";
inline constexpr std::string_view conventions_url = "http://www.etsf.eu/fileformats";
inline constexpr double default_file_format_version = 3.3;

/// Sets the three mandatory global attributes.
inline void set_standard_attributes(nc::Dataset& ds, double version = default_file_format_version) {
  nc::set_attribute(ds.attrs, "file_format", std::string(file_format_name));
  nc::set_attribute(ds.attrs, "file_format_version", std::vector<double>{version});
  nc::set_attribute(ds.attrs, "Conventions", std::string(conventions_url));
}

/// Rows of a character variable (last dimension is the string length),
/// with trailing padding stripped.
inline std::vector<std::string> char_rows(const nc::Dataset& ds, const nc::Variable& var) {
  const auto* data = std::get_if<std::string>(&var.data);
  if (!data) throw Error(Errc::ShapeMismatch, "'" + var.name + "' is not a character variable");
  const auto shape = ds.shape(var);
  const std::size_t width = shape.empty() ? data->size() : shape.back();
  std::vector<std::string> rows;
  if (width == 0) return rows;
  for (std::size_t off = 0; off + width <= data->size(); off += width)
    rows.push_back(nc::strip_padding(std::string_view(*data).substr(off, width)));
  return rows;
}

inline std::string char_value(const nc::Dataset& ds, std::string_view name) {
  const auto* v = ds.find_var(name);
  if (!v) return {};
  auto rows = char_rows(ds, *v);
  return rows.empty() ? std::string{} : rows.front();
}

namespace detail {

inline const nc::Variable& require_var(const nc::Dataset& ds, std::string_view name) {
  const auto* v = ds.find_var(name);
  if (!v) throw Error(Errc::ShapeMismatch, "variable '" + std::string(name) + "' is missing");
  return *v;
}

inline std::size_t require_dim(const nc::Dataset& ds, std::string_view name) {
  auto n = ds.dim_length(name);
  if (!n) throw Error(Errc::ShapeMismatch, "dimension '" + std::string(name) + "' is missing");
  return *n;
}

inline std::vector<double> doubles(const nc::Dataset& ds, std::string_view name, std::size_t expected) {
  const auto& v = require_var(ds, name);
  auto d = nc::to_doubles(v.data);
  if (d.size() != expected)
    throw Error(Errc::ShapeMismatch, "'" + std::string(name) + "' has " + std::to_string(d.size()) +
                                         " values, expected " + std::to_string(expected));
  return d;
}

/// Values converted to atomic units when the unit attributes resolve.
inline std::vector<double> scaled(const nc::Dataset& ds, std::string_view name, std::size_t expected) {
  auto d = doubles(ds, name, expected);
  double factor = 1.0;
  try {
    factor = resolve_to_atomic_units(require_var(ds, name)).scale_to_atomic_units;
  } catch (const Error&) {
  }
  for (auto& x : d) x *= factor;
  return d;
}

inline std::vector<physics::Complex> complex_values(const std::vector<double>& raw, std::size_t real_or_complex) {
  std::vector<physics::Complex> out(raw.size() / real_or_complex);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = real_or_complex == 2 ? physics::Complex(raw[2 * i], raw[2 * i + 1]) : physics::Complex(raw[i], 0.0);
  return out;
}

inline bool flag_yes(const nc::Variable* v, std::string_view name) {
  return v && get_flag(v->attrs, name) == Flag::Yes;
}

}  // namespace detail

inline physics::Mat3 load_primitive_vectors(const nc::Dataset& ds) {
  auto a = detail::scaled(ds, "primitive_vectors", 9);
  physics::Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] = a[3 * i + j];
  return m;
}

inline std::vector<physics::SymmetryOp> load_symmetry_ops(const nc::Dataset& ds) {
  if (!ds.find_var("reduced_symmetry_matrices")) return {};
  const std::size_t nsym = detail::require_dim(ds, names::number_of_symmetry_operations);
  auto mats = detail::doubles(ds, "reduced_symmetry_matrices", nsym * 9);
  auto trans = detail::doubles(ds, "reduced_symmetry_translations", nsym * 3);
  std::vector<physics::SymmetryOp> ops(nsym);
  for (std::size_t s = 0; s < nsym; ++s) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) ops[s].rotation[a][b] = static_cast<int>(mats[s * 9 + 3 * a + b]);
      ops[s].translation[a] = trans[s * 3 + a];
    }
  }
  return ops;
}

inline physics::CrystalGeometry load_geometry(const nc::Dataset& ds) {
  physics::CrystalGeometry g;
  g.primitive_vectors = load_primitive_vectors(ds);
  g.symmetry_ops = load_symmetry_ops(ds);
  g.species_count = ds.dim_length(names::number_of_atom_species).value_or(0);
  if (ds.find_var("reduced_atom_positions")) {
    const std::size_t natom = detail::require_dim(ds, names::number_of_atoms);
    auto pos = detail::doubles(ds, "reduced_atom_positions", natom * 3);
    auto species = detail::doubles(ds, "atom_species", natom);
    for (std::size_t a = 0; a < natom; ++a) {
      g.reduced_positions.push_back({pos[3 * a], pos[3 * a + 1], pos[3 * a + 2]});
      if (species[a] < 1 || species[a] > static_cast<double>(g.species_count))
        throw Error(Errc::ShapeMismatch, "atom_species value out of range");
      g.atom_species.push_back(static_cast<std::size_t>(species[a]) - 1);
    }
  }
  if (ds.find_var("atomic_numbers")) g.atomic_numbers = detail::doubles(ds, "atomic_numbers", g.species_count);
  if (ds.find_var("valence_charges")) g.valence_charges = detail::doubles(ds, "valence_charges", g.species_count);
  if (const auto* v = ds.find_var("atom_species_names")) g.species_names = char_rows(ds, *v);
  if (const auto* v = ds.find_var("chemical_symbols")) g.chemical_symbols = char_rows(ds, *v);
  return g;
}

/// Number of used entries per k-point of a k_dependent quantity.
inline std::vector<std::size_t> load_counts(const nc::Dataset& ds, std::string_view var, std::size_t entries,
                                            std::size_t fallback) {
  const auto* v = ds.find_var(var);
  if (!v || !detail::flag_yes(v, "k_dependent")) return std::vector<std::size_t>(entries, fallback);
  auto raw = detail::doubles(ds, var, entries);
  std::vector<std::size_t> out;
  for (double x : raw) {
    if (x < 0 || x > static_cast<double>(fallback))
      throw Error(Errc::ShapeMismatch, "'" + std::string(var) + "' value outside [0, " + std::to_string(fallback) + "]");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

/// Plane-wave G-vectors per k-point, honoring k_dependent on both the list
/// and number_of_coefficients.
inline std::vector<std::vector<physics::GVector>> load_gvectors(const nc::Dataset& ds) {
  const std::size_t nk = detail::require_dim(ds, names::number_of_kpoints);
  const std::size_t mcoef = detail::require_dim(ds, names::max_number_of_coefficients);
  const auto& var = detail::require_var(ds, "reduced_coordinates_of_plane_waves");
  const bool per_k = ds.dim_names(var).size() == 3;
  auto raw = detail::doubles(ds, var.name, (per_k ? nk : 1) * mcoef * 3);
  auto counts = load_counts(ds, "number_of_coefficients", nk, mcoef);
  std::vector<std::vector<physics::GVector>> out(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const std::size_t base = per_k ? k * mcoef * 3 : 0;
    for (std::size_t g = 0; g < counts[k]; ++g)
      out[k].push_back({static_cast<int>(raw[base + 3 * g]), static_cast<int>(raw[base + 3 * g + 1]),
                        static_cast<int>(raw[base + 3 * g + 2])});
  }
  return out;
}

inline physics::WavefunctionSet load_wavefunctions(const nc::Dataset& ds) {
  physics::WavefunctionSet w;
  w.spins = detail::require_dim(ds, names::number_of_spins);
  w.spinor_components = detail::require_dim(ds, names::number_of_spinor_components);
  w.max_states = detail::require_dim(ds, names::max_number_of_states);
  const std::size_t nk = detail::require_dim(ds, names::number_of_kpoints);

  auto kred = detail::doubles(ds, "reduced_coordinates_of_kpoints", nk * 3);
  for (std::size_t k = 0; k < nk; ++k) w.kpoints.push_back({kred[3 * k], kred[3 * k + 1], kred[3 * k + 2]});
  w.weights = detail::doubles(ds, "kpoint_weights", nk);
  w.states = load_counts(ds, "number_of_states", w.spins * nk, w.max_states);
  w.eigenvalues = detail::scaled(ds, "eigenvalues", w.spins * nk * w.max_states);
  w.occupations = detail::doubles(ds, "occupations", w.spins * nk * w.max_states);

  if (const auto* coef = ds.find_var("coefficients_of_wavefunctions")) {
    physics::PlaneWaveData pw;
    pw.max_coefficients = detail::require_dim(ds, names::max_number_of_coefficients);
    const std::size_t rc = detail::require_dim(ds, names::real_or_complex_coefficients);
    pw.gvectors = load_gvectors(ds);
    auto raw = detail::doubles(ds, coef->name,
                               w.spins * nk * w.max_states * w.spinor_components * pw.max_coefficients * rc);
    pw.coefficients = detail::complex_values(raw, rc);
    pw.time_reversal_at_gamma = detail::flag_yes(coef, "used_time_reversal_at_gamma") ||
                                detail::flag_yes(ds.find_var("reduced_coordinates_of_plane_waves"),
                                                 "used_time_reversal_at_gamma");
    w.plane_waves = std::move(pw);
  }
  if (const auto* rs = ds.find_var("real_space_wavefunctions")) {
    physics::RealSpaceData data;
    data.grid = {detail::require_dim(ds, names::number_of_grid_points_vector1),
                 detail::require_dim(ds, names::number_of_grid_points_vector2),
                 detail::require_dim(ds, names::number_of_grid_points_vector3)};
    const std::size_t rc = detail::require_dim(ds, names::real_or_complex_wavefunctions);
    auto raw = detail::doubles(ds, rs->name,
                               w.spins * nk * w.max_states * w.spinor_components * data.grid[0] * data.grid[1] *
                                   data.grid[2] * rc);
    data.values = detail::complex_values(raw, rc);
    w.real_space = std::move(data);
  }
  if (!w.plane_waves && !w.real_space) throw Error(Errc::ShapeMismatch, "no wavefunction representation present");
  return w;
}

inline physics::ReciprocalSampling sampling_of(const physics::WavefunctionSet& w) {
  if (!w.plane_waves) throw Error(Errc::ShapeMismatch, "no plane-wave basis");
  return {w.kpoints, w.plane_waves->gvectors};
}

/// The derivative array is accepted under its plural spelling too.
inline const nc::Variable* find_kb_derivative(const nc::Dataset& ds) {
  if (const auto* v = ds.find_var("kb_formfactor_derivative")) return v;
  return ds.find_var("kb_formfactor_derivatives");
}

inline physics::KbTable load_kb_table(const nc::Dataset& ds) {
  physics::KbTable kb;
  kb.species = detail::require_dim(ds, names::number_of_atom_species);
  kb.angular_momenta = detail::require_dim(ds, names::max_number_of_angular_momenta);
  kb.projectors = detail::require_dim(ds, names::max_number_of_projectors);
  kb.kpoints = detail::require_dim(ds, names::number_of_kpoints);
  kb.max_coefficients = detail::require_dim(ds, names::max_number_of_coefficients);
  const std::size_t channels = kb.species * kb.angular_momenta * kb.projectors;
  for (double s : detail::doubles(ds, "kb_formfactor_sign", channels)) kb.sign.push_back(static_cast<int>(s));
  kb.formfactors = detail::doubles(ds, "kb_formfactors", channels * kb.kpoints * kb.max_coefficients);
  if (const auto* d = find_kb_derivative(ds))
    kb.derivatives = detail::doubles(ds, d->name, channels * kb.kpoints * kb.max_coefficients);
  return kb;
}

/// A density or potential variable, converted to atomic units.
inline physics::ScalarField load_scalar_field(const nc::Dataset& ds, std::string_view name) {
  const auto& v = detail::require_var(ds, name);
  const auto shape = ds.shape(v);
  if (shape.size() != 5) throw Error(Errc::ShapeMismatch, "'" + std::string(name) + "' is not five-dimensional");
  physics::ScalarField f;
  f.components = shape[0];
  f.grid = {shape[3], shape[2], shape[1]};
  f.real_or_complex = shape[4];
  f.values = detail::doubles(ds, name, shape[0] * shape[1] * shape[2] * shape[3] * shape[4]);
  const double factor = resolve_to_atomic_units(v).scale_to_atomic_units;
  for (auto& x : f.values) x *= factor;
  return f;
}

/// A conformant density file holding `field` on the cell of `cell`.
inline nc::Dataset density_dataset(const physics::ScalarField& field, const physics::Mat3& cell,
                                   std::string_view title = {}) {
  nc::Dataset ds;
  set_standard_attributes(ds);
  if (!title.empty()) nc::set_attribute(ds.attrs, "title", std::string(title));
  ds.add_dim(std::string(names::number_of_cartesian_directions), 3);
  ds.add_dim(std::string(names::number_of_vectors), 3);
  ds.add_dim(std::string(names::real_or_complex_density), field.real_or_complex);
  ds.add_dim(std::string(names::number_of_components), field.components);
  ds.add_dim(std::string(names::number_of_grid_points_vector1), field.grid[0]);
  ds.add_dim(std::string(names::number_of_grid_points_vector2), field.grid[1]);
  ds.add_dim(std::string(names::number_of_grid_points_vector3), field.grid[2]);

  std::vector<double> pv;
  for (const auto& row : cell) pv.insert(pv.end(), row.begin(), row.end());
  ds.add_var("primitive_vectors", {"number_of_vectors", "number_of_cartesian_directions"}, pv);
  auto& rho = ds.add_var("density",
                         {"number_of_components", "number_of_grid_points_vector3", "number_of_grid_points_vector2",
                          "number_of_grid_points_vector1", "real_or_complex_density"},
                         field.values);
  rho.attrs.push_back({"units", std::string(atomic_units)});
  return ds;
}

}  // namespace etsf
