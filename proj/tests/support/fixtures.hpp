#pragma once

// Golden datasets shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "etsf/content.hpp"
#include "etsf/netcdf.hpp"

namespace fixtures {

using etsf::nc::Dataset;

inline constexpr double silicon_half_lattice = 5.13;
inline constexpr double ev_to_hartree = 0.036749326;

inline void drop_var(Dataset& ds, std::string_view name) {
  std::erase_if(ds.vars, [&](const etsf::nc::Variable& v) { return v.name == name; });
}

inline std::vector<double> fcc_vectors(double h = silicon_half_lattice) {
  return {0.0, h, h, h, 0.0, h, h, h, 0.0};
}

/// Identity and the a1 <-> a2 mirror, both without translation.
inline std::vector<int> silicon_rotations() {
  return {1, 0, 0, 0, 1, 0, 0, 0, 1,  //
          0, 1, 0, 1, 0, 0, 0, 0, 1};
}

inline void add_cell(Dataset& ds) {
  ds.add_dim("number_of_cartesian_directions", 3);
  ds.add_dim("number_of_vectors", 3);
  auto& pv = ds.add_var("primitive_vectors", {"number_of_vectors", "number_of_cartesian_directions"}, fcc_vectors());
  pv.attrs.push_back({"units", std::string("atomic units")});
}

inline void add_symmetry(Dataset& ds, std::vector<int> rotations, std::vector<double> translations,
                         const std::string& symmorphic = "yes") {
  ds.add_dim("number_of_symmetry_operations", rotations.size() / 9);
  if (!ds.dim_id("number_of_reduced_dimensions")) ds.add_dim("number_of_reduced_dimensions", 3);
  auto& m = ds.add_var("reduced_symmetry_matrices",
                       {"number_of_symmetry_operations", "number_of_reduced_dimensions", "number_of_reduced_dimensions"},
                       std::move(rotations));
  m.attrs.push_back({"symmorphic", symmorphic});
  auto& t = ds.add_var("reduced_symmetry_translations", {"number_of_symmetry_operations", "number_of_reduced_dimensions"},
                       std::move(translations));
  t.attrs.push_back({"symmorphic", symmorphic});
}

/// Bulk silicon in the diamond structure, two atoms, two symmetry operations.
inline Dataset silicon_crystal() {
  Dataset ds;
  etsf::set_standard_attributes(ds);
  ds.attrs.push_back({"title", std::string("Bulk silicon, diamond structure")});
  add_cell(ds);
  ds.add_dim("number_of_reduced_dimensions", 3);
  ds.add_dim("number_of_atoms", 2);
  ds.add_dim("number_of_atom_species", 1);
  add_symmetry(ds, silicon_rotations(), std::vector<double>(6, 0.0));
  ds.add_var("space_group", {}, std::vector<std::int32_t>{227});
  ds.add_var("atom_species", {"number_of_atoms"}, std::vector<std::int32_t>{1, 1});
  ds.add_var("reduced_atom_positions", {"number_of_atoms", "number_of_reduced_dimensions"},
             std::vector<double>{0.0, 0.0, 0.0, 0.25, 0.25, 0.25});
  ds.add_var("atomic_numbers", {"number_of_atom_species"}, std::vector<double>{14.0});
  return ds;
}

inline void add_grid(Dataset& ds, std::size_t n1, std::size_t n2, std::size_t n3) {
  ds.add_dim("number_of_grid_points_vector1", n1);
  ds.add_dim("number_of_grid_points_vector2", n2);
  ds.add_dim("number_of_grid_points_vector3", n3);
}

/// 1 + cos(2 pi x) sampled with i1 fastest.
inline std::vector<double> cosine_density(std::size_t n1, std::size_t n2, std::size_t n3) {
  std::vector<double> v;
  for (std::size_t i3 = 0; i3 < n3; ++i3)
    for (std::size_t i2 = 0; i2 < n2; ++i2)
      for (std::size_t i1 = 0; i1 < n1; ++i1)
        v.push_back(1.0 + std::cos(2.0 * std::numbers::pi * static_cast<double>(i1) / static_cast<double>(n1)));
  return v;
}

inline void add_density(Dataset& ds, std::vector<double> values) {
  if (!ds.dim_id("real_or_complex_density")) ds.add_dim("real_or_complex_density", 1);
  if (!ds.dim_id("number_of_components")) ds.add_dim("number_of_components", 1);
  auto& rho = ds.add_var("density",
                         {"number_of_components", "number_of_grid_points_vector3", "number_of_grid_points_vector2",
                          "number_of_grid_points_vector1", "real_or_complex_density"},
                         std::move(values));
  rho.attrs.push_back({"units", std::string("atomic units")});
}

/// Density file on a 4x4x4 grid.
inline Dataset silicon_density() {
  Dataset ds;
  etsf::set_standard_attributes(ds);
  add_cell(ds);
  ds.add_dim("real_or_complex_density", 1);
  ds.add_dim("number_of_components", 1);
  add_grid(ds, 4, 4, 4);
  add_density(ds, cosine_density(4, 4, 4));
  return ds;
}

/// Potential file holding an exchange-correlation potential.
inline Dataset silicon_potential() {
  Dataset ds;
  etsf::set_standard_attributes(ds);
  add_cell(ds);
  ds.add_dim("real_or_complex_potential", 1);
  ds.add_dim("number_of_components", 1);
  add_grid(ds, 2, 2, 2);
  auto& v = ds.add_var("exchange_correlation_potential",
                       {"number_of_components", "number_of_grid_points_vector3", "number_of_grid_points_vector2",
                        "number_of_grid_points_vector1", "real_or_complex_potential"},
                       std::vector<double>(8, -0.3));
  v.attrs.push_back({"units", std::string("atomic units")});
  return ds;
}

/// Dimensions and variables shared by every wavefunction fixture: one
/// spin, no spinor, the silicon cell and symmetry, `states` bands.
inline Dataset wavefunction_core(std::vector<double> kpoints, std::vector<double> weights, std::size_t states,
                                 std::vector<double> occupations, std::vector<double> eigenvalues) {
  Dataset ds;
  etsf::set_standard_attributes(ds);
  ds.add_dim("character_string_length", 80);
  add_cell(ds);
  ds.add_dim("number_of_reduced_dimensions", 3);
  ds.add_dim("number_of_spinor_components", 1);
  ds.add_dim("max_number_of_states", states);
  ds.add_dim("number_of_kpoints", weights.size());
  ds.add_dim("number_of_spins", 1);
  add_symmetry(ds, silicon_rotations(), std::vector<double>(6, 0.0));
  ds.add_var("reduced_coordinates_of_kpoints", {"number_of_kpoints", "number_of_reduced_dimensions"},
             std::move(kpoints));
  ds.add_var("kpoint_weights", {"number_of_kpoints"}, std::move(weights));
  const auto nk = ds.dim_length("number_of_kpoints").value();
  auto& ns = ds.add_var("number_of_states", {"number_of_spins", "number_of_kpoints"},
                        std::vector<std::int32_t>(nk, static_cast<std::int32_t>(states)));
  ns.attrs.push_back({"k_dependent", std::string("yes")});
  auto& eig = ds.add_var("eigenvalues", {"number_of_spins", "number_of_kpoints", "max_number_of_states"},
                         std::move(eigenvalues));
  eig.attrs.push_back({"units", std::string("atomic units")});
  ds.add_var("occupations", {"number_of_spins", "number_of_kpoints", "max_number_of_states"}, std::move(occupations));
  return ds;
}

inline void add_basis_set(Dataset& ds, const std::string& name) {
  ds.add_var("basis_set", {"character_string_length"}, name + std::string(80 - name.size(), '\0'));
}

/// Plane-wave payload; gvectors shared by every k-point (k_dependent "no").
inline void add_plane_waves(Dataset& ds, const std::vector<std::array<int, 3>>& gvectors,
                            const std::vector<std::complex<double>>& coefficients, bool time_reversal = false) {
  ds.add_dim("max_number_of_coefficients", gvectors.size());
  ds.add_dim("real_or_complex_coefficients", 2);
  add_basis_set(ds, "plane_waves");
  const auto nk = ds.dim_length("number_of_kpoints").value();
  auto& nc = ds.add_var("number_of_coefficients", {"number_of_kpoints"},
                        std::vector<std::int32_t>(nk, static_cast<std::int32_t>(gvectors.size())));
  nc.attrs.push_back({"k_dependent", std::string("yes")});
  std::vector<std::int32_t> g;
  for (const auto& v : gvectors) g.insert(g.end(), v.begin(), v.end());
  auto& gv = ds.add_var("reduced_coordinates_of_plane_waves",
                        {"max_number_of_coefficients", "number_of_reduced_dimensions"}, std::move(g));
  gv.attrs.push_back({"k_dependent", std::string("no")});
  std::vector<double> raw;
  for (auto c : coefficients) {
    raw.push_back(c.real());
    raw.push_back(c.imag());
  }
  auto& coef = ds.add_var("coefficients_of_wavefunctions",
                          {"number_of_spins", "number_of_kpoints", "max_number_of_states",
                           "number_of_spinor_components", "max_number_of_coefficients",
                           "real_or_complex_coefficients"},
                          std::move(raw));
  if (time_reversal) {
    gv.attrs.push_back({"used_time_reversal_at_gamma", std::string("yes")});
    coef.attrs.push_back({"used_time_reversal_at_gamma", std::string("yes")});
  }
}

/// Gamma-only plane-wave file, two bands over three G-vectors, f = (2, 0),
/// with a Fermi energy stored in eV.
inline Dataset gamma_wavefunctions() {
  auto ds = wavefunction_core({0, 0, 0}, {1.0}, 2, {2.0, 0.0}, {-0.2, 0.1});
  auto& ef = ds.add_var("fermi_energy", {}, std::vector<double>{-1.5});
  ef.attrs.push_back({"units", std::string("eV")});
  ef.attrs.push_back({"scale_to_atomic_units", std::vector<double>{ev_to_hartree}});
  add_grid(ds, 6, 6, 6);
  const double s = 1.0 / std::sqrt(2.0);
  add_plane_waves(ds, {{0, 0, 0}, {1, 0, 0}, {-1, 0, 0}},
                  {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0},  //
                   {0.0, 0.0}, {s, 0.0}, {0.0, s}});
  return ds;
}

/// Gamma-only file stored with time reversal: G = 0, (1,0,0), (0,1,0).
inline Dataset time_reversal_wavefunctions() {
  auto ds = wavefunction_core({0, 0, 0}, {1.0}, 1, {2.0}, {-0.25});
  add_grid(ds, 6, 6, 6);
  // |c0|^2 + 2 |c1|^2 + 2 |c2|^2 = 0.2 + 0.6 + 0.2
  const double c0 = std::sqrt(0.2), c1 = std::sqrt(0.3), c2 = std::sqrt(0.1);
  add_plane_waves(ds, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{c0, 0.0}, {c1 * 0.6, c1 * 0.8}, {0.0, -c2}}, true);
  return ds;
}

/// The time-reversal file with the -G partners written out.
inline Dataset expanded_wavefunctions() {
  auto ds = wavefunction_core({0, 0, 0}, {1.0}, 1, {2.0}, {-0.25});
  add_grid(ds, 6, 6, 6);
  const double c0 = std::sqrt(0.2), c1 = std::sqrt(0.3), c2 = std::sqrt(0.1);
  const std::complex<double> a{c1 * 0.6, c1 * 0.8}, b{0.0, -c2};
  add_plane_waves(ds, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}},
                  {{c0, 0.0}, a, b, std::conj(a), std::conj(b)});
  return ds;
}

/// Real-space file: psi = exp(2 pi i x) on a 4x4x4 grid.
inline Dataset real_space_wavefunctions() {
  auto ds = wavefunction_core({0, 0, 0}, {1.0}, 1, {2.0}, {-0.1});
  add_grid(ds, 4, 4, 4);
  ds.add_dim("real_or_complex_wavefunctions", 2);
  std::vector<double> raw;
  for (std::size_t i3 = 0; i3 < 4; ++i3)
    for (std::size_t i2 = 0; i2 < 4; ++i2)
      for (std::size_t i1 = 0; i1 < 4; ++i1) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i1) / 4.0;
        raw.push_back(std::cos(phase));
        raw.push_back(std::sin(phase));
      }
  ds.add_var("real_space_wavefunctions",
             {"number_of_spins", "number_of_kpoints", "max_number_of_states", "number_of_spinor_components",
              "number_of_grid_points_vector3", "number_of_grid_points_vector2", "number_of_grid_points_vector1",
              "real_or_complex_wavefunctions"},
             std::move(raw));
  return ds;
}

/// c = (1/sqrt2, 1/sqrt2) on G = 0, (1,0,0) at Gamma, f = 1, with the
/// closed-form density 1 + cos(2 pi x) embedded on an 8x8x8 grid.
inline Dataset two_plane_wave() {
  auto ds = wavefunction_core({0, 0, 0}, {1.0}, 1, {1.0}, {-0.3});
  add_grid(ds, 8, 8, 8);
  const double s = 1.0 / std::sqrt(2.0);
  add_plane_waves(ds, {{0, 0, 0}, {1, 0, 0}}, {{s, 0.0}, {s, 0.0}});
  add_density(ds, cosine_density(8, 8, 8));
  return ds;
}

/// Random normalized plane-wave states at `nk` k-points: `states` bands,
/// `ng` distinct G-vectors from [-2, 2]^3 per k-point, weights summing to 1,
/// occupations in [0, 2].
inline etsf::physics::WavefunctionSet random_plane_wave_set(std::mt19937_64& rng, std::size_t nk, std::size_t states,
                                                           std::size_t ng) {
  using etsf::physics::Complex;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  etsf::physics::WavefunctionSet w;
  w.max_states = states;
  double total = 0.0;
  for (std::size_t k = 0; k < nk; ++k) {
    w.kpoints.push_back({0.5 * unit(rng), 0.5 * unit(rng), 0.5 * unit(rng)});
    w.weights.push_back(1.0 + unit(rng) * 0.5);
    total += w.weights.back();
  }
  for (auto& x : w.weights) x /= total;
  w.states.assign(nk, states);
  for (std::size_t i = 0; i < nk * states; ++i) {
    w.occupations.push_back(1.0 + unit(rng));
    w.eigenvalues.push_back(unit(rng));
  }
  etsf::physics::PlaneWaveData pw;
  pw.max_coefficients = ng;
  std::vector<etsf::physics::GVector> all;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int c = -2; c <= 2; ++c) all.push_back({a, b, c});
  for (std::size_t k = 0; k < nk; ++k) {
    std::shuffle(all.begin(), all.end(), rng);
    pw.gvectors.emplace_back(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(ng));
  }
  for (std::size_t block = 0; block < nk * states; ++block) {
    std::vector<Complex> c(ng);
    double norm = 0.0;
    for (auto& x : c) {
      x = {unit(rng), unit(rng)};
      norm += std::norm(x);
    }
    for (auto& x : c) pw.coefficients.push_back(x / std::sqrt(norm));
  }
  w.plane_waves = std::move(pw);
  return w;
}

}  // namespace fixtures
