#pragma once

// Reference numerics for the content of ETSF files: symmetry action, state
// normalization, time-reversal expansion at Gamma, density construction
// from wavefunctions and Kleinman-Bylander non-local matrix elements.
//
// Everything here is direct evaluation at desk scale (no FFT); the intent
// is a trustworthy reference, not a fast one.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "etsf/error.hpp"
#include "etsf/model.hpp"

namespace etsf::physics {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  ///< row-major; rows are vectors
using IntMat3 = std::array<std::array<int, 3>, 3>;
using GVector = std::array<int, 3>;
using Complex = std::complex<double>;
using Grid = std::array<std::size_t, 3>;  ///< (N1, N2, N3)

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Tolerances applied by validation and density construction.
namespace tolerance {
inline constexpr double weight_sum = 1e-8;
inline constexpr double state_norm = 1e-6;
inline constexpr double zero_translation = 1e-10;
inline constexpr double grid_translation = 1e-8;
inline constexpr double gamma_point = 1e-12;
}  // namespace tolerance

// ---------------------------------------------------------------------------
// Symmetry

/// Real-space symmetry operation in reduced coordinates: r' = S r + t.
struct SymmetryOp {
  IntMat3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Vec3 translation{0.0, 0.0, 0.0};

  static SymmetryOp identity() { return {}; }

  int determinant() const {
    const auto& m = rotation;
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  bool is_identity(double tol = tolerance::zero_translation) const {
    return rotation == identity().rotation &&
           std::all_of(translation.begin(), translation.end(), [&](double t) { return std::abs(t) <= tol; });
  }

  friend bool operator==(const SymmetryOp&, const SymmetryOp&) = default;
};

/// r'_a = sum_b S_ab r_b + t_a
inline Vec3 apply_symmetry(const SymmetryOp& op, const Vec3& r) {
  Vec3 out{};
  for (int a = 0; a < 3; ++a) {
    double s = 0.0;
    for (int b = 0; b < 3; ++b) s += op.rotation[a][b] * r[b];
    out[a] = s + op.translation[a];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lattice

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline double determinant(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Rows b_j with a_i . b_j = 2 pi delta_ij.
inline Mat3 reciprocal_lattice(const Mat3& a) {
  const double det = determinant(a);
  const double scale = norm(a[0]) * norm(a[1]) * norm(a[2]);
  if (!(std::abs(det) > 1e-12 * scale)) throw Error(Errc::SingularCell, "primitive vectors are linearly dependent");
  // b_i = 2 pi (a_j x a_k) / det for cyclic (i, j, k)
  auto cross = [](const Vec3& u, const Vec3& v) {
    return Vec3{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  };
  Mat3 b{};
  for (int i = 0; i < 3; ++i) {
    auto c = cross(a[(i + 1) % 3], a[(i + 2) % 3]);
    for (int k = 0; k < 3; ++k) b[i][k] = two_pi * c[k] / det;
  }
  return b;
}

/// sum_i x_i rows_i
inline Vec3 to_cartesian(const Mat3& rows, const Vec3& reduced) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out[k] += reduced[i] * rows[i][k];
  return out;
}

// ---------------------------------------------------------------------------
// Decoded content

struct CrystalGeometry {
  Mat3 primitive_vectors{};  ///< Cartesian, Bohr
  std::vector<SymmetryOp> symmetry_ops;
  std::vector<Vec3> reduced_positions;
  std::vector<std::size_t> atom_species;  ///< zero-based species index per atom
  std::size_t species_count = 0;
  std::vector<double> atomic_numbers;
  std::vector<std::string> species_names;
  std::vector<std::string> chemical_symbols;
  std::vector<double> valence_charges;

  Vec3 cartesian_position(std::size_t atom) const {
    return to_cartesian(primitive_vectors, reduced_positions.at(atom));
  }
};

struct PlaneWaveData {
  std::size_t max_coefficients = 0;
  std::vector<std::vector<GVector>> gvectors;  ///< per k-point, number_of_coefficients(k) entries
  std::vector<Complex> coefficients;           ///< [spin][k][state][spinor][max_coefficients]
  bool time_reversal_at_gamma = false;
};

struct RealSpaceData {
  Grid grid{};
  std::vector<Complex> values;  ///< [spin][k][state][spinor][i3][i2][i1]
};

struct WavefunctionSet {
  std::size_t spins = 1;
  std::size_t spinor_components = 1;
  std::size_t max_states = 0;
  std::vector<Vec3> kpoints;
  std::vector<double> weights;
  std::vector<std::size_t> states;   ///< [spin][k]
  std::vector<double> eigenvalues;   ///< [spin][k][state], Hartree
  std::vector<double> occupations;   ///< [spin][k][state]
  std::optional<PlaneWaveData> plane_waves;
  std::optional<RealSpaceData> real_space;

  std::size_t kpoint_count() const { return kpoints.size(); }

  SpinMode spin_mode() const {
    return etsf::spin_mode(SpinTriple{spins, spinor_components, spins == 2 ? 2u : (spinor_components == 2 ? 4u : 1u)});
  }

  std::size_t states_at(std::size_t s, std::size_t k) const { return states.at(s * kpoint_count() + k); }

  double occupation(std::size_t s, std::size_t k, std::size_t n) const {
    return occupations.at((s * kpoint_count() + k) * max_states + n);
  }

  std::span<const Complex> pw_coefficients(std::size_t s, std::size_t k, std::size_t n, std::size_t sigma) const {
    const auto& pw = plane_waves.value();
    const std::size_t block = (((s * kpoint_count() + k) * max_states + n) * spinor_components + sigma);
    return std::span<const Complex>(pw.coefficients).subspan(block * pw.max_coefficients, pw.gvectors.at(k).size());
  }

  std::span<const Complex> rs_values(std::size_t s, std::size_t k, std::size_t n, std::size_t sigma) const {
    const auto& rs = real_space.value();
    const std::size_t points = rs.grid[0] * rs.grid[1] * rs.grid[2];
    const std::size_t block = (((s * kpoint_count() + k) * max_states + n) * spinor_components + sigma);
    return std::span<const Complex>(rs.values).subspan(block * points, points);
  }

  bool uses_time_reversal(std::size_t k) const {
    return plane_waves && plane_waves->time_reversal_at_gamma &&
           std::all_of(kpoints.at(k).begin(), kpoints.at(k).end(),
                       [](double x) { return std::abs(x) <= tolerance::gamma_point; });
  }
};

/// Density or potential on the real-space grid, in atomic units.
struct ScalarField {
  std::size_t components = 1;
  Grid grid{};
  std::size_t real_or_complex = 1;
  std::vector<double> values;  ///< [component][i3][i2][i1][re/im]

  std::size_t points() const { return grid[0] * grid[1] * grid[2]; }

  std::size_t index(std::size_t c, std::size_t i1, std::size_t i2, std::size_t i3) const {
    return (((c * grid[2] + i3) * grid[1] + i2) * grid[0] + i1) * real_or_complex;
  }

  double at(std::size_t c, std::size_t i1, std::size_t i2, std::size_t i3) const { return values.at(index(c, i1, i2, i3)); }
};

// ---------------------------------------------------------------------------
// Normalization and time reversal

struct TimeReversalExpansion {
  std::vector<GVector> gvectors;
  std::vector<Complex> coefficients;
};

/// Restores the plane waves omitted by time-reversal storage at Gamma:
/// c(-G) = conj(c(G)). Stored entries keep their order; the mirrored
/// entries follow in the same order, so the result has 2n-1 entries.
inline TimeReversalExpansion expand_time_reversal(const Vec3& kpoint, std::span<const GVector> gvectors,
                                                  std::span<const Complex> coefficients) {
  if (std::any_of(kpoint.begin(), kpoint.end(), [](double x) { return std::abs(x) > tolerance::gamma_point; }))
    throw Error(Errc::NonGammaUse, "time-reversal storage applies only at the Gamma point");
  if (gvectors.size() != coefficients.size())
    throw Error(Errc::ShapeMismatch, "G-vector and coefficient counts differ");

  constexpr GVector origin{0, 0, 0};
  std::set<GVector> seen;
  bool has_origin = false;
  for (const auto& g : gvectors) {
    const GVector minus{-g[0], -g[1], -g[2]};
    if (g == origin) {
      if (has_origin) throw Error(Errc::PairPresentTwice, "origin stored twice");
      has_origin = true;
    } else if (seen.count(g) || seen.count(minus)) {
      throw Error(Errc::PairPresentTwice, "G = (" + std::to_string(g[0]) + "," + std::to_string(g[1]) + "," +
                                              std::to_string(g[2]) + ") stored together with its mirror");
    }
    seen.insert(g);
  }
  if (!has_origin) throw Error(Errc::MissingOrigin, "G = (0,0,0) is not among the stored plane waves");

  TimeReversalExpansion out;
  out.gvectors.assign(gvectors.begin(), gvectors.end());
  out.coefficients.assign(coefficients.begin(), coefficients.end());
  for (std::size_t i = 0; i < gvectors.size(); ++i) {
    if (gvectors[i] == origin) continue;
    out.gvectors.push_back({-gvectors[i][0], -gvectors[i][1], -gvectors[i][2]});
    out.coefficients.push_back(std::conj(coefficients[i]));
  }
  return out;
}

struct StateNorm {
  std::size_t spin = 0;
  std::size_t kpoint = 0;
  std::size_t state = 0;
  double norm = 0.0;
};

/// Per-state norms: sum of |c|^2 over spinors and plane waves (after
/// time-reversal expansion at Gamma), or the grid mean of |psi|^2 over
/// spinors for real-space data. Callers compare against 1.
inline std::vector<StateNorm> state_norms(const WavefunctionSet& wfs) {
  if (!wfs.plane_waves && !wfs.real_space) throw Error(Errc::ShapeMismatch, "no wavefunction payload");
  const std::size_t nk = wfs.kpoint_count();
  if (wfs.states.size() != wfs.spins * nk) throw Error(Errc::ShapeMismatch, "number_of_states has wrong size");

  if (wfs.plane_waves) {
    const auto& pw = *wfs.plane_waves;
    if (pw.gvectors.size() != nk) throw Error(Errc::ShapeMismatch, "G-vector lists do not match the k-points");
    for (const auto& g : pw.gvectors)
      if (g.size() > pw.max_coefficients) throw Error(Errc::ShapeMismatch, "more G-vectors than max_number_of_coefficients");
    if (pw.coefficients.size() != wfs.spins * nk * wfs.max_states * wfs.spinor_components * pw.max_coefficients)
      throw Error(Errc::ShapeMismatch, "coefficient array has wrong size");
  } else {
    const auto& rs = *wfs.real_space;
    if (rs.values.size() !=
        wfs.spins * nk * wfs.max_states * wfs.spinor_components * rs.grid[0] * rs.grid[1] * rs.grid[2])
      throw Error(Errc::ShapeMismatch, "real-space array has wrong size");
  }

  std::vector<StateNorm> out;
  for (std::size_t s = 0; s < wfs.spins; ++s)
    for (std::size_t k = 0; k < nk; ++k) {
      const std::size_t nstates = wfs.states_at(s, k);
      if (nstates > wfs.max_states) throw Error(Errc::ShapeMismatch, "number_of_states exceeds max_number_of_states");
      for (std::size_t n = 0; n < nstates; ++n) {
        double sum = 0.0;
        for (std::size_t sigma = 0; sigma < wfs.spinor_components; ++sigma) {
          if (wfs.plane_waves) {
            auto c = wfs.pw_coefficients(s, k, n, sigma);
            if (wfs.uses_time_reversal(k)) {
              auto full = expand_time_reversal(wfs.kpoints[k], wfs.plane_waves->gvectors[k], c);
              for (const auto& x : full.coefficients) sum += std::norm(x);
            } else {
              for (const auto& x : c) sum += std::norm(x);
            }
          } else {
            auto v = wfs.rs_values(s, k, n, sigma);
            double acc = 0.0;
            for (const auto& x : v) acc += std::norm(x);
            sum += acc / static_cast<double>(v.size());
          }
        }
        out.push_back({s, k, n, sum});
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Density

namespace detail {

/// Grid-point index of S (r - t) for r on the grid; requires compatibility.
class GridMap {
 public:
  GridMap(const SymmetryOp& op, const Grid& grid) : op_(op), grid_(grid) {
    for (int b = 0; b < 3; ++b) {
      const double shift = op.translation[b] * static_cast<double>(grid[b]);
      const double rounded = std::round(shift);
      if (std::abs(shift - rounded) > tolerance::grid_translation)
        throw Error(Errc::GridIncompatibleWithSymmetry,
                    "translation component " + std::to_string(op.translation[b]) + " is not a multiple of 1/" +
                        std::to_string(grid[b]));
      shift_[b] = static_cast<long>(rounded);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const long num = static_cast<long>(op.rotation[a][b]) * static_cast<long>(grid[a]);
        if (num % static_cast<long>(grid[b]) != 0)
          throw Error(Errc::GridIncompatibleWithSymmetry, "rotation does not map the grid onto itself");
        factor_[a][b] = num / static_cast<long>(grid[b]);
      }
  }

  std::array<std::size_t, 3> operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
    const std::array<long, 3> m{static_cast<long>(i1) - shift_[0], static_cast<long>(i2) - shift_[1],
                                static_cast<long>(i3) - shift_[2]};
    std::array<std::size_t, 3> j{};
    for (int a = 0; a < 3; ++a) {
      long v = factor_[a][0] * m[0] + factor_[a][1] * m[1] + factor_[a][2] * m[2];
      const long n = static_cast<long>(grid_[a]);
      v %= n;
      if (v < 0) v += n;
      j[a] = static_cast<std::size_t>(v);
    }
    return j;
  }

 private:
  SymmetryOp op_;
  Grid grid_;
  std::array<long, 3> shift_{};
  std::array<std::array<long, 3>, 3> factor_{};
};

/// psi(r) = sum_G c_G exp(2 pi i (k+G).r) on every grid point, i1 fastest.
inline std::vector<Complex> evaluate_plane_waves(const Vec3& k, std::span<const GVector> gvectors,
                                                 std::span<const Complex> coefficients, const Grid& grid) {
  const std::size_t npts = grid[0] * grid[1] * grid[2];
  std::vector<Complex> psi(npts, Complex{});
  std::array<std::vector<Complex>, 3> phase;
  for (std::size_t g = 0; g < gvectors.size(); ++g) {
    if (coefficients[g] == Complex{}) continue;
    for (int a = 0; a < 3; ++a) {
      phase[a].resize(grid[a]);
      for (std::size_t i = 0; i < grid[a]; ++i)
        phase[a][i] = std::polar(1.0, two_pi * (k[a] + gvectors[g][a]) * static_cast<double>(i) / static_cast<double>(grid[a]));
    }
    std::size_t p = 0;
    for (std::size_t i3 = 0; i3 < grid[2]; ++i3)
      for (std::size_t i2 = 0; i2 < grid[1]; ++i2) {
        const Complex c23 = coefficients[g] * phase[2][i3] * phase[1][i2];
        for (std::size_t i1 = 0; i1 < grid[0]; ++i1) psi[p++] += c23 * phase[0][i1];
      }
  }
  return psi;
}

}  // namespace detail

/// rho'(r) = rho(S (r - t)) for every component, on a compatible grid.
inline ScalarField apply_to_field(const SymmetryOp& op, const ScalarField& field) {
  const detail::GridMap map(op, field.grid);
  ScalarField out = field;
  for (std::size_t c = 0; c < field.components; ++c)
    for (std::size_t i3 = 0; i3 < field.grid[2]; ++i3)
      for (std::size_t i2 = 0; i2 < field.grid[1]; ++i2)
        for (std::size_t i1 = 0; i1 < field.grid[0]; ++i1) {
          auto j = map(i1, i2, i3);
          for (std::size_t ri = 0; ri < field.real_or_complex; ++ri)
            out.values[field.index(c, i1, i2, i3) + ri] = field.values[field.index(c, j[0], j[1], j[2]) + ri];
        }
  return out;
}

/// Mean over the grid of the charge channels: component 0, plus component
/// 1 for collinear spin (up and down channels).
inline double electron_count(const ScalarField& field) {
  const std::size_t charge_channels = field.components == 2 ? 2 : 1;
  double sum = 0.0;
  for (std::size_t c = 0; c < charge_channels; ++c)
    for (std::size_t i3 = 0; i3 < field.grid[2]; ++i3)
      for (std::size_t i2 = 0; i2 < field.grid[1]; ++i2)
        for (std::size_t i1 = 0; i1 < field.grid[0]; ++i1) sum += field.at(c, i1, i2, i3);
  return sum / static_cast<double>(field.points());
}

/// sum_k w_k sum_n f_{n,k} over spins.
inline double occupied_charge(const WavefunctionSet& wfs) {
  double sum = 0.0;
  for (std::size_t s = 0; s < wfs.spins; ++s)
    for (std::size_t k = 0; k < wfs.kpoint_count(); ++k)
      for (std::size_t n = 0; n < wfs.states_at(s, k); ++n) sum += wfs.weights[k] * wfs.occupation(s, k, n);
  return sum;
}

/// rho(r) = sum_{sym} sum_k w_k sum_n f_{n,k} rho_{n,k}(S (r - t)).
///
/// The symmetry sum carries no 1/N_sym prefactor. With `symmetrize` false
/// only the identity term is kept. Channels: 1 (unpolarized), 2 (spin up,
/// spin down) or 4 (density, then magnetization x, y, z).
inline ScalarField build_density(const WavefunctionSet& wfs, const CrystalGeometry& geom, const Grid& grid,
                                 bool symmetrize) {
  if (grid[0] == 0 || grid[1] == 0 || grid[2] == 0) throw Error(Errc::ShapeMismatch, "empty grid");
  const SpinMode mode = wfs.spin_mode();
  if (symmetrize && mode == SpinMode::NonCollinear)
    throw Error(Errc::UnsupportedSpinorSymmetrization, "symmetrization of a non-collinear density is not supported");
  if (wfs.real_space && !wfs.plane_waves && wfs.real_space->grid != grid)
    throw Error(Errc::ShapeMismatch, "real-space wavefunctions are given on a different grid");

  std::vector<detail::GridMap> maps;
  if (symmetrize)
    for (const auto& op : geom.symmetry_ops) maps.emplace_back(op, grid);

  for (const auto& n : state_norms(wfs))
    if (std::abs(n.norm - 1.0) > tolerance::state_norm)
      throw Error(Errc::UnnormalizedInput, "state (spin " + std::to_string(n.spin) + ", k " + std::to_string(n.kpoint) +
                                               ", band " + std::to_string(n.state) + ") has norm " +
                                               std::to_string(n.norm));

  ScalarField raw;
  raw.components = triple_of(mode).components;
  raw.grid = grid;
  raw.real_or_complex = 1;
  const std::size_t npts = raw.points();
  raw.values.assign(raw.components * npts, 0.0);

  std::vector<std::vector<Complex>> psi(wfs.spinor_components);
  for (std::size_t s = 0; s < wfs.spins; ++s)
    for (std::size_t k = 0; k < wfs.kpoint_count(); ++k)
      for (std::size_t n = 0; n < wfs.states_at(s, k); ++n) {
        const double weight = wfs.weights[k] * wfs.occupation(s, k, n);
        for (std::size_t sigma = 0; sigma < wfs.spinor_components; ++sigma) {
          if (wfs.plane_waves) {
            auto c = wfs.pw_coefficients(s, k, n, sigma);
            if (wfs.uses_time_reversal(k)) {
              auto full = expand_time_reversal(wfs.kpoints[k], wfs.plane_waves->gvectors[k], c);
              psi[sigma] = detail::evaluate_plane_waves(wfs.kpoints[k], full.gvectors, full.coefficients, grid);
            } else {
              psi[sigma] = detail::evaluate_plane_waves(wfs.kpoints[k], wfs.plane_waves->gvectors[k], c, grid);
            }
          } else {
            auto v = wfs.rs_values(s, k, n, sigma);
            psi[sigma].assign(v.begin(), v.end());
          }
        }
        for (std::size_t p = 0; p < npts; ++p) {
          switch (mode) {
            case SpinMode::Unpolarized: raw.values[p] += weight * std::norm(psi[0][p]); break;
            case SpinMode::Collinear: raw.values[s * npts + p] += weight * std::norm(psi[0][p]); break;
            case SpinMode::NonCollinear: {
              const Complex up = psi[0][p], down = psi[1][p];
              const Complex cross = std::conj(up) * down;
              raw.values[p] += weight * (std::norm(up) + std::norm(down));
              raw.values[npts + p] += weight * 2.0 * cross.real();
              raw.values[2 * npts + p] += weight * 2.0 * cross.imag();
              raw.values[3 * npts + p] += weight * (std::norm(up) - std::norm(down));
              break;
            }
          }
        }
      }

  if (!symmetrize) return raw;

  ScalarField out = raw;
  std::fill(out.values.begin(), out.values.end(), 0.0);
  for (const auto& map : maps)
    for (std::size_t c = 0; c < raw.components; ++c)
      for (std::size_t i3 = 0; i3 < grid[2]; ++i3)
        for (std::size_t i2 = 0; i2 < grid[1]; ++i2)
          for (std::size_t i1 = 0; i1 < grid[0]; ++i1) {
            auto j = map(i1, i2, i3);
            out.values[raw.index(c, i1, i2, i3)] += raw.values[raw.index(c, j[0], j[1], j[2])];
          }
  return out;
}

// ---------------------------------------------------------------------------
// Kleinman-Bylander non-local part

inline double legendre(int l, double x) {
  switch (l) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3.0 * x * x - 1.0);
    case 3: return 0.5 * (5.0 * x * x * x - 3.0 * x);
    default: throw Error(Errc::OrderOutOfRange, "Legendre order " + std::to_string(l) + " outside 0..3");
  }
}

/// Form factors sampled on the plane-wave set of every k-point.
struct KbTable {
  std::size_t species = 0;
  std::size_t angular_momenta = 0;
  std::size_t projectors = 0;
  std::size_t kpoints = 0;
  std::size_t max_coefficients = 0;
  std::vector<int> sign;             ///< [species][l][p]; 0 means no projector
  std::vector<double> formfactors;   ///< [species][l][p][k][g]
  std::vector<double> derivatives;   ///< same layout, dF/dK

  int sign_at(std::size_t s, std::size_t l, std::size_t p) const {
    return sign.at((s * angular_momenta + l) * projectors + p);
  }

  double formfactor(std::size_t s, std::size_t l, std::size_t p, std::size_t k, std::size_t g) const {
    return formfactors.at((((s * angular_momenta + l) * projectors + p) * kpoints + k) * max_coefficients + g);
  }
};

/// k-points and their plane-wave sets.
struct ReciprocalSampling {
  std::vector<Vec3> kpoints;
  std::vector<std::vector<GVector>> gvectors;
};

struct PlaneWaveIndex {
  std::size_t kpoint = 0;
  std::size_t coefficient = 0;
};

/// v(K, K') = sum_s [sum_{a in s} exp(-i (K - K').tau_a)]
///                  [sum_{l,p} P_l(K^.K'^) F_slp(K) S_slp F_slp(K')]
/// with K = k + G in Cartesian coordinates. Form factors are stored real, so
/// the conjugate on the left factor is a no-op.
inline Complex kb_nonlocal_element(const PlaneWaveIndex& left, const PlaneWaveIndex& right, const KbTable& kb,
                                   const CrystalGeometry& geom, const ReciprocalSampling& sampling) {
  if (left.kpoint != right.kpoint)
    throw Error(Errc::IndexOutOfRange, "K and K' must belong to the same k-point");
  const std::size_t k = left.kpoint;
  if (k >= sampling.kpoints.size() || k >= sampling.gvectors.size() || k >= kb.kpoints)
    throw Error(Errc::IndexOutOfRange, "k-point index " + std::to_string(k));
  for (auto g : {left.coefficient, right.coefficient})
    if (g >= sampling.gvectors[k].size() || g >= kb.max_coefficients)
      throw Error(Errc::IndexOutOfRange, "plane-wave index " + std::to_string(g));
  if (kb.species != geom.species_count)
    throw Error(Errc::ShapeMismatch, "form-factor table and geometry disagree on the number of species");

  const Mat3 b = reciprocal_lattice(geom.primitive_vectors);
  auto cartesian = [&](std::size_t g) {
    const auto& G = sampling.gvectors[k][g];
    const Vec3 red{sampling.kpoints[k][0] + G[0], sampling.kpoints[k][1] + G[1], sampling.kpoints[k][2] + G[2]};
    return to_cartesian(b, red);
  };
  const Vec3 K = cartesian(left.coefficient);
  const Vec3 Kp = cartesian(right.coefficient);
  const double nk = norm(K), nkp = norm(Kp);
  const bool has_direction = nk > 0.0 && nkp > 0.0;
  const double cosine = has_direction ? std::clamp(dot(K, Kp) / (nk * nkp), -1.0, 1.0) : 0.0;
  const Vec3 dK{K[0] - Kp[0], K[1] - Kp[1], K[2] - Kp[2]};

  Complex total{};
  for (std::size_t s = 0; s < kb.species; ++s) {
    double radial = 0.0;
    for (std::size_t l = 0; l < kb.angular_momenta; ++l)
      for (std::size_t p = 0; p < kb.projectors; ++p) {
        const int sign = kb.sign_at(s, l, p);
        if (sign == 0) continue;
        if (l >= 1 && !has_direction)
          throw Error(Errc::ZeroVectorDirection, "K or K' vanishes while an l >= 1 channel is active");
        radial += legendre(static_cast<int>(l), cosine) * kb.formfactor(s, l, p, k, left.coefficient) * sign *
                  kb.formfactor(s, l, p, k, right.coefficient);
      }
    if (radial == 0.0) continue;
    Complex structure{};
    for (std::size_t a = 0; a < geom.atom_species.size(); ++a) {
      if (geom.atom_species[a] != s) continue;
      structure += std::polar(1.0, -dot(dK, geom.cartesian_position(a)));
    }
    total += structure * radial;
  }
  return total;
}

}  // namespace etsf::physics
