// Acceptance criteria for the toolkit. Prints one PASS/FAIL line per
// criterion and exits nonzero if any criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "etsf/content.hpp"
#include "etsf/physics.hpp"
#include "etsf/validate.hpp"
#include "etsf_kit.hpp"
#include "support/fixtures.hpp"
#include "support/mutations.hpp"
#include "support/oracles.hpp"

using namespace etsf;
using namespace etsf::physics;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

/// Collects the first few failed expectations of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    if (failures_.size() < 5) failures_.push_back(what);
    ++failed_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::abs(got - want) <= tol, s.str());
  }
  bool ok() const { return failed_ == 0 && total_ > 0; }
  std::string summary() const {
    if (total_ == 0) return "no checks ran";
    std::string out = std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks";
    for (const auto& f : failures_) out += "; " + f;
    return out;
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::vector<std::string> failures_;
};

struct Cli {
  int code;
  std::string out;
};

Cli kit_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = kit::run(args, out, err, kit::Style{});
  return {code, out.str() + err.str()};
}

std::string fixture(const std::string& name) { return std::string(ETSF_FIXTURE_DIR) + "/" + name; }

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "etsf-acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string save(const std::string& name, const nc::Dataset& ds) {
  const auto p = (scratch() / name).string();
  nc::write_file(p, ds);
  return p;
}

double max_difference(const ScalarField& a, const ScalarField& b) {
  if (a.values.size() != b.values.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

CrystalGeometry cubic(double a) {
  CrystalGeometry g;
  g.primitive_vectors = {Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}};
  g.symmetry_ops = {SymmetryOp::identity()};
  return g;
}

double reported(const std::string& out, const std::string& label) {
  const auto at = out.find(label + ": ");
  return at == std::string::npos ? NAN : std::stod(out.substr(at + label.size() + 2));
}

// ---------------------------------------------------------------------------

void codec_round_trip(Check& c) {
  std::mt19937_64 rng(1000);
  std::set<nc::Type> types;
  std::set<std::size_t> ranks;
  for (int i = 0; i < 1200; ++i) {
    const auto format = i % 2 ? nc::Format::Offset64 : nc::Format::Classic;
    const auto ds = oracles::random_dataset(rng, static_cast<std::size_t>(i % 9), format);
    for (const auto& v : ds.vars) {
      types.insert(v.type());
      ranks.insert(v.dims.size());
    }
    const auto bytes = nc::write(ds);
    const auto back = nc::parse(bytes);
    c.expect(back == ds, "dataset " + std::to_string(i) + " differs after parse(write(d))");
    c.expect(nc::write(back) == bytes, "dataset " + std::to_string(i) + " is not a fixed point of write");
  }
  c.expect(types.size() == 6, "not every element type was exercised");
  c.expect(ranks.size() == 9, "not every rank 0..8 was exercised");
}

void reference_fixture(Check& c) {
  const auto bytes = nc::read_bytes(fixture("si_reference.nc"));
  const auto ds = nc::parse(bytes);
  auto expected = fixtures::silicon_crystal();
  expected.add_dim("symbol_length", 2);
  expected.add_var("chemical_symbols", {"number_of_atom_species", "symbol_length"}, std::string("Si"));
  c.expect(ds.attrs == expected.attrs, "global attributes differ");
  c.expect(ds.vars.size() == expected.vars.size(), "variable count differs");
  for (const auto& v : expected.vars) {
    const auto* got = ds.find_var(v.name);
    c.expect(got && got->data == v.data && got->attrs == v.attrs && ds.dim_names(*got) == expected.dim_names(v),
             "variable " + v.name + " differs");
  }
  c.expect(validate(ds, FileKind::Crystallographic).passed(), "reference file fails validation");

  const auto ours = nc::write(ds);
  c.expect(ours == bytes, "re-serialization differs from the reference bytes");
  const auto audit = oracles::audit(ours);
  c.expect(audit.ok(), "structural audit: " + (audit.problems.empty() ? std::string() : audit.problems.front()));

  const auto out = (scratch() / "si_reserialized.nc").string();
  nc::write_file(out, ds);
  const auto golden_copy = save("si-etsf.nc", fixtures::silicon_crystal());
  for (const auto& path : {out, golden_copy}) {
    const auto cmd = "python3 \"" + fixture("check_with_reference.py") + "\" \"" + path + "\"";
    c.expect(std::system(cmd.c_str()) == 0, "reference reader rejects " + fs::path(path).filename().string());
  }
}

void validator_bijection(Check& c) {
  const std::pair<FileKind, nc::Dataset (*)()> goldens[] = {
      {FileKind::Crystallographic, fixtures::silicon_crystal},
      {FileKind::Density, fixtures::silicon_density},
      {FileKind::Potential, fixtures::silicon_potential},
      {FileKind::Wavefunctions, fixtures::gamma_wavefunctions},
      {FileKind::Wavefunctions, fixtures::time_reversal_wavefunctions},
      {FileKind::Wavefunctions, fixtures::expanded_wavefunctions},
      {FileKind::Wavefunctions, fixtures::real_space_wavefunctions},
      {FileKind::Wavefunctions, fixtures::two_plane_wave},
  };
  for (const auto& [kind, build] : goldens)
    c.expect(validate(nc::parse(nc::write(build())), kind).count(Severity::Error) == 0,
             std::string("golden ") + std::string(to_string(kind)) + " reports errors");

  std::set<std::string> rules;
  for (const auto& m : fixtures::single_field_mutations()) {
    rules.insert(m.rule);
    auto ds = m.golden();
    m.mutate(ds);
    const auto report = validate(nc::parse(nc::write(ds)), m.kind);
    std::string got;
    for (const auto& r : report.error_rules()) got += " " + r;
    c.expect(report.error_rules() == std::set<std::string>{m.rule}, m.rule + " mutation reports" + got);
  }
  c.expect(rules.size() >= 25, "only " + std::to_string(rules.size()) + " single-field rules");
}

void unit_semantics(Check& c) {
  auto ev = fixtures::gamma_wavefunctions();
  auto& eig = fixtures::var(ev, "eigenvalues");
  eig.data = std::vector<double>{1.0, -3.5};
  nc::set_attribute(eig.attrs, "units", std::string("eV"));
  nc::set_attribute(eig.attrs, "scale_to_atomic_units", std::vector<double>{fixtures::ev_to_hartree});
  const auto scale = resolve_to_atomic_units(fixtures::var(ev, "eigenvalues"));
  c.near(1.0 * scale.scale_to_atomic_units, 0.036749326, 1e-9, "1 eV in Hartree");

  auto ha = fixtures::gamma_wavefunctions();
  fixtures::var(ha, "eigenvalues").data = std::vector<double>{0.036749326, -3.5 * 0.036749326};
  const auto a = save("eig-ev-etsf.nc", ev), b = save("eig-ha-etsf.nc", ha);
  const auto r = kit_run({"diff", a, b, "--atol", "1e-9"});
  c.expect(r.code == 0, "diff eV vs Hartree exits " + std::to_string(r.code) + ": " + r.out);
  c.expect(kit_run({"diff", b, a, "--atol", "1e-9"}).code == 0, "diff is not symmetric");

  fixtures::var(ha, "eigenvalues").data = std::vector<double>{0.036749326 + 1e-7, -3.5 * 0.036749326};
  c.expect(kit_run({"diff", a, save("eig-off-etsf.nc", ha), "--atol", "1e-9"}).code == 1,
           "diff misses a 1e-7 Hartree difference");
}

nc::Dataset with_weights(std::vector<double> w) {
  std::vector<double> k;
  for (std::size_t i = 0; i < w.size(); ++i) k.insert(k.end(), {0.0, 0.0, 0.1 * static_cast<double>(i)});
  const std::size_t nk = w.size();
  auto ds = fixtures::wavefunction_core(k, std::move(w), 1, std::vector<double>(nk, 2.0), std::vector<double>(nk, -0.1));
  fixtures::add_grid(ds, 4, 4, 4);
  fixtures::add_plane_waves(ds, {{0, 0, 0}}, std::vector<std::complex<double>>(nk, {1.0, 0.0}));
  return ds;
}

void weight_and_norm(Check& c) {
  auto rules = [](const nc::Dataset& ds) { return validate(ds, FileKind::Wavefunctions).error_rules(); };
  const std::set<std::string> none, weight{"KPT-WEIGHT-SUM"}, norm{"WF-NORM"};
  for (double d : {1e-8, -1e-8, 5e-9, 0.0})
    c.expect(rules(with_weights({0.5, 0.5 + d})) == none, "weight deviation " + std::to_string(d) + " rejected");
  for (double d : {1e-6, -1e-6, 1e-3})
    c.expect(rules(with_weights({0.25, 0.75 + d})) == weight, "weight deviation " + std::to_string(d) + " accepted");

  auto plane_wave = [](double n) {
    auto ds = fixtures::gamma_wavefunctions();
    std::get<std::vector<double>>(fixtures::var(ds, "coefficients_of_wavefunctions").data)[0] = std::sqrt(n);
    return ds;
  };
  auto real_space = [](double n) {
    auto ds = fixtures::real_space_wavefunctions();
    for (auto& x : std::get<std::vector<double>>(fixtures::var(ds, "real_space_wavefunctions").data))
      x *= std::sqrt(n);
    return ds;
  };
  for (double d : {5e-7, -5e-7}) {
    c.expect(rules(plane_wave(1.0 + d)) == none, "plane-wave norm 1" + std::to_string(d) + " rejected");
    c.expect(rules(real_space(1.0 + d)) == none, "grid norm 1" + std::to_string(d) + " rejected");
  }
  for (double d : {2e-6, -2e-6}) {
    c.expect(rules(plane_wave(1.0 + d)) == norm, "plane-wave norm 1" + std::to_string(d) + " accepted");
    c.expect(rules(real_space(1.0 + d)) == norm, "grid norm 1" + std::to_string(d) + " accepted");
  }
}

void density_closure(Check& c) {
  std::mt19937_64 rng(6);
  const Grid grid{12, 12, 12};
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t nk = 1 + static_cast<std::size_t>(trial % 3);
    const auto w = fixtures::random_plane_wave_set(rng, nk, 5, 33);
    const auto rho = build_density(w, cubic(6.5), grid, false);
    c.near(electron_count(rho), occupied_charge(w), 1e-10, "closure with " + std::to_string(nk) + " k-points");
  }
  const auto ds = fixtures::two_plane_wave();
  const Grid g8{8, 8, 8};
  const auto rho = build_density(load_wavefunctions(ds), load_geometry(ds), g8, false);
  double worst = 0.0;
  for (std::size_t i3 = 0; i3 < 8; ++i3)
    for (std::size_t i2 = 0; i2 < 8; ++i2)
      for (std::size_t i1 = 0; i1 < 8; ++i1)
        worst = std::max(worst, std::abs(rho.at(0, i1, i2, i3) - (1.0 + std::cos(2 * pi * static_cast<double>(i1) / 8.0))));
  c.near(worst, 0.0, 1e-10, "two-plane-wave closed form");
}

void time_reversal(Check& c) {
  const auto tr = fixtures::time_reversal_wavefunctions();
  const auto full = fixtures::expanded_wavefunctions();
  for (Grid g : {Grid{6, 6, 6}, Grid{5, 7, 4}}) {
    const auto a = build_density(load_wavefunctions(tr), load_geometry(tr), g, false);
    const auto b = build_density(load_wavefunctions(full), load_geometry(full), g, false);
    c.near(max_difference(a, b), 0.0, 1e-10, "compressed vs expanded density");
  }

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n = 1; n <= 12; ++n) {
    std::vector<GVector> g{{0, 0, 0}};
    for (int i = 1; g.size() < n; ++i) g.push_back({i, (i * 5) % 4 - 1, 2 - i});
    std::vector<Complex> coef(n);
    for (auto& x : coef) x = {u(rng), u(rng)};
    coef[0] = {u(rng), 0.0};
    const auto e = expand_time_reversal({0, 0, 0}, g, coef);
    c.expect(e.gvectors.size() == 2 * n - 1, "expanded size for n = " + std::to_string(n));
    double stored = 0.0, expanded = 0.0;
    for (auto x : coef) stored += std::norm(x);
    for (auto x : e.coefficients) expanded += std::norm(x);
    c.near(expanded, 2.0 * stored - std::norm(coef[0]), 1e-12, "norm identity for n = " + std::to_string(n));
  }
}

void symmetry(Check& c) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 r{u(rng), u(rng), u(rng)};
    c.expect(apply_symmetry(SymmetryOp::identity(), r) == r, "identity moves a point");
  }

  const IntMat3 quarter{{{0, -1, 0}, {1, 0, 0}, {0, 0, 1}}};
  std::vector<SymmetryOp> screw;
  IntMat3 m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int j = 0; j < 4; ++j) {
    screw.push_back({m, {0.0, 0.0, j / 4.0}});
    IntMat3 next{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 3; ++k) next[a][b] += quarter[a][k] * m[k][b];
    m = next;
  }
  const std::vector<SymmetryOp> swap{SymmetryOp::identity(), {IntMat3{{{0, 1, 0}, {1, 0, 0}, {0, 0, 1}}}, {0, 0, 0}}};
  const auto w = fixtures::random_plane_wave_set(rng, 2, 3, 15);
  auto geom = cubic(6.0);
  for (const auto& ops : {screw, swap}) {
    geom.symmetry_ops = ops;
    const auto rho = build_density(w, geom, {12, 12, 12}, true);
    for (const auto& s : ops) c.near(max_difference(apply_to_field(s, rho), rho), 0.0, 1e-10, "resampled density");
  }

  auto ds = fixtures::silicon_crystal();
  auto& rot = std::get<std::vector<std::int32_t>>(fixtures::var(ds, "reduced_symmetry_matrices").data);
  std::swap_ranges(rot.begin(), rot.begin() + 9, rot.begin() + 9);
  c.expect(validate(ds, FileKind::Crystallographic).error_rules() == std::set<std::string>{"CRYST-IDENTITY-FIRST"},
           "non-identity first operation not singled out");
}

struct KbCase {
  CrystalGeometry geom;
  KbTable kb;
  ReciprocalSampling sampling;
};

KbCase kb_case(Vec3 k, std::vector<Vec3> atoms, std::size_t lmax, std::size_t species) {
  const std::vector<GVector> g{{0, 0, 0}, {1, 0, 0}, {0, -1, 2}, {1, 1, 1}, {-2, 0, 1}, {0, 2, -1}};
  KbCase c;
  c.geom = cubic(8.0);
  c.geom.species_count = species;
  c.geom.reduced_positions = std::move(atoms);
  for (std::size_t i = 0; i < c.geom.reduced_positions.size(); ++i) c.geom.atom_species.push_back(i % species);
  c.sampling.kpoints = {k};
  c.sampling.gvectors = {g};
  c.kb.species = species;
  c.kb.angular_momenta = lmax + 1;
  c.kb.projectors = 1;
  c.kb.kpoints = 1;
  c.kb.max_coefficients = g.size();
  c.kb.sign.assign(species * (lmax + 1), 0);
  c.kb.sign[0] = 1;
  c.kb.formfactors.assign(species * (lmax + 1) * g.size(), 0.0);
  c.kb.derivatives = c.kb.formfactors;
  return c;
}

void kleinman_bylander(Check& c) {
  const std::size_t n = 6;
  {
    auto k = kb_case({0, 0, 0}, {{0, 0, 0}}, 0, 1);
    std::fill(k.kb.formfactors.begin(), k.kb.formfactors.end(), 0.7);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c.expect(kb_nonlocal_element({0, i}, {0, j}, k.kb, k.geom, k.sampling) == Complex(0.7 * 0.7, 0.0),
                 "constant form factor is not c^2 exactly");
  }
  {
    const Vec3 tau{0.1, 0.2, 0.05};
    auto k = kb_case({0.25, 0, 0.125}, {tau, {-tau[0], -tau[1], -tau[2]}}, 0, 1);
    std::fill(k.kb.formfactors.begin(), k.kb.formfactors.end(), 1.3);
    const auto& g = k.sampling.gvectors[0];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        // Direct sum over both atoms of exp(-i (K-K').tau) in a cubic cell of side 8.
        Complex expected{};
        for (const Vec3& t : k.geom.reduced_positions) {
          double phase = 0.0;
          for (int d = 0; d < 3; ++d) phase += 2 * pi * (g[i][d] - g[j][d]) * t[d];
          expected += std::exp(Complex(0.0, -phase)) * 1.3 * 1.3;
        }
        const auto e = kb_nonlocal_element({0, i}, {0, j}, k.kb, k.geom, k.sampling);
        c.near(std::abs(e - expected), 0.0, 1e-12, "two-atom structure factor");
      }
  }
  {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto k = kb_case({0.13, -0.21, 0.07}, {{0.1, 0.3, 0.7}, {0.6, 0.2, 0.9}, {0.45, 0.8, 0.15}}, 3, 2);
    k.geom.primitive_vectors = {Vec3{0.0, 4.5, 4.5}, Vec3{4.5, 0.0, 4.5}, Vec3{4.5, 4.5, 0.0}};
    k.kb.sign = {1, -1, 0, 1, -1, 1, 1, 0};
    for (auto& x : k.kb.formfactors) x = u(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto e = kb_nonlocal_element({0, i}, {0, j}, k.kb, k.geom, k.sampling);
        const auto h = std::conj(kb_nonlocal_element({0, j}, {0, i}, k.kb, k.geom, k.sampling));
        c.near(std::abs(e - h), 0.0, 1e-12, "Hermiticity");
      }
  }
  for (int i = 0; i <= 100; ++i) {
    const double x = -1.0 + 2.0 * i / 100.0;
    for (int l = 1; l <= 2; ++l)
      c.near((l + 1) * legendre(l + 1, x) - (2 * l + 1) * x * legendre(l, x) + l * legendre(l - 1, x), 0.0, 1e-12,
             "Legendre recurrence");
  }
  c.expect(legendre(0, 0.3) == 1.0 && legendre(1, 0.3) == 0.3, "low Legendre polynomials");
}

void pipeline(Check& c) {
  auto ds = fixtures::wavefunction_core({0, 0, 0}, {1.0}, 1, {2.0}, {-0.5});
  fixtures::add_grid(ds, 4, 4, 4);
  fixtures::add_plane_waves(ds, {{0, 0, 0}}, {{1.0, 0.0}});
  const auto inputs = {save("single-etsf.nc", ds), save("tpw-etsf.nc", fixtures::two_plane_wave())};
  for (const auto& in : inputs)
    for (const std::string name : {"rho-etsf.nc", "rho.nc", "rho-etsf.cdf", "rho_etsf.nc"}) {
      const auto out = (scratch() / name).string();
      fs::remove(out);
      const auto made = kit_run({"density", in, "--out", out});
      c.expect(made.code == 0 && fs::exists(out), "density --out " + name + " exits " + std::to_string(made.code));
      c.near(reported(made.out, "closure deviation"), 0.0, 1e-10, "closure of " + name);
      const auto checked = kit_run({"validate", out, "--kind", "density"});
      c.expect(checked.code == 0 && checked.out.find("0 errors") != std::string::npos,
               "validate " + name + ": " + checked.out);
      const bool suffix = name.ends_with("-etsf.nc");
      const bool warned = checked.out.find("NAME-SUFFIX") != std::string::npos;
      const bool warned_on_write = made.out.find("NAME-SUFFIX") != std::string::npos;
      c.expect(warned == !suffix, "suffix warning on validate for " + name);
      c.expect(warned_on_write == !suffix, "suffix warning on write for " + name);
    }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"codec round trip over randomized datasets", codec_round_trip},
      {"cross-validation against the independent reference writer", reference_fixture},
      {"validator catalogue bijection", validator_bijection},
      {"unit semantics of eV eigenvalues", unit_semantics},
      {"weight and norm invariants", weight_and_norm},
      {"density closure and closed form", density_closure},
      {"time reversal at Gamma", time_reversal},
      {"symmetry operations and symmetrization", symmetry},
      {"Kleinman-Bylander element and Legendre polynomials", kleinman_bylander},
      {"density pipeline closure", pipeline},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
              << c.summary() << ")" << std::endl;
    failed += c.ok() ? 0 : 1;
  }
  fs::remove_all(scratch());
  return failed == 0 ? 0 : 1;
}
