#include "decay/models.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "decay/errors.hpp"
#include "doctest.h"

using namespace decay;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModelSpec wave_spec(int n, double alpha = 1.0,
                    std::pair<double, double> support = {0.2, 0.5}) {
  ModelSpec spec;
  spec.kind = ModelKind::Wave1D;
  spec.n = n;
  spec.damping.support = {support};
  spec.damping.alpha = alpha;
  spec.feedback = catalog_feedback("power", {{"p", 3.0}});
  return spec;
}

}  // namespace

TEST_CASE("laplacian stencil and spectrum") {
  SpMat lap = laplacian_1d(3, 0.25, BoundaryCondition::Dirichlet);
  Mat d = Mat(lap);
  for (int i = 0; i < 3; ++i) CHECK(d(i, i) == doctest::Approx(-32.0));
  CHECK(d(0, 1) == doctest::Approx(16.0));
  CHECK(d(2, 1) == doctest::Approx(16.0));
  CHECK(d(0, 2) == 0.0);

  SpMat per = laplacian_1d(4, 0.1, BoundaryCondition::Periodic);
  Vec row_sums = Mat(per).rowwise().sum();
  CHECK(row_sums.cwiseAbs().maxCoeff() <= 1e-12);

  // Dirichlet eigenvalues: -(4/dx^2) sin^2(k pi / (2(n+1))).
  const int n = 100;
  const double dx = 1.0 / (n + 1);
  Eigen::SelfAdjointEigenSolver<Mat> es(
      Mat(laplacian_1d(n, dx, BoundaryCondition::Dirichlet)));
  std::vector<double> expected(n);
  for (int k = 1; k <= n; ++k)
    expected[k - 1] = -4.0 / (dx * dx) * std::pow(std::sin(k * kPi / (2.0 * (n + 1))), 2);
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(es.eigenvalues()[i] - expected[i]) <= 1e-9 * std::abs(expected[i]));

  CHECK_THROWS_AS(laplacian_1d(1, 0.1, BoundaryCondition::Dirichlet),
                  std::invalid_argument);
}

TEST_CASE("wave model: dimensions, skewness, damping placement") {
  SemiDiscreteSystem sys = build_model(wave_spec(4));
  CHECK(sys.dim == 8);
  CHECK(sys.grid_n == 4);

  Lcg64 rng(11);
  for (int k = 0; k < 20; ++k) {
    Vec u(sys.dim);
    for (int i = 0; i < sys.dim; ++i) u[i] = rng.uniform(-1.0, 1.0);
    const double skew = sys.m_inner(sys.A * u, u);
    CHECK(std::abs(skew) <= 1e-12 * std::max(1.0, u.squaredNorm()));
  }

  SemiDiscreteSystem sys50 = build_model(wave_spec(50));
  int damped_nodes = 0;
  for (int i = 0; i < 50; ++i)
    if (sys50.damping_b[i] > 0.0) ++damped_nodes;
  CHECK(damped_nodes == 15);  // nodes i/51 in (0.2, 0.5): i = 11..25
  Mat B = Mat(sys50.B);
  CHECK(Eigen::FullPivLU<Mat>(B).rank() == 15);
  CHECK(sys50.normB == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("transport model is exactly antisymmetric") {
  ModelSpec spec;
  spec.kind = ModelKind::Transport1D;
  spec.n = 8;
  spec.feedback = catalog_feedback("power", {{"p", 3.0}});
  SemiDiscreteSystem sys = build_model(spec);
  Mat defect = Mat(sys.A) + Mat(sys.A).transpose();
  CHECK(defect.cwiseAbs().maxCoeff() == 0.0);

  // Viscosity disabled is flagged, not an error.
  spec.viscosity = ViscosityKind::None;
  SemiDiscreteSystem no_visc = build_model(spec);
  Lcg64 rng(12);
  StructureReport rep = check_structure(no_visc, rng);
  bool found_note = false;
  for (const auto& l : rep.lines)
    if (l.note == "viscosity disabled") found_note = true;
  CHECK(found_note);
  CHECK(rep.all_pass());
}

TEST_CASE("sqrtAA viscosity") {
  // Skew 2x2 with M = I: sqrt(A^T A) = a I.
  SpMat A(2, 2);
  A.insert(0, 1) = -3.0;
  A.insert(1, 0) = 3.0;
  SpMat M(2, 2);
  M.setIdentity();
  Mat W = viscosity_sqrtAA(A, M, 0.0);
  CHECK((W - 3.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);

  SpMat Z(2, 2);
  Mat We = viscosity_sqrtAA(Z, M, 0.25);
  CHECK((We - 0.25 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);

  // Wave model: spectrum of sqrt(A*A) + eps equals |spectrum of A| + eps,
  // i.e. each Laplacian frequency twice.
  ModelSpec spec = wave_spec(16);
  spec.viscosity = ViscosityKind::SqrtAA;
  spec.sqrtAA_eps = 0.5;
  SemiDiscreteSystem sys = build_model(spec);
  Mat MW = Mat(sys.M) * Mat(sys.V);
  Mat Md = Mat(sys.M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(MW, Md);

  const double dx = sys.dx;
  std::vector<double> expected;
  for (int k = 1; k <= 16; ++k) {
    const double omega = 2.0 / dx * std::sin(k * kPi / (2.0 * 17.0));
    expected.push_back(omega + 0.5);
    expected.push_back(omega + 0.5);
  }
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < sys.dim; ++i)
    CHECK(std::abs(es.eigenvalues()[i] - expected[i]) <= 1e-8 * expected[i]);
}

TEST_CASE("beam and schrodinger models pass structure checks") {
  ModelSpec beam = wave_spec(12);
  beam.kind = ModelKind::Beam1D;
  SemiDiscreteSystem bs = build_model(beam);
  CHECK(bs.dim == 24);
  Lcg64 rng(13);
  CHECK(check_structure(bs, rng).all_pass());

  ModelSpec schro = wave_spec(12);
  schro.kind = ModelKind::Schrodinger1D;
  SemiDiscreteSystem ss = build_model(schro);
  CHECK(ss.dim == 24);
  CHECK(check_structure(ss, rng).all_pass());

  // Modulus-coupled feedback: with (a,b) = (0.3, 0.4), r = 0.5, the cubic law
  // gives the factor r^2 = 0.25.
  Vec u = Vec::Zero(ss.dim);
  u[3] = 0.3;
  u[12 + 3] = 0.4;
  Vec f = ss.F(u);
  CHECK(f[3] == doctest::Approx(0.075).epsilon(1e-14));
  CHECK(f[12 + 3] == doctest::Approx(0.1).epsilon(1e-14));

  // Jacobian agrees with finite differences of F.
  Lcg64 rng2(14);
  Vec base(ss.dim), dir(ss.dim);
  for (int i = 0; i < ss.dim; ++i) {
    base[i] = rng2.uniform(-0.5, 0.5);
    dir[i] = rng2.uniform(-1.0, 1.0);
  }
  const double h = 1e-6;
  Vec fd = (ss.F(base + h * dir) - ss.F(base - h * dir)) / (2.0 * h);
  Vec an = ss.F_jacobian(base) * dir;
  CHECK((fd - an).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("viscosity bound and frequency convergence across meshes") {
  double previous_err = 1e9;
  for (int n : {25, 50, 100}) {
    SemiDiscreteSystem sys = build_model(wave_spec(n));
    const double dx = sys.dx;
    Eigen::SelfAdjointEigenSolver<Mat> es(
        Mat(-laplacian_1d(n, dx, BoundaryCondition::Dirichlet)));
    const double bound = dx * dx * es.eigenvalues().maxCoeff();
    CHECK(bound <= 4.0);  // uniform in the sweep

    const double omega1 = std::sqrt(es.eigenvalues().minCoeff());
    const double err = std::abs(omega1 - kPi);
    CHECK(err < previous_err);
    if (previous_err < 1e8) {
      const double ratio = previous_err / err;
      CHECK(ratio > 3.0);  // O(dx^2): error drops ~4x when halving dx
      CHECK(ratio < 5.0);
    }
    previous_err = err;
  }
}

TEST_CASE("initial states") {
  SemiDiscreteSystem sys = build_model(wave_spec(64));
  Lcg64 rng(21);

  Vec smooth = initial_state(sys, InitialDataRule::Smooth, rng);
  CHECK(sys.energy(smooth) == doctest::Approx(1.0).epsilon(1e-12));

  Vec hf = initial_state(sys, InitialDataRule::HighFreq, rng);
  CHECK(sys.energy(hf) == doctest::Approx(0.5).epsilon(1e-12));  // L2-normalized velocity
  for (int i = 0; i < 64; ++i) {
    CHECK(hf[i] == 0.0);  // displacement block empty
    const double x = sys.positions[i];
    if (!(x > 0.6 && x < 0.9)) CHECK(hf[64 + i] == 0.0);
  }
  int sign_flips = 0, support_nodes = 0;
  double prev = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double v = hf[64 + i];
    if (v != 0.0) {
      ++support_nodes;
      if (prev != 0.0 && v * prev < 0.0) ++sign_flips;
      prev = v;
    }
  }
  CHECK(support_nodes > 10);
  CHECK(sign_flips == support_nodes - 1);

  Lcg64 rng_a(99), rng_b(99);
  Vec ra = initial_state(sys, InitialDataRule::Random, rng_a);
  Vec rb = initial_state(sys, InitialDataRule::Random, rng_b);
  CHECK((ra - rb).norm() == 0.0);  // same seed, same probe
  CHECK(sys.energy(ra) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("custom models: round trip and violated invariants") {
  SemiDiscreteSystem wave = build_model(wave_spec(6));
  const std::string dir = "/tmp/decay_test_models";
  std::system(("mkdir -p " + dir).c_str());
  save_coordinate_matrix(dir + "/A.txt", wave.A);
  save_coordinate_matrix(dir + "/B.txt", wave.B);
  save_coordinate_matrix(dir + "/V.txt", wave.V);
  save_coordinate_matrix(dir + "/M.txt", wave.M);

  ModelSpec custom;
  custom.kind = ModelKind::Custom;
  custom.A_file = dir + "/A.txt";
  custom.B_file = dir + "/B.txt";
  custom.V_file = dir + "/V.txt";
  custom.M_file = dir + "/M.txt";
  custom.feedback = catalog_feedback("power", {{"p", 3.0}});
  SemiDiscreteSystem sys = build_model(custom);
  CHECK(sys.dim == 12);
  CHECK((Mat(sys.A) - Mat(wave.A)).cwiseAbs().maxCoeff() == 0.0);

  // Symmetric A must be rejected with the skewness invariant named.
  save_coordinate_matrix(dir + "/A.txt", wave.M);
  bool threw = false;
  try {
    build_model(custom);
  } catch (const ModelError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("skew") != std::string::npos);
  }
  CHECK(threw);
}
