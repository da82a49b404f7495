#include "decay/models.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

#include "decay/errors.hpp"

namespace decay {

namespace {

constexpr int kDenseCheckLimit = 512;  // desk-scale cap for dense eigensolves

SpMat block_diag(const SpMat& top, const SpMat& bottom) {
  const int n1 = static_cast<int>(top.rows());
  const int n2 = static_cast<int>(bottom.rows());
  SpMat out(n1 + n2, n1 + n2);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(top.nonZeros() + bottom.nonZeros());
  for (int k = 0; k < top.outerSize(); ++k)
    for (SpMat::InnerIterator it(top, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < bottom.outerSize(); ++k)
    for (SpMat::InnerIterator it(bottom, k); it; ++it)
      trip.emplace_back(n1 + it.row(), n1 + it.col(), it.value());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat sparse_diag(const Vec& d) {
  SpMat out(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] != 0.0) trip.emplace_back(i, i, d[i]);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat sparse_identity(int n, double scale = 1.0) {
  SpMat out(n, n);
  out.setIdentity();
  if (scale != 1.0) out *= scale;
  return out;
}

/// [[0, TR], [BL, 0]] from two n x n blocks.
SpMat anti_block(const SpMat& top_right, const SpMat& bottom_left) {
  const int n = static_cast<int>(top_right.rows());
  SpMat out(2 * n, 2 * n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(top_right.nonZeros() + bottom_left.nonZeros());
  for (int k = 0; k < top_right.outerSize(); ++k)
    for (SpMat::InnerIterator it(top_right, k); it; ++it)
      trip.emplace_back(it.row(), n + it.col(), it.value());
  for (int k = 0; k < bottom_left.outerSize(); ++k)
    for (SpMat::InnerIterator it(bottom_left, k); it; ++it)
      trip.emplace_back(n + it.row(), it.col(), it.value());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double max_abs(const SpMat& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

double generalized_lambda_max(const SpMat& MQ, const SpMat& M) {
  Mat a = Mat(MQ);
  Mat b = Mat(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(a, b);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

SpMat laplacian_1d(int n, double dx, BoundaryCondition bc) {
  if (n < 2) throw std::invalid_argument("laplacian_1d: n must be >= 2");
  if (!(dx > 0.0)) throw std::invalid_argument("laplacian_1d: dx must be positive");
  const double d = -2.0 / (dx * dx);
  const double o = 1.0 / (dx * dx);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, d);
    if (i + 1 < n) {
      trip.emplace_back(i, i + 1, o);
      trip.emplace_back(i + 1, i, o);
    }
  }
  if (bc == BoundaryCondition::Periodic) {
    trip.emplace_back(0, n - 1, o);
    trip.emplace_back(n - 1, 0, o);
  }
  SpMat out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Vec SemiDiscreteSystem::F(const Vec& u) const {
  Vec out = Vec::Zero(dim);
  if (kind == "schrodinger1d") {
    // F(u)(x) = u(x) rho(x, |u(x)|) on the complex pair (Re, Im); the
    // removable singularity at |u| = 0 evaluates to 0 for superlinear laws.
    const int n = grid_n;
    for (int i = 0; i < n; ++i) {
      const double a = u[i], b = u[n + i];
      const double r = std::hypot(a, b);
      double factor = 0.0;
      if (r > 1e-150) {
        factor = feedback.rho(positions[i], r) / r;
      } else if (feedback.growth.kind == GrowthKind::LinearAtZero) {
        factor = feedback.rho_ds ? feedback.rho_ds(positions[i], 0.0) : 1.0;
      }
      out[i] = factor * a;
      out[n + i] = factor * b;
    }
    return out;
  }
  const int n = grid_n;
  const int off = damped_block * n;
  out.segment(off, n) = apply(feedback, positions, u.segment(off, n), dx);
  return out;
}

SpMat SemiDiscreteSystem::F_jacobian(const Vec& u) const {
  std::vector<Eigen::Triplet<double>> trip;
  const int n = grid_n;
  if (kind == "schrodinger1d") {
    for (int i = 0; i < n; ++i) {
      const double a = u[i], b = u[n + i];
      const double r = std::hypot(a, b);
      double j11, j12, j22;
      if (r > 1e-150) {
        const double rho = feedback.rho(positions[i], r);
        const double rho_p = feedback.rho_ds ? feedback.rho_ds(positions[i], r)
                                             : (feedback.rho(positions[i], r + 1e-7) -
                                                feedback.rho(positions[i], r - 1e-7)) /
                                                   2e-7;
        const double eta = rho / r;
        const double eta_p = (rho_p * r - rho) / (r * r);
        j11 = eta + (a * a / r) * eta_p;
        j12 = (a * b / r) * eta_p;
        j22 = eta + (b * b / r) * eta_p;
      } else {
        const double eta0 = feedback.growth.kind == GrowthKind::LinearAtZero
                                ? (feedback.rho_ds ? feedback.rho_ds(positions[i], 0.0) : 1.0)
                                : 0.0;
        j11 = j22 = eta0;
        j12 = 0.0;
      }
      trip.emplace_back(i, i, j11);
      trip.emplace_back(i, n + i, j12);
      trip.emplace_back(n + i, i, j12);
      trip.emplace_back(n + i, n + i, j22);
    }
  } else {
    const int off = damped_block * n;
    Vec diag = apply_jacobian_diag(feedback, positions, u.segment(off, n), dx);
    for (int i = 0; i < n; ++i) trip.emplace_back(off + i, off + i, diag[i]);
  }
  SpMat out(dim, dim);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

double SemiDiscreteSystem::energy(const Vec& u) const { return 0.5 * u.dot(M * u); }

double SemiDiscreteSystem::m_inner(const Vec& a, const Vec& b) const {
  return a.dot(M * b);
}

double SemiDiscreteSystem::m_norm(const Vec& u) const {
  return std::sqrt(std::max(0.0, m_inner(u, u)));
}

Mat viscosity_sqrtAA(const SpMat& A, const SpMat& M, double eps) {
  const int n = static_cast<int>(A.rows());
  if (n > kDenseCheckLimit)
    throw std::invalid_argument(
        "viscosity_sqrtAA: dimension exceeds the dense desk-scale cap (512); use the "
        "block-Laplacian viscosity");
  // A* A = M^{-1} A^T M A; its M-orthonormal eigenbasis V (V^T M V = I) gives
  // sqrt(A*A) = V sqrt(Lambda) V^T M.
  SpMat MA = SpMat(M * A);
  SpMat At = SpMat(A.transpose());
  Mat AtMA = Mat(SpMat(At * MA));
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(AtMA, Mat(M));
  if (es.info() != Eigen::Success)
    throw NumericsError("viscosity_sqrtAA: eigendecomposition failed");
  Vec lambda = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Mat W = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose() * Mat(M);
  if (eps != 0.0) W += eps * Mat::Identity(n, n);
  return W;
}

namespace {

void assemble_wave_like(SemiDiscreteSystem& sys, const ModelSpec& spec, bool beam) {
  const int n = spec.n;
  const double dx = spec.length / (n + 1);
  sys.grid_n = n;
  sys.dim = 2 * n;
  sys.dx = dx;
  sys.positions = Vec(n);
  for (int i = 0; i < n; ++i) sys.positions[i] = (i + 1) * dx;

  SpMat lap = laplacian_1d(n, dx, BoundaryCondition::Dirichlet);
  SpMat neg_lap = SpMat(-lap);
  SpMat stiff = beam ? SpMat(lap * lap) : neg_lap;  // -Delta or Delta^2

  // First-order form [[0, -I], [stiff, 0]]: y' = v, v' = -stiff y.
  sys.A = anti_block(sparse_identity(n, -1.0), stiff);
  sys.damping_b = Vec(n);
  for (int i = 0; i < n; ++i) sys.damping_b[i] = spec.damping(sys.positions[i]);
  sys.B = block_diag(SpMat(n, n), sparse_diag(sys.damping_b));
  sys.M = block_diag(SpMat(stiff * dx), sparse_identity(n, dx));
  sys.labels = {"displacement", "velocity"};
  sys.damped_block = 1;

  switch (spec.viscosity) {
    case ViscosityKind::None:
      sys.V = SpMat(sys.dim, sys.dim);
      break;
    case ViscosityKind::LaplacianBlock:
      sys.V = block_diag(SpMat(n, n), neg_lap);
      break;
    case ViscosityKind::SqrtAA:
      sys.V = viscosity_sqrtAA(sys.A, sys.M, spec.sqrtAA_eps).sparseView();
      break;
  }
}

void assemble_transport(SemiDiscreteSystem& sys, const ModelSpec& spec) {
  const int n = spec.n;
  if (n < 3) throw ModelError("transport1d needs n >= 3");
  const double dx = spec.length / n;
  sys.grid_n = n;
  sys.dim = n;
  sys.dx = dx;
  sys.positions = Vec(n);
  for (int i = 0; i < n; ++i) sys.positions[i] = i * dx;

  // Central differences: exactly skew-symmetric; dissipation comes only from
  // B and the viscosity.
  std::vector<Eigen::Triplet<double>> trip;
  const double c = 1.0 / (2.0 * dx);
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, (i + 1) % n, c);
    trip.emplace_back(i, (i + n - 1) % n, -c);
  }
  sys.A = SpMat(n, n);
  sys.A.setFromTriplets(trip.begin(), trip.end());

  sys.damping_b = Vec(n);
  for (int i = 0; i < n; ++i) sys.damping_b[i] = spec.damping(sys.positions[i]);
  sys.B = sparse_diag(sys.damping_b);
  sys.M = sparse_identity(n, dx);
  sys.labels = {"density"};
  sys.damped_block = 0;

  switch (spec.viscosity) {
    case ViscosityKind::None:
      sys.V = SpMat(n, n);
      break;
    case ViscosityKind::LaplacianBlock:
      sys.V = SpMat(-laplacian_1d(n, dx, BoundaryCondition::Periodic));
      break;
    case ViscosityKind::SqrtAA:
      sys.V = viscosity_sqrtAA(sys.A, sys.M, spec.sqrtAA_eps).sparseView();
      break;
  }
}

void assemble_schrodinger(SemiDiscreteSystem& sys, const ModelSpec& spec) {
  const int n = spec.n;
  const double dx = spec.length / (n + 1);
  sys.grid_n = n;
  sys.dim = 2 * n;
  sys.dx = dx;
  sys.positions = Vec(n);
  for (int i = 0; i < n; ++i) sys.positions[i] = (i + 1) * dx;

  SpMat lap = laplacian_1d(n, dx, BoundaryCondition::Dirichlet);
  SpMat neg_lap = SpMat(-lap);

  // Complex grid function stored as [Re | Im]; A = [[0, -Lap], [Lap, 0]].
  sys.A = anti_block(SpMat(-lap), lap);
  sys.damping_b = Vec(n);
  for (int i = 0; i < n; ++i) sys.damping_b[i] = spec.damping(sys.positions[i]);
  sys.B = block_diag(sparse_diag(sys.damping_b), sparse_diag(sys.damping_b));
  sys.M = sparse_identity(2 * n, dx);
  sys.labels = {"re", "im"};
  sys.damped_block = 0;

  switch (spec.viscosity) {
    case ViscosityKind::None:
      sys.V = SpMat(sys.dim, sys.dim);
      break;
    case ViscosityKind::LaplacianBlock:
      sys.V = block_diag(neg_lap, neg_lap);
      break;
    case ViscosityKind::SqrtAA:
      sys.V = viscosity_sqrtAA(sys.A, sys.M, spec.sqrtAA_eps).sparseView();
      break;
  }
}

void assemble_custom(SemiDiscreteSystem& sys, const ModelSpec& spec) {
  if (spec.A_file.empty() || spec.B_file.empty() || spec.M_file.empty())
    throw ConfigError("custom model requires model.A_file, model.B_file, model.M_file");
  sys.A = load_coordinate_matrix(spec.A_file);
  sys.B = load_coordinate_matrix(spec.B_file);
  sys.M = load_coordinate_matrix(spec.M_file);
  const int dim = static_cast<int>(sys.A.rows());
  if (sys.B.rows() != dim || sys.M.rows() != dim)
    throw ModelError("custom model: matrix dimensions disagree");
  sys.V = spec.V_file.empty() ? SpMat(dim, dim) : load_coordinate_matrix(spec.V_file);
  if (sys.V.rows() != dim) throw ModelError("custom model: V dimension disagrees");
  sys.dim = dim;
  sys.grid_n = dim;
  sys.dx = spec.length / (dim + 1);
  sys.positions = Vec(dim);
  for (int i = 0; i < dim; ++i) sys.positions[i] = (i + 1) * sys.dx;
  sys.damping_b = Vec(dim);
  for (int i = 0; i < dim; ++i) sys.damping_b[i] = spec.damping(sys.positions[i]);
  sys.labels = {"state"};
  sys.damped_block = 0;
}

}  // namespace

SemiDiscreteSystem build_model(const ModelSpec& spec) {
  SemiDiscreteSystem sys;
  sys.sigma = spec.sigma;
  sys.length = spec.length;
  sys.feedback = spec.feedback;
  if (!sys.feedback.rho && !sys.feedback.phi1) sys.feedback = catalog_feedback("power");

  switch (spec.kind) {
    case ModelKind::Wave1D:
      sys.kind = "wave1d";
      assemble_wave_like(sys, spec, /*beam=*/false);
      break;
    case ModelKind::Beam1D:
      sys.kind = "beam1d";
      assemble_wave_like(sys, spec, /*beam=*/true);
      break;
    case ModelKind::Transport1D:
      sys.kind = "transport1d";
      assemble_transport(sys, spec);
      break;
    case ModelKind::Schrodinger1D:
      sys.kind = "schrodinger1d";
      assemble_schrodinger(sys, spec);
      break;
    case ModelKind::Custom:
      sys.kind = "custom";
      assemble_custom(sys, spec);
      break;
  }

  if (sys.dim <= kDenseCheckLimit) {
    sys.normB = generalized_lambda_max(SpMat(sys.M * sys.B), sys.M);
  }

  Lcg64 rng(0x5eed5eedULL);
  StructureReport report = check_structure(sys, rng);
  for (const auto& line : report.lines) {
    if (!line.pass)
      throw ModelError("model assembly: invariant '" + line.name +
                       "' violated (margin " + std::to_string(line.margin) + ")");
  }
  return sys;
}

StructureReport check_structure(const SemiDiscreteSystem& sys, Lcg64& rng) {
  StructureReport report;
  const bool dense_ok = sys.dim <= kDenseCheckLimit;

  {
    SpMat MA = SpMat(sys.M * sys.A);
    SpMat skew_defect = SpMat(MA + SpMat(MA.transpose()));
    const double scale = std::max(max_abs(MA), 1e-300);
    const double margin = max_abs(skew_defect) / scale;
    report.lines.push_back({"A_m_skewness", margin, margin <= 1e-12, ""});
  }

  auto sym_psd_check = [&](const SpMat& MQ, const std::string& label, bool is_viscosity) {
    const double scale = std::max(max_abs(MQ), 1e-300);
    SpMat defect = SpMat(MQ - SpMat(MQ.transpose()));
    const double sym_margin = max_abs(defect) / scale;
    report.lines.push_back({label + "_symmetry", sym_margin, sym_margin <= 1e-12, ""});
    if (is_viscosity && MQ.nonZeros() == 0) {
      report.lines.push_back({label + "_psd", 0.0, true, "viscosity disabled"});
      return;
    }
    if (dense_ok) {
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Mat(MQ) + Mat(MQ).transpose()));
      const double lmin = es.eigenvalues().minCoeff();
      report.lines.push_back({label + "_psd", lmin, lmin >= -1e-10 * std::max(1.0, scale), ""});
    } else {
      report.lines.push_back({label + "_psd", 0.0, true, "skipped (dim > 512)"});
    }
  };
  sym_psd_check(SpMat(sys.M * sys.B), "MB", false);
  sym_psd_check(SpMat(sys.M * sys.V), "MV", true);

  {
    // <u, B F(u)>_M + dx^sigma <V u, u>_M >= 0 on random probes.
    const double s = std::pow(sys.dx, sys.sigma);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      Vec u(sys.dim);
      for (int i = 0; i < sys.dim; ++i) u[i] = rng.uniform(-1.0, 1.0);
      const double q = sys.m_inner(u, sys.B * sys.F(u)) + s * sys.m_inner(u, sys.V * u);
      const double norm2 = std::max(1.0, u.squaredNorm());
      worst = std::min(worst, q / norm2);
    }
    report.lines.push_back({"dissipativity", worst, worst >= -1e-12, ""});
  }

  if (dense_ok && sys.V.nonZeros() > 0) {
    const double bound =
        std::pow(sys.dx, sys.sigma) * generalized_lambda_max(SpMat(sys.M * sys.V), sys.M);
    report.lines.push_back(
        {"viscosity_bound", bound, std::isfinite(bound), "dx^sigma lambda_max(V)"});
  }
  return report;
}

Vec initial_state(const SemiDiscreteSystem& sys, InitialDataRule rule, Lcg64& rng) {
  constexpr double kPi = 3.14159265358979323846;
  Vec u = Vec::Zero(sys.dim);
  const int n = sys.grid_n;
  switch (rule) {
    case InitialDataRule::Smooth: {
      const double freq = sys.kind == "transport1d" ? 2.0 : 1.0;
      for (int i = 0; i < n && i < sys.dim; ++i)
        u[i] = std::sin(freq * kPi * sys.positions[i] / sys.length);
      break;
    }
    case InitialDataRule::HighFreq: {
      // Nyquist-alternating profile supported in (0.6, 0.9), away from the
      // canonical damping window (0.2, 0.5); L2-normalized.
      const int block = sys.labels.size() > 1 ? 1 : 0;
      const int off = block * n;
      double norm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = sys.positions[i] / sys.length;
        if (x > 0.6 && x < 0.9) {
          u[off + i] = (i % 2 == 0) ? 1.0 : -1.0;
          norm2 += sys.dx;
        }
      }
      if (norm2 > 0.0) u /= std::sqrt(norm2);
      return u;
    }
    case InitialDataRule::Random: {
      for (int i = 0; i < sys.dim; ++i) u[i] = rng.uniform(-1.0, 1.0);
      break;
    }
  }
  const double e = sys.energy(u);
  if (e > 0.0) u /= std::sqrt(e);  // unit energy
  return u;
}

SpMat load_coordinate_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
  int n = 0;
  long nnz = 0;
  in >> n >> nnz;
  if (!in || n <= 0 || nnz < 0)
    throw ConfigError("matrix file '" + path + "': bad header (want 'n nnz')");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz);
  for (long k = 0; k < nnz; ++k) {
    int r = 0, c = 0;
    double v = 0.0;
    in >> r >> c >> v;
    if (!in) throw ConfigError("matrix file '" + path + "': truncated at entry " +
                               std::to_string(k));
    if (r < 0 || r >= n || c < 0 || c >= n)
      throw ConfigError("matrix file '" + path + "': index out of range");
    trip.emplace_back(r, c, v);
  }
  SpMat out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

void save_coordinate_matrix(const std::string& path, const SpMat& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write matrix file '" + path + "'");
  out << m.rows() << " " << m.nonZeros() << "\n";
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", static_cast<int>(it.row()),
                    static_cast<int>(it.col()), it.value());
      out << buf;
    }
}

}  // namespace decay
