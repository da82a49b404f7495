#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

#include "decay/feedback.hpp"
#include "decay/rng.hpp"

namespace decay {

using SpMat = Eigen::SparseMatrix<double>;
using Mat = Eigen::MatrixXd;

enum class BoundaryCondition { Dirichlet, Periodic };

/// 1D finite-difference Laplacian: tridiagonal -2/dx^2 diagonal, 1/dx^2
/// off-diagonals; the periodic variant is circulant with wraparound corners.
SpMat laplacian_1d(int n, double dx, BoundaryCondition bc);

/// Damping coefficient b(x) >= 0, equal to alpha on the union of support
/// intervals and 0 elsewhere.
struct DampingField {
  std::vector<std::pair<double, double>> support;  // empty = everywhere
  double alpha = 1.0;

  double operator()(double x) const {
    if (support.empty()) return alpha;
    for (const auto& [a, b] : support)
      if (x > a && x < b) return alpha;
    return 0.0;
  }
};

enum class ViscosityKind { None, LaplacianBlock, SqrtAA };

enum class ModelKind { Wave1D, Transport1D, Schrodinger1D, Beam1D, Custom };

struct ModelSpec {
  ModelKind kind = ModelKind::Wave1D;
  int n = 100;           // grid size (state dimension is model dependent)
  double length = 1.0;   // domain length
  DampingField damping;
  FeedbackMap feedback;
  double sigma = 2.0;    // viscosity exponent
  ViscosityKind viscosity = ViscosityKind::LaplacianBlock;
  double sqrtAA_eps = 0.0;

  // Custom models: coordinate-format matrix files ("n nnz" header, then
  // "row col value" lines, 0-based).
  std::string A_file, B_file, V_file, M_file;
};

/// A finite-dimensional dissipative system u' + A u + B F(u) + dx^sigma V u = 0
/// with energy (1/2) u^T M u. A is skew-adjoint and B, V selfadjoint PSD in
/// the M-inner product. Immutable after assembly; shareable across threads.
struct SemiDiscreteSystem {
  std::string kind;
  int dim = 0;      // state dimension
  int grid_n = 0;   // number of grid nodes
  double dx = 0.0;
  double sigma = 2.0;
  double length = 1.0;

  SpMat A, B, V, M;
  Vec positions;      // grid node coordinates
  Vec damping_b;      // b at the grid nodes
  FeedbackMap feedback;

  /// Component layout, e.g. {"displacement","velocity"}; block i occupies
  /// rows [i*grid_n, (i+1)*grid_n).
  std::vector<std::string> labels;
  int damped_block = 0;  // block the feedback acts on (whole state if blocks == 1)

  double normB = 0.0;  // lambda_max(B) in the M-inner product (0 if dim > 512)

  Vec F(const Vec& u) const;                    // feedback lifted to the state space
  SpMat F_jacobian(const Vec& u) const;         // sparse Jacobian of F at u
  double energy(const Vec& u) const;            // (1/2) u^T M u
  double m_inner(const Vec& a, const Vec& b) const;
  double m_norm(const Vec& u) const;

  bool has_viscosity() const { return V.nonZeros() > 0; }
};

/// Assembles one of the catalog models (or loads a custom one) and runs the
/// structure checks; throws ModelError naming the violated invariant.
SemiDiscreteSystem build_model(const ModelSpec& spec);

/// M-symmetric PSD square root of A*A (adjoint taken in the M-inner product)
/// plus eps*I, via a dense generalized eigendecomposition. Desk scale only
/// (dim <= 512).
Mat viscosity_sqrtAA(const SpMat& A, const SpMat& M, double eps);

struct StructureReport {
  struct Line {
    std::string name;
    double margin = 0.0;
    bool pass = true;
    std::string note;
  };
  std::vector<Line> lines;
  bool all_pass() const {
    for (const auto& l : lines)
      if (!l.pass) return false;
    return true;
  }
};

/// Evaluates all SemiDiscreteSystem invariants and reports margins:
/// M-skewness of A, symmetry/PSD of MB and MV, the dissipativity inequality
/// on random probes, and the dx^sigma lambda_max(V) boundedness value.
StructureReport check_structure(const SemiDiscreteSystem& sys, Lcg64& rng);

enum class InitialDataRule { Smooth, HighFreq, Random };

/// Initial states: "smooth" is a fixed low-frequency profile, "highfreq" the
/// Nyquist-alternating velocity packet supported in (0.6, 0.9) away from the
/// canonical damping window, L^2-normalized; "random" draws components from
/// the seeded LCG. Smooth and random states are normalized to unit energy.
Vec initial_state(const SemiDiscreteSystem& sys, InitialDataRule rule, Lcg64& rng);

/// Coordinate-format sparse matrix I/O for custom models.
SpMat load_coordinate_matrix(const std::string& path);
void save_coordinate_matrix(const std::string& path, const SpMat& m);

}  // namespace decay
