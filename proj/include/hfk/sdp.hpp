#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfk/model.hpp"

namespace hfk {

/// One decision-variable block. Symmetric blocks contribute n(n+1)/2
/// scalars (upper triangle, row by row); free blocks contribute rows·cols
/// scalars in row-major order.
struct VariableBlock {
  std::string name;
  bool symmetric = true;
  int rows = 0;
  int cols = 0;
  int offset = 0;  ///< first index in the decision vector

  int size() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
};

class VariableLayout {
 public:
  int add_symmetric(const std::string& name, int n);
  int add_free(const std::string& name, int rows, int cols);

  int size() const { return size_; }
  const std::vector<VariableBlock>& blocks() const { return blocks_; }
  const VariableBlock& block(const std::string& name) const;

  /// Matrix value of a block at decision vector x.
  Matrix extract(const std::string& name, const Vector& x) const;
  /// Writes a matrix into x (symmetric blocks read the upper triangle).
  void store(const std::string& name, const Matrix& value, Vector& x) const;
  /// Every block of x by name.
  std::map<std::string, Matrix> unpack(const Vector& x) const;

 private:
  std::vector<VariableBlock> blocks_;
  int size_ = 0;
};

/// x ↦ F0 + Σ x_i F_i with symmetric F_i.
struct AffineSymmetricMap {
  Matrix f0;
  std::vector<Matrix> fi;

  int side() const { return static_cast<int>(f0.rows()); }
  Matrix operator()(const Vector& x) const;
};

/// Constraints: every LMI map ⪯ −δI, every named floor block ⪰ εI.
/// Objective: minimize objective·x (zero or empty for pure feasibility).
struct SdpProblem {
  VariableLayout layout;
  std::vector<AffineSymmetricMap> lmis;
  std::vector<std::string> floor_blocks;
  Vector objective;
};

struct SdpOptions {
  double eps = 1e-6;
  std::optional<double> delta;  ///< default 1e-9·(1 + ‖F0‖₂) of the first LMI
  double newton_tol = 1e-10;    ///< stop centering when λ²/2 falls below this
  int max_iterations = 500;     ///< total Newton-step budget across phases
  double barrier_factor = 10.0;
  double gap_tol = 1e-9;        ///< relative duality-gap target for trace minimization
  double box_radius = 1e6;      ///< |x_i| ≤ R keeps phase I bounded
};

enum class SdpStatus {
  kFound,
  kNotFoundWithinBudget,    ///< phase I converged without a strictly feasible point
  kMaxIterationsExceeded,
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kNotFoundWithinBudget;
  Vector x;
  std::map<std::string, Matrix> blocks;
  double objective = 0.0;
  std::vector<double> lmi_max_eigs;    ///< λ_max(F_j(x)), re-verified
  std::vector<double> floor_min_eigs;  ///< λ_min(floor block), re-verified
  double eps = 0.0;
  double delta = 0.0;
  int iterations = 0;                  ///< Newton steps taken
  double gap = 0.0;                    ///< duality-gap estimate m/τ at exit
  std::vector<double> objective_trace; ///< objective after each centering
  double best_max_eig = 0.0;           ///< max_j λ_max(F_j) at the best point seen

  bool found() const { return status == SdpStatus::kFound; }
};

const char* to_string(SdpStatus s);

/// The block LMI for a linear system at level γ evaluated at (P1, P2, P_K).
/// Block sizes (n, n, n_v, n, n, n, n, n_z):
///   [−P1  0    0     A'P1  0               C'P1  C'P2  0 ]
///   [ *  −P2   0     0     A'P2 − K'P_K'   0     0     G']
///   [ *   *  −γ²I    B'P1  B'P2 − L'P_K'   D'P1  D'P2  M']
///   [ *   *    *    −P1    0               0     0     0 ]
///   [ *   *    *     *    −P2              0     0     0 ]
///   [ *   *    *     *     *              −P1    0     0 ]
///   [ *   *    *     *     *               *    −P2    0 ]
///   [ *   *    *     *     *               *     *    −I ]
Matrix lmi_matrix(const LinearStochasticSystem& sys, double gamma, const Matrix& p1,
                  const Matrix& p2, const Matrix& pk);

/// Variables P1 (sym n), P2 (sym n), PK (free n × n_y); floors on P1, P2;
/// zero objective.
SdpProblem assemble_lmi(const LinearStochasticSystem& sys, double gamma);

/// Same problem with objective Σ trace of the named symmetric blocks.
SdpProblem with_trace_objective(SdpProblem p, const std::vector<std::string>& blocks);

/// Resolved δ for a problem under the given options.
double resolve_delta(const SdpProblem& p, const SdpOptions& opt);

/// Phase I only: returns the first centered point that is strictly feasible
/// and passes independent eigenvalue re-verification.
SdpSolution solve_feasibility(const SdpProblem& p, const SdpOptions& opt = {});

/// Phase I then a barrier path on the objective.
SdpSolution minimize_trace(const SdpProblem& p, const SdpOptions& opt = {});

/// Re-evaluates all margins of x with the self-contained eigen routine.
/// Returns true when every LMI has λ_max ≤ −δ and every floor λ_min ≥ ε.
bool certify(const SdpProblem& p, const Vector& x, double eps, double delta,
             std::vector<double>* lmi_max = nullptr, std::vector<double>* floor_min = nullptr);

}  // namespace hfk
