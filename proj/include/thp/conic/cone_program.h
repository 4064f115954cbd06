#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace thp::conic {

enum class ConeKind {
  kZero,               // affine expression == 0
  kNonnegative,        // componentwise >= 0
  kSecondOrder,        // (u, w): u >= ||w||
  kRotatedSecondOrder, // (u, v, w): 2 u v >= ||w||^2, u, v >= 0
  kPsd,                // symmetric matrix >= 0
};

const char* to_string(ConeKind kind);

struct Triplet {
  int row;
  int var;
  double value;
};

/// `constant + F x` must lie in the cone. For kPsd of order n the rows are
/// the n(n+1)/2 lower-triangle entries (i >= j) in column-major order and
/// carry the matrix entries themselves.
struct ConeConstraint {
  ConeKind kind = ConeKind::kNonnegative;
  int size = 0;  // vector length, or matrix order for kPsd
  Eigen::VectorXd constant;
  std::vector<Triplet> terms;

  int rows() const;
};

/// Row of entry (i, j), i >= j, in the packed PSD layout of order n.
int packed_index(int i, int j, int n);

/// minimize  objective . x + objective_constant  subject to the cone
/// constraints.
class ConeProgram {
 public:
  /// Returns the index of the first new variable.
  int add_variables(int count);
  int add_variable() { return add_variables(1); }
  int num_variables() const { return num_vars_; }

  void set_objective(int var, double coefficient);
  void add_objective(int var, double coefficient);
  void add_objective_constant(double value) { objective_constant_ += value; }
  const Eigen::VectorXd& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  /// Throws std::invalid_argument when a triplet falls outside the block or
  /// references an unknown variable.
  void add_constraint(ConeConstraint constraint);
  const std::vector<ConeConstraint>& constraints() const { return constraints_; }

  /// Minimum over constraints of the cone-membership margin at `x`
  /// (smallest eigenvalue / cone residual; zero cones report -|residual|).
  double min_cone_margin(const Eigen::VectorXd& x) const;

  /// Self-describing JSON dump for cross-checking with external solvers.
  std::string to_json() const;

 private:
  int num_vars_ = 0;
  Eigen::VectorXd objective_;
  double objective_constant_ = 0.0;
  std::vector<ConeConstraint> constraints_;
};

/// Value of constraint `c` at `x` (length c.rows()).
Eigen::VectorXd evaluate(const ConeConstraint& c, const Eigen::VectorXd& x);

/// Dense symmetric matrix from the packed lower-triangle layout.
Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& packed, int n);

}  // namespace thp::conic
