#include "thp/conic/cone_program.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace thp::conic {

const char* to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::kZero:
      return "zero";
    case ConeKind::kNonnegative:
      return "nonnegative";
    case ConeKind::kSecondOrder:
      return "second_order";
    case ConeKind::kRotatedSecondOrder:
      return "rotated_second_order";
    case ConeKind::kPsd:
      return "psd";
  }
  return "unknown";
}

int ConeConstraint::rows() const {
  return kind == ConeKind::kPsd ? size * (size + 1) / 2 : size;
}

int packed_index(int i, int j, int n) {
  // Column j starts after columns 0..j-1 of lengths n, n-1, ...
  return j * n - j * (j - 1) / 2 + (i - j);
}

int ConeProgram::add_variables(int count) {
  if (count < 0) throw std::invalid_argument("negative variable count");
  const int first = num_vars_;
  num_vars_ += count;
  objective_.conservativeResize(num_vars_);
  objective_.tail(count).setZero();
  return first;
}

void ConeProgram::set_objective(int var, double coefficient) {
  if (var < 0 || var >= num_vars_) throw std::out_of_range("objective variable");
  objective_(var) = coefficient;
}

void ConeProgram::add_objective(int var, double coefficient) {
  if (var < 0 || var >= num_vars_) throw std::out_of_range("objective variable");
  objective_(var) += coefficient;
}

void ConeProgram::add_constraint(ConeConstraint constraint) {
  const int rows = constraint.rows();
  if (constraint.size < 1) throw std::invalid_argument("empty cone block");
  if (constraint.kind == ConeKind::kRotatedSecondOrder && constraint.size < 2) {
    throw std::invalid_argument("rotated cone needs at least two rows");
  }
  if (constraint.constant.size() == 0) {
    constraint.constant = Eigen::VectorXd::Zero(rows);
  }
  if (constraint.constant.size() != rows) {
    throw std::invalid_argument("cone constant length differs from block rows");
  }
  for (const Triplet& t : constraint.terms) {
    if (t.row < 0 || t.row >= rows) throw std::invalid_argument("triplet row");
    if (t.var < 0 || t.var >= num_vars_) {
      throw std::invalid_argument("triplet variable");
    }
  }
  constraints_.push_back(std::move(constraint));
}

Eigen::VectorXd evaluate(const ConeConstraint& c, const Eigen::VectorXd& x) {
  Eigen::VectorXd v = c.constant;
  for (const Triplet& t : c.terms) v(t.row) += t.value * x(t.var);
  return v;
}

Eigen::MatrixXd unpack_symmetric(const Eigen::VectorXd& packed, int n) {
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      m(i, j) = m(j, i) = packed(packed_index(i, j, n));
    }
  }
  return m;
}

double ConeProgram::min_cone_margin(const Eigen::VectorXd& x) const {
  double margin = std::numeric_limits<double>::infinity();
  for (const ConeConstraint& c : constraints_) {
    const Eigen::VectorXd v = evaluate(c, x);
    double m = 0.0;
    switch (c.kind) {
      case ConeKind::kZero:
        m = -v.cwiseAbs().maxCoeff();
        break;
      case ConeKind::kNonnegative:
        m = v.minCoeff();
        break;
      case ConeKind::kSecondOrder:
        m = v(0) - v.tail(v.size() - 1).norm();
        break;
      case ConeKind::kRotatedSecondOrder: {
        const double u = (v(0) + v(1)) / std::sqrt(2.0);
        const double w = (v(0) - v(1)) / std::sqrt(2.0);
        m = u - std::hypot(w, v.tail(v.size() - 2).norm());
        break;
      }
      case ConeKind::kPsd:
        m = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                unpack_symmetric(v, c.size), Eigen::EigenvaluesOnly)
                .eigenvalues()(0);
        break;
    }
    margin = std::min(margin, m);
  }
  return margin;
}

std::string ConeProgram::to_json() const {
  nlohmann::json j;
  j["num_variables"] = num_vars_;
  j["objective"] = std::vector<double>(objective_.data(),
                                       objective_.data() + objective_.size());
  j["objective_constant"] = objective_constant_;
  j["layout"] = "constant + F x in cone; psd rows are packed lower triangle, "
                "column-major";
  auto& cones = j["constraints"] = nlohmann::json::array();
  for (const ConeConstraint& c : constraints_) {
    nlohmann::json cj;
    cj["kind"] = to_string(c.kind);
    cj["size"] = c.size;
    cj["constant"] = std::vector<double>(c.constant.data(),
                                         c.constant.data() + c.constant.size());
    auto& triplets = cj["triplets"] = nlohmann::json::array();
    for (const Triplet& t : c.terms) {
      triplets.push_back({t.row, t.var, t.value});
    }
    cones.push_back(std::move(cj));
  }
  return j.dump(1);
}

}  // namespace thp::conic
