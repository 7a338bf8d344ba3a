#include "hpencil/linalg.hpp"

#include <cmath>
#include <limits>

#include "hpencil/errors.hpp"

namespace hp {

namespace {

Eigen::VectorXd singular_values(const Matrix& m) {
  if (m.size() == 0) {
    return Eigen::VectorXd();
  }
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

}  // namespace

double op_norm(const Matrix& m) {
  if (m.size() == 0) {
    return 0.0;
  }
  if (m.size() == 1) {
    return std::abs(m(0, 0));
  }
  return singular_values(m)(0);
}

double min_singular(const Matrix& m) {
  if (m.size() == 1) {
    return std::abs(m(0, 0));
  }
  const auto s = singular_values(m);
  return s.size() ? s(s.size() - 1) : 0.0;
}

double condition_number(const Matrix& m) {
  if (m.size() == 1) {
    return std::abs(m(0, 0)) > 0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  const auto s = singular_values(m);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return s(0) / smin;
}

double hermitian_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Matrix im_part(const Matrix& m) {
  return (m - m.adjoint()) / (2.0 * kI);
}

double min_eigenvalue_hermitian(const Matrix& h) {
  const Matrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix checked_inverse(const Matrix& m, const char* what, double max_cond, double* cond) {
  const double c = condition_number(m);
  if (cond) {
    *cond = c;
  }
  if (!(c <= max_cond)) {
    throw ConditioningError(std::string(what) + " is numerically singular", c);
  }
  return m.partialPivLu().inverse();
}

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

}  // namespace hp
