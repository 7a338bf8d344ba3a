#pragma once

#include <complex>

#include <Eigen/Dense>

namespace hp {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Refusal threshold for inversions of Jost-type matrices.
inline constexpr double kMaxCondition = 1e12;

/// Largest singular value (l2 operator norm).
double op_norm(const Matrix& m);

/// Smallest singular value.
double min_singular(const Matrix& m);

/// 2-norm condition number; +inf for singular input.
double condition_number(const Matrix& m);

/// Max entrywise |m - m*|.
double hermitian_defect(const Matrix& m);

/// Imaginary part (m - m*)/(2i) of a square matrix; always Hermitian.
Matrix im_part(const Matrix& m);

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue_hermitian(const Matrix& h);

/// Inverse through LU with partial pivoting. Throws ConditioningError when
/// cond(m) exceeds max_cond; writes the condition number to *cond if given.
Matrix checked_inverse(const Matrix& m, const char* what, double max_cond = kMaxCondition,
                       double* cond = nullptr);

bool all_finite(const Matrix& m);

}  // namespace hp
