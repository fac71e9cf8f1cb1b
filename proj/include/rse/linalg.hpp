#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string_view>
#include <vector>

namespace rse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

namespace linalg {

/// Relative singular-value cutoff for pseudo-inverses and the rank of H.
inline constexpr double kPinvTol = 1e-10;
/// Largest condition number accepted for any matrix we invert.
inline constexpr double kMaxCondition = 1e12;

Mat symmetrize(const Mat& a);

/// Moore-Penrose inverse; singular values below rel_tol * sigma_max are dropped.
Mat pinv(const Mat& a, double rel_tol = kPinvTol);

int rank(const Mat& a, double rel_tol);
int rank(const CMat& a, double rel_tol);

/// sigma_max / sigma_min; +inf when singular, 1 for empty matrices.
double condition_number(const Mat& a);

/// Solves a * x = b for symmetric positive (semi)definite a.
/// Throws NumericalError naming `what` when a is too badly conditioned.
Mat solve_spd(const Mat& a, const Mat& b, std::string_view what,
              double max_condition = kMaxCondition);

struct PseudoDeterminant {
    double log_det = 0.0;  // log of the product of the nonzero eigenvalues
    int rank = 0;
};

/// Pseudo-determinant and pseudo-inverse of a symmetric PSD matrix, from one
/// eigendecomposition so that both use the same rank decision.
struct PsdInverse {
    Mat pinv;
    PseudoDeterminant det;
};
PsdInverse psd_pseudo_inverse(const Mat& a, double rel_tol = kPinvTol);

double min_eigenvalue(const Mat& symmetric);

/// min eigenvalue >= -rel_tol * max(trace, tiny).
bool is_psd(const Mat& symmetric, double rel_tol = 1e-8);

bool is_symmetric(const Mat& a, double rel_tol = 1e-10);

/// F with F * F^T == a for symmetric PSD a (eigenvalue factor, so
/// semidefinite inputs are fine).
Mat psd_factor(const Mat& a);

double spectral_norm(const Mat& a);
double spectral_radius(const Mat& a);

std::vector<Complex> eigenvalues(const Mat& a);

/// Stacks blocks while tolerating zero-sized pieces.
Mat vstack(const Mat& top, const Mat& bottom);
Mat hstack(const Mat& left, const Mat& right);

/// Maximum over a of the distance to the nearest element of b, after a greedy
/// one-to-one matching. Returns +inf when sizes differ.
double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b);

}  // namespace linalg
}  // namespace rse
