#include "rse/linalg.hpp"

#include "rse/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rse::linalg {

Mat symmetrize(const Mat& a) {
    return 0.5 * (a + a.transpose());
}

Mat pinv(const Mat& a, double rel_tol) {
    if (a.size() == 0) {
        return Mat::Zero(a.cols(), a.rows());
    }
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double cutoff = rel_tol * s(0);
    Vec inv = Vec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int rank(const Mat& a, double rel_tol) {
    if (a.size() == 0) {
        return 0;
    }
    Eigen::BDCSVD<Mat> svd(a);
    const Vec& s = svd.singularValues();
    if (s(0) == 0.0) {
        return 0;
    }
    return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

int rank(const CMat& a, double rel_tol) {
    if (a.size() == 0) {
        return 0;
    }
    Eigen::BDCSVD<CMat> svd(a);
    const Vec s = svd.singularValues();
    if (s(0) == 0.0) {
        return 0;
    }
    return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

double condition_number(const Mat& a) {
    if (a.size() == 0) {
        return 1.0;
    }
    Eigen::BDCSVD<Mat> svd(a);
    const Vec& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin <= 0.0 || a.rows() != a.cols()) {
        return a.rows() == a.cols() ? std::numeric_limits<double>::infinity()
                                    : s(0) / std::max(smin, 0.0);
    }
    return s(0) / smin;
}

Mat solve_spd(const Mat& a, const Mat& b, std::string_view what, double max_condition) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw DimensionError("solve_spd: incompatible shapes for " + std::string(what));
    }
    if (a.size() == 0) {
        return Mat::Zero(0, b.cols());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    const double emax = ev.cwiseAbs().maxCoeff();
    const double emin = ev.minCoeff();
    if (!(emin > 0.0) || emax / emin > max_condition) {
        throw NumericalError(std::string(what) + " is singular or ill-conditioned (condition number " +
                             std::to_string(emin > 0.0 ? emax / emin : INFINITY) + ")");
    }
    Eigen::LDLT<Mat> ldlt(symmetrize(a));
    return ldlt.solve(b);
}

PsdInverse psd_pseudo_inverse(const Mat& a, double rel_tol) {
    PsdInverse out;
    out.pinv = Mat::Zero(a.cols(), a.rows());
    if (a.size() == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
    const Vec& ev = es.eigenvalues();
    const double emax = ev.cwiseAbs().maxCoeff();
    if (emax == 0.0) {
        return out;
    }
    const double cutoff = rel_tol * emax;
    Vec inv = Vec::Zero(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > cutoff) {
            inv(i) = 1.0 / ev(i);
            out.det.log_det += std::log(ev(i));
            ++out.det.rank;
        }
    }
    const Mat& v = es.eigenvectors();
    out.pinv = v * inv.asDiagonal() * v.transpose();
    return out;
}

double min_eigenvalue(const Mat& symmetric) {
    if (symmetric.size() == 0) {
        return 0.0;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(symmetric), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

bool is_psd(const Mat& symmetric, double rel_tol) {
    if (symmetric.size() == 0) {
        return true;
    }
    const double scale = std::max(symmetric.trace(), std::numeric_limits<double>::min());
    return min_eigenvalue(symmetric) >= -rel_tol * scale;
}

bool is_symmetric(const Mat& a, double rel_tol) {
    if (a.rows() != a.cols()) {
        return false;
    }
    if (a.size() == 0) {
        return true;
    }
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Mat psd_factor(const Mat& a) {
    if (a.size() == 0) {
        return Mat::Zero(a.rows(), a.cols());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a));
    const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

double spectral_norm(const Mat& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

std::vector<Complex> eigenvalues(const Mat& a) {
    std::vector<Complex> out;
    if (a.size() == 0) {
        return out;
    }
    Eigen::EigenSolver<Mat> es(a, false);
    const auto& ev = es.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    return out;
}

double spectral_radius(const Mat& a) {
    double r = 0.0;
    for (const Complex& z : eigenvalues(a)) {
        r = std::max(r, std::abs(z));
    }
    return r;
}

Mat vstack(const Mat& top, const Mat& bottom) {
    const Eigen::Index cols = top.rows() > 0 ? top.cols() : bottom.cols();
    if (top.rows() > 0 && bottom.rows() > 0 && top.cols() != bottom.cols()) {
        throw DimensionError("vstack: column counts differ");
    }
    Mat out(top.rows() + bottom.rows(), cols);
    if (top.rows() > 0) {
        out.topRows(top.rows()) = top;
    }
    if (bottom.rows() > 0) {
        out.bottomRows(bottom.rows()) = bottom;
    }
    return out;
}

Mat hstack(const Mat& left, const Mat& right) {
    const Eigen::Index rows = left.cols() > 0 ? left.rows() : right.rows();
    if (left.cols() > 0 && right.cols() > 0 && left.rows() != right.rows()) {
        throw DimensionError("hstack: row counts differ");
    }
    Mat out(rows, left.cols() + right.cols());
    if (left.cols() > 0) {
        out.leftCols(left.cols()) = left;
    }
    if (right.cols() > 0) {
        out.rightCols(right.cols()) = right;
    }
    return out;
}

double spectrum_distance(std::vector<Complex> a, std::vector<Complex> b) {
    if (a.size() != b.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (const Complex& z : a) {
        auto best = std::min_element(b.begin(), b.end(), [&](const Complex& l, const Complex& r) {
            return std::abs(l - z) < std::abs(r - z);
        });
        worst = std::max(worst, std::abs(*best - z));
        b.erase(best);
    }
    return worst;
}

}  // namespace rse::linalg
