// fock_algebra.hpp: Truncated Fock space: ladder operators, displacement, coherent states

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace fockfb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tolerances for DensityMatrix validation.
struct DensityTolerance {
    double symmetry = 1e-12;
    double trace = 1e-10;
    double min_eigenvalue = -1e-10;
};

// Real symmetric PSD unit-trace matrix of dimension n_max + 1.
//
// The plain constructor does not validate; the dynamics only ever produce
// states through orthogonal conjugations and diagonal projections, which keep
// the invariants up to rounding. Use checked() for caller-supplied data.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {}

    // Returns a description of the first violated invariant, if any.
    [[nodiscard]] std::optional<std::string> violation(const DensityTolerance& tol = {}) const {
        if (m_.rows() == 0 || m_.rows() != m_.cols()) {
            return "matrix must be square and non-empty";
        }
        const double asym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
        if (asym > tol.symmetry) {
            return "not symmetric (max |rho - rho^T| = " + std::to_string(asym) + ")";
        }
        const double tr = m_.trace();
        if (std::abs(tr - 1.0) > tol.trace) {
            return "trace is " + std::to_string(tr) + ", expected 1";
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        if (lo < tol.min_eigenvalue) {
            return "not positive semidefinite (min eigenvalue " + std::to_string(lo) + ")";
        }
        return std::nullopt;
    }

    [[nodiscard]] bool valid(const DensityTolerance& tol = {}) const { return !violation(tol); }

    static DensityMatrix checked(Matrix m, const DensityTolerance& tol = {}) {
        DensityMatrix rho(std::move(m));
        if (auto why = rho.violation(tol)) {
            throw std::invalid_argument("DensityMatrix: " + *why);
        }
        return rho;
    }

    // |n><n| in dimension dim.
    static DensityMatrix fock(std::size_t dim, std::size_t n) {
        if (n >= dim) throw std::out_of_range("DensityMatrix::fock: n out of range");
        Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = 1.0;
        return DensityMatrix(std::move(m));
    }

    static DensityMatrix maximally_mixed(std::size_t dim) {
        const auto d = static_cast<Eigen::Index>(dim);
        return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(dim));
    }

    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

private:
    Matrix m_;
};

// (X + X^T) / 2, rescaled to unit trace.
inline DensityMatrix symmetrize_normalize(const Matrix& x) {
    Matrix s = 0.5 * (x + x.transpose());
    s /= s.trace();
    return DensityMatrix(std::move(s));
}

// --------------------------- Ladder operators --------------------------------

// a, N and the displacement generator q = a^T - a on span{|0>, ..., |n_max>}.
// The spectral decomposition of the Hermitian matrix i*q is cached so that
// exp(alpha*q) costs one diagonal phase and two products per call.
class FockOperators {
public:
    explicit FockOperators(std::size_t n_max) : n_max_(n_max) {
        if (n_max == 0) {
            throw std::invalid_argument("FockOperators: n_max must be >= 1");
        }
        const auto d = static_cast<Eigen::Index>(n_max + 1);
        a_ = Matrix::Zero(d, d);
        for (Eigen::Index n = 1; n < d; ++n) {
            a_(n - 1, n) = std::sqrt(static_cast<double>(n));
        }
        n_op_ = Matrix::Zero(d, d);
        for (Eigen::Index n = 0; n < d; ++n) n_op_(n, n) = static_cast<double>(n);
        q_ = a_.transpose() - a_;

        const Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * q_.cast<std::complex<double>>();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        if (es.info() != Eigen::Success) {
            throw std::runtime_error("FockOperators: eigendecomposition of i(a^T - a) failed");
        }
        spectrum_ = es.eigenvalues();
        basis_ = es.eigenvectors();
    }

    [[nodiscard]] std::size_t n_max() const noexcept { return n_max_; }
    [[nodiscard]] std::size_t dim() const noexcept { return n_max_ + 1; }
    [[nodiscard]] const Matrix& a() const noexcept { return a_; }
    [[nodiscard]] const Matrix& n_op() const noexcept { return n_op_; }
    [[nodiscard]] const Matrix& q() const noexcept { return q_; }

    // exp(alpha * q) = U diag(exp(-i alpha lambda)) U^H, with i q = U diag(lambda) U^H.
    [[nodiscard]] Matrix displacement(double alpha) const {
        if (!std::isfinite(alpha)) {
            throw std::invalid_argument("displacement: alpha must be finite");
        }
        if (alpha == 0.0) {
            const auto d = static_cast<Eigen::Index>(dim());
            return Matrix::Identity(d, d);
        }
        Eigen::MatrixXcd scaled = basis_;
        for (Eigen::Index k = 0; k < scaled.cols(); ++k) {
            scaled.col(k) *= std::polar(1.0, -alpha * spectrum_(k));
        }
        return (scaled * basis_.adjoint()).real();
    }

    // Row n of exp(alpha * q), without forming the full matrix.
    [[nodiscard]] Vector displacement_row(double alpha, std::size_t n) const {
        const auto r = static_cast<Eigen::Index>(n);
        Eigen::RowVectorXcd weights = basis_.row(r);
        for (Eigen::Index k = 0; k < weights.size(); ++k) {
            weights(k) *= std::polar(1.0, -alpha * spectrum_(k));
        }
        return (weights * basis_.adjoint()).real().transpose();
    }

private:
    std::size_t n_max_;
    Matrix a_;
    Matrix n_op_;
    Matrix q_;
    Eigen::VectorXd spectrum_;
    Eigen::MatrixXcd basis_;
};

inline FockOperators make_operators(std::size_t n_max) { return FockOperators(n_max); }

inline Matrix displacement(const FockOperators& ops, double alpha) { return ops.displacement(alpha); }

// D rho D^T, re-symmetrized and trace-renormalized.
inline DensityMatrix apply_displacement(const DensityMatrix& rho, const Matrix& d) {
    if (d.rows() != d.cols() || static_cast<std::size_t>(d.rows()) != rho.dim()) {
        throw std::invalid_argument("apply_displacement: dimension mismatch");
    }
    return symmetrize_normalize(d * rho.matrix() * d.transpose());
}

// --------------------------- Coherent states and fidelity --------------------

// Poisson(n_bar) mass above n_max: the part of the ideal coherent state the
// truncated space cannot hold.
inline double poisson_tail_mass(double n_bar, std::size_t n_max) {
    double term = std::exp(-n_bar);
    double head = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        head += term;
        term *= n_bar / static_cast<double>(n + 1);
    }
    return std::max(0.0, 1.0 - head);
}

inline constexpr double kCoherentTailWarning = 1e-3;

// D(sqrt(n_bar)) |0><0| D(-sqrt(n_bar)). Callers should check
// poisson_tail_mass(n_bar, n_max) against kCoherentTailWarning.
inline DensityMatrix coherent_state(const FockOperators& ops, std::size_t n_bar) {
    const Vector col = ops.displacement(std::sqrt(static_cast<double>(n_bar))).col(0);
    return symmetrize_normalize(col * col.transpose());
}

// tr(rho |n_bar><n_bar|).
inline double fidelity(const DensityMatrix& rho, std::size_t n_bar) {
    if (n_bar >= rho.dim()) {
        throw std::out_of_range("fidelity: n_bar exceeds n_max");
    }
    return rho(n_bar, n_bar);
}

inline double mean_photon_number(const DensityMatrix& rho) {
    double acc = 0.0;
    for (std::size_t n = 0; n < rho.dim(); ++n) acc += static_cast<double>(n) * rho(n, n);
    return acc;
}

}  // namespace fockfb
