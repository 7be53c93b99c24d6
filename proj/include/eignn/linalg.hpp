#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace eignn {

using DenseVector = std::vector<double>;

/// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline double dot(const DenseVector& u, const DenseVector& v) {
    if (u.size() != v.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

inline DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
    if (a.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    DenseVector y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double max_abs(const DenseVector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline bool is_symmetric(const DenseMatrix& a, double rel_tol) {
    if (a.rows != a.cols) return false;
    double scale = std::max(1.0, max_abs(a.data));
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = i + 1; j < a.cols; ++j)
            if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
    return true;
}

enum class PauliKind { x, z, identity };

/// Standard 2x2 Pauli matrices (real subset: sigma_x, sigma_z, identity).
inline DenseMatrix pauli(PauliKind kind) {
    DenseMatrix m(2, 2);
    switch (kind) {
        case PauliKind::x:
            m(0, 1) = 1.0;
            m(1, 0) = 1.0;
            return m;
        case PauliKind::z:
            m(0, 0) = 1.0;
            m(1, 1) = -1.0;
            return m;
        case PauliKind::identity:
            m(0, 0) = 1.0;
            m(1, 1) = 1.0;
            return m;
    }
    throw std::invalid_argument("pauli: unsupported kind");
}

inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix out(a.rows * b.rows, a.cols * b.cols);
    for (std::size_t ia = 0; ia < a.rows; ++ia)
        for (std::size_t ja = 0; ja < a.cols; ++ja) {
            const double f = a(ia, ja);
            if (f == 0.0) continue;
            for (std::size_t ib = 0; ib < b.rows; ++ib)
                for (std::size_t jb = 0; jb < b.cols; ++jb)
                    out(ia * b.rows + ib, ja * b.cols + jb) = f * b(ib, jb);
        }
    return out;
}

/// Embeds a 2x2 operator at `site` in an n-site chain: I (x) ... (x) op (x) ... (x) I,
/// with site 0 the leftmost Kronecker factor.
inline DenseMatrix site_operator(const DenseMatrix& op, std::size_t site, std::size_t n) {
    if (op.rows != 2 || op.cols != 2) throw std::invalid_argument("site_operator: op must be 2x2");
    if (site >= n) throw std::invalid_argument("site_operator: site out of range");
    DenseMatrix out = (site == 0) ? op : DenseMatrix::identity(2);
    for (std::size_t k = 1; k < n; ++k)
        out = kron(out, (k == site) ? op : DenseMatrix::identity(2));
    return out;
}

/// Transverse-field Ising Hamiltonian on a ring of n spins:
///   H = -sum_i sz_i sz_{i+1} - B_x sum_i sx_i - B_z sum_i sz_i,
/// all sums over i = 0..n-1 with site indices mod n. For n = 2 the single
/// bond is counted twice (literal ring sum); this is intentional.
inline DenseMatrix ising_hamiltonian(std::size_t n, double b_x, double b_z) {
    if (n < 1) throw std::invalid_argument("ising_hamiltonian: n must be >= 1");
    if (n > 12) throw std::invalid_argument("ising_hamiltonian: n > 12 exceeds the dense memory budget");
    const std::size_t d = std::size_t{1} << n;
    DenseMatrix h(d, d);
    // Site i occupies bit n-1-i of the basis index (site 0 = leftmost Kronecker
    // factor); sigma_z reads +1 for a clear bit, -1 for a set bit, and sigma_x
    // flips the bit. Equivalent to the explicit site_operator sum, tested as such.
    auto spin = [n](std::size_t state, std::size_t site) {
        return (state >> (n - 1 - site)) & 1 ? -1.0 : 1.0;
    };
    for (std::size_t s = 0; s < d; ++s) {
        double diag = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag -= spin(s, i) * spin(s, (i + 1) % n);
            diag -= b_z * spin(s, i);
            h(s, s ^ (std::size_t{1} << (n - 1 - i))) -= b_x;
        }
        h(s, s) += diag;
    }
    return h;
}

/// Full spectrum of a symmetric matrix: ascending eigenvalues, orthonormal
/// eigenvector columns (column k pairs with eigenvalue k).
struct EigenDecomposition {
    DenseVector eigenvalues;
    DenseMatrix eigenvectors;
};

/// Cyclic Jacobi diagonalization. Converges when the off-diagonal Frobenius
/// norm falls below 1e-12 relative to ||A||_F; throws after 100 sweeps.
inline EigenDecomposition eig_symmetric(const DenseMatrix& input) {
    if (input.rows != input.cols) throw std::invalid_argument("eig_symmetric: matrix must be square");
    if (!is_symmetric(input, 1e-12)) throw std::invalid_argument("eig_symmetric: matrix must be symmetric");

    const std::size_t n = input.rows;
    DenseMatrix a = input;
    DenseMatrix v = DenseMatrix::identity(n);

    const double frob = frobenius_norm(a);
    const double tol = 1e-12 * std::max(frob, 1e-300);
    constexpr int kMaxSweeps = 100;

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    double off = off_norm();
    int sweep = 0;
    while (off > tol) {
        if (sweep++ >= kMaxSweeps) {
            throw std::runtime_error("eig_symmetric: no convergence after 100 sweeps, off-diagonal residual " +
                                     std::to_string(off));
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol / (10.0 * static_cast<double>(n))) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = off_norm();
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
    }
    return out;
}

enum class SpectrumDirection { smallest, largest };

/// Sign convention for eigenvector labels: the entry of largest magnitude is
/// made positive, ties broken by lowest index. Keeps labels continuous in the
/// Hamiltonian parameters.
inline void normalize_sign(DenseVector& v) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        if (m > best) {
            best = m;
            arg = i;
        }
    }
    if (v[arg] < 0.0)
        for (double& x : v) x = -x;
}

/// Extreme eigenpair (smallest or largest eigenvalue) with sign-normalized,
/// unit-norm eigenvector.
inline std::pair<double, DenseVector> ground_state(const DenseMatrix& a, SpectrumDirection direction) {
    const EigenDecomposition eig = eig_symmetric(a);
    const std::size_t n = a.rows;
    const std::size_t k = (direction == SpectrumDirection::smallest) ? 0 : n - 1;
    DenseVector y(n);
    for (std::size_t r = 0; r < n; ++r) y[r] = eig.eigenvectors(r, k);
    normalize_sign(y);
    return {eig.eigenvalues[k], y};
}

inline double cosine_similarity(const DenseVector& u, const DenseVector& v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
    const double nu = norm2(u), nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_similarity: zero vector");
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace eignn
