#pragma once

// Dense symmetric linear algebra kernels used by all solvers:
// cyclic-Jacobi eigendecomposition, Cholesky factorization, PSD square
// roots, Kronecker products and trace-compatible symmetric vectorization.
// Everything is value-based and reentrant; matrices are small and dense
// (row-major doubles), no attempt is made to scale past a few hundred rows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace teamlq {

using Vec = std::vector<double>;

class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}
    Mat(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        a_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw std::invalid_argument("Mat: ragged initializer");
            a_.insert(a_.end(), r.begin(), r.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Mat zeros(std::size_t r, std::size_t c) { return Mat(r, c); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return a_.empty(); }
    bool is_square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec a_;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

inline Mat operator+(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix add: shape mismatch");
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
    return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix sub: shape mismatch");
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
    return c;
}

inline Mat operator-(const Mat& a) {
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = -a(i, j);
    return c;
}

inline Mat operator*(double s, const Mat& a) {
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
    return c;
}
inline Mat operator*(const Mat& a, double s) { return s * a; }

inline Mat operator*(const Mat& a, const Mat& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Mat c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline double trace(const Mat& a) {
    require(a.is_square(), "trace: square matrix expected");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

// Frobenius inner product Tr(A^T B).
inline double frob_inner(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "frob_inner: shape mismatch");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t += a(i, j) * b(i, j);
    return t;
}

inline double frob_norm(const Mat& a) { return std::sqrt(std::max(0.0, frob_inner(a, a))); }

inline double max_abs(const Mat& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

inline bool all_finite(const Mat& a) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (!std::isfinite(a(i, j))) return false;
    return true;
}

inline Mat sym_part(const Mat& a) {
    require(a.is_square(), "sym_part: square matrix expected");
    Mat s(a.rows(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.rows(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

// Relative departure from symmetry, ||A - A^T|| / max(||A||, eps).
inline double asymmetry(const Mat& a) {
    require(a.is_square(), "asymmetry: square matrix expected");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.rows(); ++j) {
            const double d = a(i, j) - a(j, i);
            num += d * d;
            den += a(i, j) * a(i, j);
        }
    return std::sqrt(num) / std::max(std::sqrt(den), std::numeric_limits<double>::min());
}

inline Mat block(const Mat& a, std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) {
    require(r0 + nr <= a.rows() && c0 + nc <= a.cols(), "block: out of range");
    Mat b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t j = 0; j < nc; ++j) b(i, j) = a(r0 + i, c0 + j);
    return b;
}

inline void put_block(Mat& a, std::size_t r0, std::size_t c0, const Mat& b) {
    require(r0 + b.rows() <= a.rows() && c0 + b.cols() <= a.cols(), "put_block: out of range");
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) a(r0 + i, c0 + j) = b(i, j);
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)

struct SymEig {
    Vec eigenvalues;   // ascending
    Mat eigenvectors;  // columns, orthogonal; A = V diag(w) V^T
};

// Cyclic Jacobi sweeps. High relative accuracy for the dense symmetric
// matrices that show up here (dimensions up to a few hundred).
inline SymEig sym_eig(const Mat& input) {
    require(input.is_square(), "sym_eig: square matrix expected");
    require(all_finite(input), "sym_eig: non-finite entries");
    const std::size_t n = input.rows();
    Mat a = sym_part(input);
    Mat v = Mat::identity(n);

    const double fro = frob_norm(a);
    const double stop = 1e-15 * static_cast<double>(std::max<std::size_t>(n, 1)) * fro;
    const int max_sweeps = 64;

    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a(p, q) * a(p, q);
        off = std::sqrt(off);
        if (off <= stop || fro == 0.0) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-2 * stop / static_cast<double>(n * n + 1)) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a(r, p), arq = a(r, q);
                    a(r, p) = a(p, r) = c * arp - s * arq;
                    a(r, q) = a(q, r) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }
    if (sweep == max_sweeps) throw std::runtime_error("sym_eig: Jacobi iteration did not converge");

    // sort ascending, permute eigenvector columns accordingly
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymEig out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Mat(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
    }
    return out;
}

inline double lambda_max_sym(const Mat& a) { return sym_eig(a).eigenvalues.back(); }
inline double lambda_min_sym(const Mat& a) { return sym_eig(a).eigenvalues.front(); }

inline double spectral_norm_sym(const Mat& a) {
    const SymEig e = sym_eig(a);
    return std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
}

// B symmetric PSD with BB ~ A. Eigenvalues of A below -1e-10*||A|| are an
// error; small negative ones are clipped to zero.
inline Mat psd_sqrt(const Mat& a) {
    const SymEig e = sym_eig(a);
    const std::size_t n = a.rows();
    const double scale = std::max(std::abs(e.eigenvalues.front()), std::abs(e.eigenvalues.back()));
    if (e.eigenvalues.front() < -1e-10 * std::max(scale, 1e-30))
        throw std::invalid_argument("psd_sqrt: matrix indefinite beyond tolerance");
    Mat b(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::sqrt(std::max(0.0, e.eigenvalues[k]));
        if (w == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double wi = w * e.eigenvectors(i, k);
            for (std::size_t j = 0; j < n; ++j) b(i, j) += wi * e.eigenvectors(j, k);
        }
    }
    return sym_part(b);
}

// ---------------------------------------------------------------------------
// Cholesky

struct NotSpdError : std::runtime_error {
    explicit NotSpdError(std::size_t pivot_index)
        : std::runtime_error("cholesky: pivot " + std::to_string(pivot_index) + " not positive"),
          pivot(pivot_index) {}
    std::size_t pivot;
};

// Lower-triangular L with L L^T = A. Throws NotSpdError on a nonpositive
// pivot, which the SDP line search uses as a definiteness probe.
inline Mat cholesky(const Mat& a) {
    require(a.is_square(), "cholesky: square matrix expected");
    const std::size_t n = a.rows();
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) throw NotSpdError(j);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

inline Vec chol_solve(const Mat& l, const Vec& b) {
    const std::size_t n = l.rows();
    require(b.size() == n, "chol_solve: rhs length mismatch");
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * y[k];
        y[ii] = s / l(ii, ii);
    }
    return y;
}

inline Vec solve_spd(const Mat& a, const Vec& b) { return chol_solve(cholesky(a), b); }

inline Mat solve_spd(const Mat& a, const Mat& b) {
    require(a.rows() == b.rows(), "solve_spd: rhs row mismatch");
    const Mat l = cholesky(a);
    Mat x(b.rows(), b.cols());
    Vec col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
        Vec xj = chol_solve(l, col);
        for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = xj[i];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Kronecker product and symmetric vectorization

inline Mat kron(const Mat& a, const Mat& b) {
    Mat k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            if (aij == 0.0) continue;
            for (std::size_t p = 0; p < b.rows(); ++p)
                for (std::size_t q = 0; q < b.cols(); ++q)
                    k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
        }
    return k;
}

// svec stacks the lower triangle column by column with sqrt(2) scaling off
// the diagonal, so that svec(A) . svec(B) = Tr(AB) for symmetric A, B.
inline Vec svec(const Mat& s) {
    require(s.is_square(), "svec: square matrix expected");
    const std::size_t n = s.rows();
    const double rt2 = std::sqrt(2.0);
    Vec v;
    v.reserve(n * (n + 1) / 2);
    for (std::size_t j = 0; j < n; ++j) {
        v.push_back(s(j, j));
        for (std::size_t i = j + 1; i < n; ++i) v.push_back(rt2 * 0.5 * (s(i, j) + s(j, i)));
    }
    return v;
}

inline Mat smat(const Vec& v) {
    // length must be a triangular number n(n+1)/2
    std::size_t n = 0;
    while (n * (n + 1) / 2 < v.size()) ++n;
    require(n * (n + 1) / 2 == v.size(), "smat: length is not a triangular number");
    Mat s(n, n);
    const double inv_rt2 = 1.0 / std::sqrt(2.0);
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
        s(j, j) = v[k++];
        for (std::size_t i = j + 1; i < n; ++i) {
            s(i, j) = s(j, i) = inv_rt2 * v[k++];
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// small vector helpers

inline double dot(const Vec& a, const Vec& b) {
    require(a.size() == b.size(), "dot: length mismatch");
    double t = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) t += a[i] * b[i];
    return t;
}

inline double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
}

inline Vec mat_vec(const Mat& a, const Vec& x) {
    require(a.cols() == x.size(), "mat_vec: shape mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

}  // namespace teamlq
