#pragma once

// Minimal sparse symmetric linear algebra: CSR storage, Jacobi
// preconditioned conjugate gradients and two-sided condition number
// estimation via power / inverse iteration.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cutfem::linalg {

struct SparseMatrix {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> cols;  // strictly ascending per row
    std::vector<double> vals;

    void matvec(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                s += vals[k] * x[cols[k]];
            y[i] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y;
        matvec(x, y);
        return y;
    }

    double coeff(int i, int j) const {
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (cols[k] == j) return vals[k];
        return 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n, 0.0);
        for (int i = 0; i < n; ++i) d[i] = coeff(i, i);
        return d;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : vals) m = std::max(m, std::abs(v));
        return m;
    }

    // quadratic form x^T A x
    double quad(const std::vector<double>& x) const {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                s += x[i] * vals[k] * x[cols[k]];
        return s;
    }
};

// Row-map accumulator; finalize drops entries below 1e-300 and emits
// ascending column indices per row.
class SparseBuilder {
  public:
    explicit SparseBuilder(int n) : n_(n), rows_(n) {}

    int dim() const { return n_; }

    void add(int i, int j, double v) { rows_[i][j] += v; }

    // rank-1 update: A += scale * c c^T over the given dofs
    void add_rank1(const std::vector<int>& dofs, const std::vector<double>& coeffs,
                   double scale) {
        for (size_t a = 0; a < dofs.size(); ++a) {
            if (coeffs[a] == 0.0) continue;
            for (size_t b = 0; b < dofs.size(); ++b) {
                if (coeffs[b] == 0.0) continue;
                rows_[dofs[a]][dofs[b]] += scale * coeffs[a] * coeffs[b];
            }
        }
    }

    SparseMatrix finalize() const {
        SparseMatrix m;
        m.n = n_;
        m.row_ptr.assign(n_ + 1, 0);
        for (int i = 0; i < n_; ++i) {
            for (const auto& [j, v] : rows_[i])
                if (std::abs(v) >= 1e-300) ++m.row_ptr[i + 1];
        }
        for (int i = 0; i < n_; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
        m.cols.reserve(m.row_ptr[n_]);
        m.vals.reserve(m.row_ptr[n_]);
        for (int i = 0; i < n_; ++i) {
            for (const auto& [j, v] : rows_[i]) {
                if (std::abs(v) < 1e-300) continue;
                m.cols.push_back(j);
                m.vals.push_back(v);
            }
        }
        return m;
    }

  private:
    int n_;
    std::vector<std::map<int, double>> rows_;
};

inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.n != b.n)
        throw std::invalid_argument("sparse add: dimension mismatch");
    SparseBuilder builder(a.n);
    for (int i = 0; i < a.n; ++i) {
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            builder.add(i, a.cols[k], a.vals[k]);
        for (int k = b.row_ptr[i]; k < b.row_ptr[i + 1]; ++k)
            builder.add(i, b.cols[k], b.vals[k]);
    }
    return builder.finalize();
}

inline SparseMatrix scaled(const SparseMatrix& a, double s) {
    SparseMatrix m = a;
    for (double& v : m.vals) v *= s;
    return m;
}

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    double wall_time_s = 0.0;
};

class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& msg, SolveReport r)
        : std::runtime_error(msg), report(r) {}
    SolveReport report;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Jacobi-preconditioned CG with x0 = 0; deterministic.
inline std::pair<std::vector<double>, SolveReport> solve_spd(
    const SparseMatrix& A, const std::vector<double>& b, double tol = 1e-12,
    int max_iter = -1) {
    if (static_cast<int>(b.size()) != A.n)
        throw std::invalid_argument("solve_spd: dimension mismatch");
    if (max_iter < 0) max_iter = 20 * A.n + 100;

    const double norm_b = nrm2(b);
    std::vector<double> x(A.n, 0.0);
    SolveReport rep;
    if (norm_b == 0.0) return {x, rep};

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = (d > 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r = b, z(A.n), p(A.n), Ap(A.n);
    for (int i = 0; i < A.n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double res = nrm2(r) / norm_b;
    int it = 0;
    while (res > tol && it < max_iter) {
        A.matvec(p, Ap);
        const double alpha = rz / dot(p, Ap);
        for (int i = 0; i < A.n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        for (int i = 0; i < A.n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < A.n; ++i) p[i] = z[i] + beta * p[i];
        res = nrm2(r) / norm_b;
        ++it;
    }
    rep.iterations = it;
    rep.relative_residual = res;
    if (res > tol)
        throw SolveError("solve_spd: CG did not converge in " + std::to_string(it) +
                             " iterations (residual " + std::to_string(res) + ")",
                         rep);
    return {x, rep};
}

struct ConditionEstimate {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double cond2 = 0.0;
};

// Power iteration for lambda_max, inverse iteration (CG inner solves)
// for lambda_min; start vectors from a fixed seed.
inline ConditionEstimate condition_estimate(const SparseMatrix& A, double tol = 1e-6,
                                            int max_iter = 10000) {
    std::mt19937 rng(42);
    std::normal_distribution<double> dist(0.0, 1.0);

    auto rayleigh_iterate = [&](bool inverse) {
        std::vector<double> x(A.n);
        for (double& v : x) v = dist(rng);
        double nx = nrm2(x);
        for (double& v : x) v /= nx;
        double lambda = 0.0, lambda_old = 0.0;
        std::vector<double> y;
        for (int it = 0; it < max_iter; ++it) {
            if (inverse)
                y = solve_spd(A, x, std::min(tol * 1e-2, 1e-8)).first;
            else
                A.matvec(x, y);
            const double ny = nrm2(y);
            for (int i = 0; i < A.n; ++i) x[i] = y[i] / ny;
            // Rayleigh quotient of A at x
            std::vector<double> Ax;
            A.matvec(x, Ax);
            lambda = dot(x, Ax);
            if (it > 0 && std::abs(lambda - lambda_old) <= tol * std::abs(lambda))
                break;
            lambda_old = lambda;
        }
        return lambda;
    };

    ConditionEstimate est;
    est.lambda_max = rayleigh_iterate(false);
    est.lambda_min = rayleigh_iterate(true);
    est.cond2 = est.lambda_max / est.lambda_min;
    return est;
}

}  // namespace cutfem::linalg
