#include <catch_amalgamated.hpp>

#include <random>

#include "cutfem/linalg.hpp"

using namespace cutfem::linalg;

namespace {

// dense Gaussian elimination with partial pivoting, test oracle
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const int n = (int)b.size();
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        for (int r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

// cyclic Jacobi rotation eigensolver for symmetric matrices, test oracle
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> A) {
    const int n = (int)A.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += A[p][q] * A[p][q];
        if (off < 1e-26) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(A[p][q]) < 1e-300) continue;
                const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = A[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

SparseMatrix from_dense(const std::vector<std::vector<double>>& D) {
    SparseBuilder b((int)D.size());
    for (int i = 0; i < (int)D.size(); ++i)
        for (int j = 0; j < (int)D.size(); ++j)
            if (D[i][j] != 0.0) b.add(i, j, D[i][j]);
    return b.finalize();
}

std::vector<std::vector<double>> random_spd(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<double>> B(n, std::vector<double>(n));
    for (auto& row : B)
        for (double& v : row) v = dist(rng);
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) A[i][j] += B[k][i] * B[k][j];
            if (i == j) A[i][j] += 1.0;
        }
    return A;
}

}  // namespace

TEST_CASE("CG on identity converges in one iteration") {
    SparseBuilder b(5);
    for (int i = 0; i < 5; ++i) b.add(i, i, 1.0);
    auto A = b.finalize();
    std::vector<double> rhs{1, -2, 3, 0.5, 4};
    auto [x, rep] = solve_spd(A, rhs, 1e-12);
    CHECK(rep.iterations <= 1);
    for (int i = 0; i < 5; ++i) CHECK_THAT(x[i], Catch::Matchers::WithinAbs(rhs[i], 1e-12));
}

TEST_CASE("CG diagonal case") {
    SparseBuilder b(3);
    b.add(0, 0, 1.0);
    b.add(1, 1, 2.0);
    b.add(2, 2, 4.0);
    auto A = b.finalize();
    auto [x, rep] = solve_spd(A, {1.0, 2.0, 4.0}, 1e-14);
    for (int i = 0; i < 3; ++i) CHECK_THAT(x[i], Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("CG matches the dense oracle on random SPD systems") {
    std::mt19937 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 20;
        auto D = random_spd(n, rng);
        std::vector<double> rhs(n);
        for (double& v : rhs) v = dist(rng);
        auto A = from_dense(D);
        auto [x, rep] = solve_spd(A, rhs, 1e-12);
        auto x_ref = dense_solve(D, rhs);
        for (int i = 0; i < n; ++i)
            CHECK_THAT(x[i], Catch::Matchers::WithinAbs(x_ref[i], 1e-10));
        // residual contract
        auto r = A.apply(x);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += (r[i] - rhs[i]) * (r[i] - rhs[i]);
            den += rhs[i] * rhs[i];
        }
        CHECK(std::sqrt(num / den) <= 1e-12);
    }
}

TEST_CASE("CG non-convergence raises with report") {
    SparseBuilder b(2);
    b.add(0, 0, 1.0);
    b.add(0, 1, 0.999999);
    b.add(1, 0, 0.999999);
    b.add(1, 1, 1.0);
    auto A = b.finalize();
    try {
        solve_spd(A, {1.0, 0.0}, 1e-16, 1);  // unreachable tolerance in one iteration
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK(e.report.iterations == 1);
        CHECK(e.report.relative_residual > 1e-16);
    }
}

TEST_CASE("condition estimate: identity and diagonal") {
    SparseBuilder b(4);
    for (int i = 0; i < 4; ++i) b.add(i, i, 1.0);
    auto est = condition_estimate(b.finalize());
    CHECK_THAT(est.cond2, Catch::Matchers::WithinRel(1.0, 1e-6));

    SparseBuilder b2(2);
    b2.add(0, 0, 1.0);
    b2.add(1, 1, 4.0);
    auto est2 = condition_estimate(b2.finalize());
    CHECK_THAT(est2.cond2, Catch::Matchers::WithinRel(4.0, 1e-5));
}

TEST_CASE("condition estimate within 1% of the dense Jacobi oracle") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto D = random_spd(12, rng);
        auto est = condition_estimate(from_dense(D), 1e-9);
        auto ev = jacobi_eigenvalues(D);
        const double ref = ev.back() / ev.front();
        CHECK_THAT(est.cond2, Catch::Matchers::WithinRel(ref, 0.01));
    }
}

TEST_CASE("condition estimate invariant under scaling") {
    std::mt19937 rng(3);
    auto D = random_spd(15, rng);
    auto A = from_dense(D);
    const double base = condition_estimate(A, 1e-10).cond2;
    for (double c : {0.5, 3.0}) {
        const double scaled_cond = condition_estimate(scaled(A, c), 1e-10).cond2;
        CHECK_THAT(scaled_cond, Catch::Matchers::WithinRel(base, 1e-8));
    }
}

TEST_CASE("matvec matches a naive triplet oracle") {
    std::mt19937 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    const int n = 30;
    std::vector<std::tuple<int, int, double>> triplets;
    SparseBuilder b(n);
    std::uniform_int_distribution<int> idx(0, n - 1);
    for (int k = 0; k < 200; ++k) {
        int i = idx(rng), j = idx(rng);
        double v = dist(rng);
        triplets.emplace_back(i, j, v);
        b.add(i, j, v);
    }
    auto A = b.finalize();
    std::vector<double> x(n), y_ref(n, 0.0);
    for (double& v : x) v = dist(rng);
    for (auto [i, j, v] : triplets) y_ref[i] += v * x[j];
    auto y = A.apply(x);
    for (int i = 0; i < n; ++i)
        CHECK_THAT(y[i], Catch::Matchers::WithinAbs(y_ref[i], 1e-12));
}

TEST_CASE("CSR structure: ascending columns, no stored zeros") {
    SparseBuilder b(3);
    b.add(0, 2, 1.0);
    b.add(0, 0, 2.0);
    b.add(1, 1, 3.0);
    b.add(1, 2, 1.0);
    b.add(1, 2, -1.0);  // cancels below drop threshold
    auto A = b.finalize();
    CHECK(A.cols == std::vector<int>{0, 2, 1});
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i] + 1; k < A.row_ptr[i + 1]; ++k)
            CHECK(A.cols[k] > A.cols[k - 1]);
}
