#include <catch_amalgamated.hpp>

#include <random>

#include "cutfem/assembly.hpp"
#include "cutfem/experiments.hpp"

using namespace cutfem;

namespace {

struct Setup {
    BackgroundMesh mesh;
    LevelSet phi;
    ActiveMesh active;
    DofMap dofmap;
    ElementPartition part;
    AgglomerationMap map;
    DofPartition dofpart;

    Setup(int n, LevelSet ls, BBox bbox = {-1, -1, 1, 1})
        : mesh(build_background_mesh(n, bbox)), phi(ls),
          active(extract_active_mesh(mesh, phi)), dofmap(build_dof_map(active)),
          part(partition_elements(active, 0.5)),
          map(build_agglomeration_map(part, active)),
          dofpart(partition_dofs(dofmap, part)) {}
};

}  // namespace

TEST_CASE("nitsche matrix is symmetric and rejects bad beta") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    auto data = circle_problem();
    CHECK_THROWS_AS(assemble_nitsche(s.active, s.dofmap, s.phi, data, 0.0),
                    std::invalid_argument);
    auto sys = assemble_nitsche(s.active, s.dofmap, s.phi, data, 10.0);
    const auto& A = sys.matrix;
    CHECK(A.n == s.dofmap.n_dofs());
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            CHECK_THAT(A.vals[k], Catch::Matchers::WithinAbs(A.coeff(A.cols[k], i),
                                                             1e-12 * A.max_abs()));
}

TEST_CASE("halfplane patch test reproduces u = x to solver precision") {
    // Omega = {x < 0.53} in the unit box, exact solution u = x with
    // f = 0 and g = x on the whole boundary of Omega.
    Setup s(8, LevelSet::halfplane({1, 0}, 0.53), {0, 0, 1, 1});
    ProblemData data;
    data.f = [](Point2) { return 0.0; };
    data.g = [](Point2 p) { return p.x; };
    auto sys = assemble_nitsche(s.active, s.dofmap, s.phi, data, 10.0);
    auto stab = assemble_stabilization({StabFamily::Nodal, 1, 0.1}, s.active, s.dofmap,
                                       s.part, s.map, s.dofpart);
    auto A = assemble_system(sys, stab);
    auto [u, report] = linalg::solve_spd(A, sys.load, 1e-14);
    double max_err = 0.0;
    for (int i = 0; i < s.dofmap.n_dofs(); ++i)
        max_err = std::max(max_err, std::abs(u[i] - s.dofmap.dof_coords[i].x));
    CHECK(max_err <= 1e-10);
}

TEST_CASE("patch test holds for every stabilization family") {
    Setup s(8, LevelSet::halfplane({1, 0}, 0.53), {0, 0, 1, 1});
    ProblemData data;
    data.f = [](Point2) { return 0.0; };
    data.g = [](Point2 p) { return 1.0 - 2.0 * p.x + 0.5 * p.y; };
    auto sys = assemble_nitsche(s.active, s.dofmap, s.phi, data, 10.0);
    for (StabFamily f : {StabFamily::FaceGradient, StabFamily::FaceL2,
                         StabFamily::ExtensionGradient, StabFamily::ExtensionL2,
                         StabFamily::Nodal}) {
        auto stab = assemble_stabilization({f, 1, 0.1}, s.active, s.dofmap, s.part, s.map,
                                           s.dofpart);
        auto A = assemble_system(sys, stab);
        auto [u, report] = linalg::solve_spd(A, sys.load, 1e-14);
        double max_err = 0.0;
        for (int i = 0; i < s.dofmap.n_dofs(); ++i) {
            const Point2 x = s.dofmap.dof_coords[i];
            max_err = std::max(max_err, std::abs(u[i] - (1.0 - 2.0 * x.x + 0.5 * x.y)));
        }
        INFO("family " << to_string(f));
        CHECK(max_err <= 1e-9);
    }
}

TEST_CASE("clement interpolant reproduces affines at the nodes") {
    Setup s(16, LevelSet::circle({0, 0}, 0.5));
    auto v = clement_interpolate([](Point2 p) { return 2.0 + p.x - 3.0 * p.y; }, s.active,
                                 s.dofmap);
    for (int i = 0; i < s.dofmap.n_dofs(); ++i) {
        const Point2 x = s.dofmap.dof_coords[i];
        CHECK_THAT(v[i], Catch::Matchers::WithinAbs(2.0 + x.x - 3.0 * x.y, 1e-12));
    }
}

TEST_CASE("clement interpolant converges at second order in L2") {
    auto data = circle_problem();
    double prev = 0.0;
    for (int n : {16, 32}) {
        Setup s(n, LevelSet::circle({0, 0}, 0.5));
        auto v = clement_interpolate(*data.u_exact, s.active, s.dofmap);
        auto err = compute_errors(v, data, s.active, s.dofmap, s.phi);
        if (prev > 0.0) CHECK(prev / err.l2 > 3.0);
        prev = err.l2;
    }
}

TEST_CASE("strong interpolant lies in the nodal penalty kernel") {
    Setup s(32, LevelSet::circle({0, 0}, 0.5));
    REQUIRE(!s.dofpart.unstable_dofs.empty());
    auto stab = assemble_stabilization({StabFamily::Nodal, 1, 1.0}, s.active, s.dofmap,
                                       s.part, s.map, s.dofpart);
    auto data = circle_problem();
    auto v = strong_interpolant(*data.u_exact, s.active, s.dofmap, s.dofpart, s.map);
    double vinf = 0.0;
    for (double x : v) vinf = std::max(vinf, std::abs(x));
    CHECK(stab_seminorm(stab, v) <= 1e-12 * vinf * std::sqrt(stab.matrix.max_abs() + 1.0));
}

TEST_CASE("compute_errors vanishes on the exact affine and needs exact data") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    ProblemData affine;
    affine.f = [](Point2) { return 0.0; };
    affine.u_exact = [](Point2 p) { return 1.0 + 2.0 * p.x - p.y; };
    affine.grad_u_exact = [](Point2) -> Point2 { return {2.0, -1.0}; };
    DofVector v(s.dofmap.n_dofs());
    for (int i = 0; i < s.dofmap.n_dofs(); ++i)
        v[i] = 1.0 + 2.0 * s.dofmap.dof_coords[i].x - s.dofmap.dof_coords[i].y;
    auto err = compute_errors(v, affine, s.active, s.dofmap, s.phi);
    CHECK(err.l2 <= 1e-13);
    CHECK(err.h1_semi <= 1e-13);

    ProblemData incomplete;
    incomplete.f = affine.f;
    CHECK_THROWS_AS(compute_errors(v, incomplete, s.active, s.dofmap, s.phi),
                    std::invalid_argument);
}

TEST_CASE("manufactured circle data is consistent with -laplace u = f") {
    auto data = circle_problem();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uni(-0.45, 0.45);
    const double d = 1e-5;
    for (int trial = 0; trial < 50; ++trial) {
        const Point2 p{uni(rng), uni(rng)};
        const auto& u = *data.u_exact;
        const double lap = (u({p.x + d, p.y}) + u({p.x - d, p.y}) + u({p.x, p.y + d}) +
                            u({p.x, p.y - d}) - 4.0 * u(p)) /
                           (d * d);
        CHECK_THAT(-lap, Catch::Matchers::WithinAbs(data.f(p), 1e-3));
        const Point2 g = (*data.grad_u_exact)(p);
        const double gx = (u({p.x + d, p.y}) - u({p.x - d, p.y})) / (2 * d);
        const double gy = (u({p.x, p.y + d}) - u({p.x, p.y - d})) / (2 * d);
        CHECK_THAT(g.x, Catch::Matchers::WithinAbs(gx, 1e-7));
        CHECK_THAT(g.y, Catch::Matchers::WithinAbs(gy, 1e-7));
    }
    // the series branch joins the closed form continuously
    CHECK_THAT(data.f({1.000001e-6, 0.0}),
               Catch::Matchers::WithinRel(data.f({0.999999e-6, 0.0}), 1e-9));
    CHECK_THAT(data.f({0, 0}), Catch::Matchers::WithinRel(2.0 * M_PI * M_PI, 1e-12));
}

TEST_CASE("mass matrix agrees with the m=0 seminorm and total area") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    auto M = assemble_mass(s.active, s.dofmap);
    std::mt19937 rng(9);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 10; ++trial) {
        DofVector v(s.dofmap.n_dofs());
        for (double& x : v) x = dist(rng);
        CHECK_THAT(M.quad(v),
                   Catch::Matchers::WithinRel(seminorm_sq_active(v, s.active, s.dofmap, 0),
                                              1e-12));
    }
    DofVector ones(s.dofmap.n_dofs(), 1.0);
    double area = 0.0;
    for (int a = 0; a < s.active.size(); ++a)
        area += s.mesh.element_area(s.active.bg(a));
    CHECK_THAT(M.quad(ones), Catch::Matchers::WithinRel(area, 1e-12));
}

TEST_CASE("active and cut seminorms coincide on uncut elements") {
    // domain covering the whole box: Omega_h = Omega
    Setup s(4, LevelSet::circle({0, 0}, 10.0));
    std::mt19937 rng(13);
    std::normal_distribution<double> dist;
    DofVector v(s.dofmap.n_dofs());
    for (double& x : v) x = dist(rng);
    for (int m : {0, 1})
        CHECK_THAT(seminorm_sq_cut(v, s.active, s.dofmap, s.phi, m),
                   Catch::Matchers::WithinRel(seminorm_sq_active(v, s.active, s.dofmap, m),
                                              1e-12));
}

TEST_CASE("circle solve converges in L2 and H1 for the nodal family") {
    ExperimentConfig cfg;
    cfg.levels = {8, 16, 32};
    auto rows = run_convergence(cfg, circle_problem(), 0.1);
    REQUIRE(rows.size() == 3);
    CHECK(rows.back().rate_l2 > 1.6);
    CHECK(rows.back().rate_h1 > 0.7);
}
