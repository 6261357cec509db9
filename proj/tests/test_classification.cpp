#include <catch_amalgamated.hpp>

#include <set>

#include "cutfem/classification.hpp"

using namespace cutfem;

namespace {

struct Setup {
    BackgroundMesh mesh;
    LevelSet phi;
    ActiveMesh active;
    Setup(int n, LevelSet ls, BBox bbox = {-1, -1, 1, 1})
        : mesh(build_background_mesh(n, bbox)), phi(ls),
          active(extract_active_mesh(mesh, phi)) {}
};

}  // namespace

TEST_CASE("element partition covers the active mesh") {
    Setup s(16, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    CHECK(part.large_ids.size() + part.small_ids.size() == (size_t)s.active.size());
    for (int a : part.large_ids) {
        CHECK(part.is_large[a] == 1);
        CHECK(s.active.cut_fractions[a] >= 0.5);
    }
    for (int a : part.small_ids) {
        CHECK(part.is_large[a] == 0);
        CHECK(s.active.cut_fractions[a] < 0.5);
    }
    // interior elements are always large
    for (int a = 0; a < s.active.size(); ++a)
        if (!s.active.is_cut(a)) CHECK(part.is_large[a] == 1);
}

TEST_CASE("gamma extremes and failure modes") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    CHECK_THROWS_AS(partition_elements(s.active, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(partition_elements(s.active, 1.5), std::invalid_argument);
    auto all = partition_elements(s.active, 1e-300);
    CHECK(all.small_ids.empty());
    // gamma = 1: only fully interior elements are large
    auto strict = partition_elements(s.active, 1.0);
    for (int a : strict.large_ids) CHECK(s.active.cut_fractions[a] >= 1.0);
}

TEST_CASE("agglomeration targets are nearest large elements with admissible paths") {
    Setup s(16, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    auto map = build_agglomeration_map(part, s.active);
    auto adj = detail::active_adjacency(s.active);
    const auto& mesh = s.active.mesh();
    for (int a : part.small_ids) {
        const int t = map.target[a];
        REQUIRE(t >= 0);
        CHECK(part.is_large[t] == 1);
        // no strictly closer large element (up to the tie tolerance)
        const Point2 c = mesh.element_centroid(s.active.bg(a));
        const double d = norm(mesh.element_centroid(s.active.bg(t)) - c);
        for (int l : part.large_ids) {
            const double dl = norm(mesh.element_centroid(s.active.bg(l)) - c);
            CHECK(d <= dl + 1e-13 * mesh.h);
        }
        // path is a face-neighbor chain from a to t
        const auto& path = map.path[a];
        REQUIRE(path.size() >= 2);
        CHECK(path.front() == a);
        CHECK(path.back() == t);
        for (size_t k = 0; k + 1 < path.size(); ++k) {
            const auto& nb = adj[path[k]];
            CHECK(std::find(nb.begin(), nb.end(), path[k + 1]) != nb.end());
        }
    }
    for (int a : part.large_ids) CHECK(map.target[a] == -1);
}

TEST_CASE("agglomeration map is deterministic") {
    Setup s(16, LevelSet::circle({0.05, -0.03}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    auto m1 = build_agglomeration_map(part, s.active);
    auto m2 = build_agglomeration_map(part, s.active);
    CHECK(m1.target == m2.target);
    CHECK(m1.path == m2.path);
}

TEST_CASE("empty candidate pool throws") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    std::vector<int> empty;
    CHECK_THROWS_AS(build_agglomeration_map(part, s.active, &empty), std::runtime_error);
}

TEST_CASE("dof partition: I^S iff no large support element") {
    Setup s(16, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    auto dm = build_dof_map(s.active);
    auto dp = partition_dofs(dm, part);
    for (int i = 0; i < dm.n_dofs(); ++i) {
        bool has_large = false;
        for (int a : dp.supports[i]) has_large = has_large || part.is_large[a];
        CHECK((dp.is_unstable[i] == 1) == !has_large);
        if (dp.is_unstable[i]) {
            // anchor is the smallest-id small support element
            REQUIRE(!dp.supports[i].empty());
            CHECK(dp.anchor[i] == dp.supports[i].front());
            CHECK(part.is_large[dp.anchor[i]] == 0);
        } else {
            CHECK(dp.anchor[i] == -1);
        }
    }
    // unstable list is ascending, consistent with flags
    std::vector<int> expected;
    for (int i = 0; i < dm.n_dofs(); ++i)
        if (dp.is_unstable[i]) expected.push_back(i);
    CHECK(dp.unstable_dofs == expected);
}

TEST_CASE("supports match an independent element sweep oracle") {
    Setup s(8, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    auto dm = build_dof_map(s.active);
    auto dp = partition_dofs(dm, part);
    for (int i = 0; i < dm.n_dofs(); ++i) {
        std::set<int> oracle;
        for (int a = 0; a < s.active.size(); ++a) {
            auto dofs = dm.element_dofs(a);
            if (dofs[0] == i || dofs[1] == i || dofs[2] == i) oracle.insert(a);
        }
        CHECK(std::set<int>(dp.supports[i].begin(), dp.supports[i].end()) == oracle);
        CHECK(!dp.supports[i].empty());
    }
}

TEST_CASE("halfplane strip: every small element maps one layer inward") {
    // Omega = {x < offset} with the cut running between grid lines; the
    // boundary column is small, its left neighbors large.
    Setup s(8, LevelSet::halfplane({1, 0}, 0.52), {0, 0, 1, 1});
    auto part = partition_elements(s.active, 0.5);
    auto map = build_agglomeration_map(part, s.active);
    for (int a : part.small_ids) {
        REQUIRE(map.target[a] >= 0);
        CHECK(map.path[a].size() <= 3);
    }
    auto rep = verify_assumptions(map, part, build_dof_map(s.active), 6);
    CHECK(rep.items.empty());
}

TEST_CASE("assumption diagnostics flag tiny path budgets") {
    Setup s(32, LevelSet::circle({0, 0}, 0.5));
    auto part = partition_elements(s.active, 0.5);
    auto map = build_agglomeration_map(part, s.active);
    auto dm = build_dof_map(s.active);
    auto ok = verify_assumptions(map, part, dm, 6);
    CHECK(ok.items.empty());
    // l_max = 0 cannot be satisfied by any nontrivial path
    auto bad = verify_assumptions(map, part, dm, 0);
    CHECK(!bad.items.empty());
    for (const auto& v : bad.items)
        CHECK((v.kind == "A2" || v.kind == "A3-small-pair" || v.kind == "A3-mixed-pair"));
}
