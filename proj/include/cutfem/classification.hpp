#pragma once

// Large/small element split, the agglomeration map S_h with its
// face-neighbor paths, the dof split I^S / I^L with anchor elements,
// and path-assumption diagnostics.

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutfem/fe_space.hpp"
#include "cutfem/geometry.hpp"

namespace cutfem {

struct ElementPartition {
    double gamma = 0.5;
    std::vector<char> is_large;  // per active element
    std::vector<int> large_ids;  // active ids
    std::vector<int> small_ids;
};

inline ElementPartition partition_elements(const ActiveMesh& active, double gamma) {
    if (gamma <= 0.0 || gamma > 1.0)
        throw std::invalid_argument("partition_elements: gamma must be in (0,1]");
    ElementPartition part;
    part.gamma = gamma;
    part.is_large.assign(active.size(), 0);
    for (int a = 0; a < active.size(); ++a) {
        if (active.cut_fractions[a] >= gamma) {
            part.is_large[a] = 1;
            part.large_ids.push_back(a);
        } else {
            part.small_ids.push_back(a);
        }
    }
    if (part.large_ids.empty())
        throw std::runtime_error("partition_elements: no large elements for gamma=" +
                                 std::to_string(gamma));
    return part;
}

namespace detail {

// Face adjacency restricted to active elements.
inline std::vector<std::vector<int>> active_adjacency(const ActiveMesh& active) {
    std::vector<std::vector<int>> adj(active.size());
    const auto& mesh = active.mesh();
    for (const auto& f : mesh.faces) {
        if (f.right < 0) continue;
        const int a1 = active.background_to_active[f.left];
        const int a2 = active.background_to_active[f.right];
        if (a1 < 0 || a2 < 0) continue;
        adj[a1].push_back(a2);
        adj[a2].push_back(a1);
    }
    return adj;
}

// BFS path (list of active ids including both endpoints); `allowed`
// restricts intermediate and final elements when nonempty.  Returns an
// empty path when unreachable.
inline std::vector<int> bfs_path(const std::vector<std::vector<int>>& adj, int start,
                                 int goal, const std::vector<char>* allowed = nullptr) {
    if (start == goal) return {start};
    std::vector<int> prev(adj.size(), -1);
    std::deque<int> queue{start};
    prev[start] = start;
    while (!queue.empty()) {
        const int cur = queue.front();
        queue.pop_front();
        for (int nb : adj[cur]) {
            if (prev[nb] >= 0) continue;
            if (allowed && nb != goal && !(*allowed)[nb]) continue;
            prev[nb] = cur;
            if (nb == goal) {
                std::vector<int> path{goal};
                for (int p = cur; p != start; p = prev[p]) path.push_back(p);
                path.push_back(start);
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(nb);
        }
    }
    return {};
}

}  // namespace detail

struct AgglomerationMap {
    // target[a] = active id of S_h(T) for small a, -1 otherwise
    std::vector<int> target;
    std::vector<std::vector<int>> path;  // face-neighbor path T .. S_h(T)
};

// Nearest-centroid large element, ties broken by smallest element id;
// paths found by BFS over the active face graph.  `candidates` overrides
// the target pool (e.g. interior-only elements); defaults to T_h^L.
inline AgglomerationMap build_agglomeration_map(const ElementPartition& part,
                                                const ActiveMesh& active,
                                                const std::vector<int>* candidates = nullptr) {
    AgglomerationMap map;
    map.target.assign(active.size(), -1);
    map.path.assign(active.size(), {});
    const auto& mesh = active.mesh();
    auto adj = detail::active_adjacency(active);
    const std::vector<int>& pool = candidates ? *candidates : part.large_ids;
    if (pool.empty())
        throw std::runtime_error("build_agglomeration_map: empty target pool");
    for (int a : part.small_ids) {
        const Point2 c = mesh.element_centroid(active.bg(a));
        int best = -1;
        double best_d = std::numeric_limits<double>::max();
        for (int l : pool) {
            const double d = norm(mesh.element_centroid(active.bg(l)) - c);
            if (d < best_d - 1e-14 * mesh.h ||
                (std::abs(d - best_d) <= 1e-14 * mesh.h && active.bg(l) < active.bg(best))) {
                best = l;
                best_d = d;
            }
        }
        map.target[a] = best;
        map.path[a] = detail::bfs_path(adj, a, best);
    }
    return map;
}

struct DofPartition {
    std::vector<char> is_unstable;            // per dof: i in I^S
    std::vector<int> unstable_dofs;           // I^S, ascending
    std::vector<int> anchor;                  // per dof: active id of T_i, -1 for I^L
    std::vector<std::vector<int>> supports;   // per dof: active elements in supp(phi_i)
};

inline DofPartition partition_dofs(const DofMap& dofmap, const ElementPartition& part) {
    const ActiveMesh& active = *dofmap.active;
    DofPartition dp;
    dp.is_unstable.assign(dofmap.n_dofs(), 0);
    dp.anchor.assign(dofmap.n_dofs(), -1);
    dp.supports.assign(dofmap.n_dofs(), {});
    for (int a = 0; a < active.size(); ++a)
        for (int i : dofmap.element_dofs(a)) dp.supports[i].push_back(a);
    for (int i = 0; i < dofmap.n_dofs(); ++i) {
        bool has_large = false;
        for (int a : dp.supports[i])
            if (part.is_large[a]) has_large = true;
        if (!has_large) {
            dp.is_unstable[i] = 1;
            dp.unstable_dofs.push_back(i);
            dp.anchor[i] = dp.supports[i].front();  // smallest active id
        }
    }
    return dp;
}

struct AssumptionViolation {
    int element_id = -1;  // background element id, or dof id for A3 items
    std::string kind;     // "A2", "A3-small-pair", "A3-mixed-pair"
    int path_length = 0;  // 0 when no admissible path exists
};

struct AssumptionReport {
    std::vector<AssumptionViolation> items;
    bool ok() const { return items.empty(); }
};

// Diagnostic check of A2 (bounded face-neighbor paths T -> S_h(T)) and
// A3 (bounded large-only paths between mapped targets of elements in a
// shared basis support).  Violations are reported, never fatal.
inline AssumptionReport verify_assumptions(const AgglomerationMap& map,
                                           const ElementPartition& part,
                                           const DofMap& dofmap, int l_max) {
    const ActiveMesh& active = *dofmap.active;
    AssumptionReport report;
    for (int a : part.small_ids) {
        const int len = static_cast<int>(map.path[a].size());
        if (len == 0 || len > l_max)
            report.items.push_back({active.bg(a), "A2", len});
    }

    auto adj = detail::active_adjacency(active);
    auto dp = partition_dofs(dofmap, part);
    auto large_path_len = [&](int from, int to) {
        auto p = detail::bfs_path(adj, from, to, &part.is_large);
        return static_cast<int>(p.size());
    };
    for (int i = 0; i < dofmap.n_dofs(); ++i) {
        const auto& supp = dp.supports[i];
        for (size_t u = 0; u < supp.size(); ++u) {
            for (size_t w = u + 1; w < supp.size(); ++w) {
                const int t1 = supp[u], t2 = supp[w];
                const bool l1 = part.is_large[t1], l2 = part.is_large[t2];
                if (!l1 && !l2) {
                    const int len = large_path_len(map.target[t1], map.target[t2]);
                    if (len == 0 || len > l_max)
                        report.items.push_back({i, "A3-small-pair", len});
                } else if (l1 != l2) {
                    const int large = l1 ? t1 : t2;
                    const int small = l1 ? t2 : t1;
                    const int len = large_path_len(large, map.target[small]);
                    if (len == 0 || len > l_max)
                        report.items.push_back({i, "A3-mixed-pair", len});
                }
            }
        }
    }
    return report;
}

}  // namespace cutfem
