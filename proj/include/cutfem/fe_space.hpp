#pragma once

// Continuous P1 Lagrange space on the active mesh: dof numbering, basis
// evaluation, canonical (global affine) extension and jump evaluation.

#include <array>
#include <stdexcept>
#include <vector>

#include "cutfem/geometry.hpp"

namespace cutfem {

struct DofMap {
    const ActiveMesh* active = nullptr;
    std::vector<int> node_to_dof;  // -1 for nodes of no active element
    std::vector<int> dof_to_node;
    std::vector<Point2> dof_coords;
    int degree = 1;  // fixed to piecewise linears

    int n_dofs() const { return static_cast<int>(dof_to_node.size()); }

    // global dofs of active element a, in element-local node order
    std::array<int, 3> element_dofs(int a) const {
        const auto& el = active->mesh().elements[active->bg(a)];
        return {node_to_dof[el[0]], node_to_dof[el[1]], node_to_dof[el[2]]};
    }
};

using DofVector = std::vector<double>;

inline DofMap build_dof_map(const ActiveMesh& active) {
    DofMap dm;
    dm.active = &active;
    const auto& mesh = active.mesh();
    dm.node_to_dof.assign(mesh.nodes.size(), -1);
    for (int a = 0; a < active.size(); ++a)
        for (int node : mesh.elements[active.bg(a)]) dm.node_to_dof[node] = 0;
    for (size_t node = 0; node < mesh.nodes.size(); ++node) {
        if (dm.node_to_dof[node] == 0) {
            dm.node_to_dof[node] = static_cast<int>(dm.dof_to_node.size());
            dm.dof_to_node.push_back(static_cast<int>(node));
            dm.dof_coords.push_back(mesh.nodes[node]);
        }
    }
    return dm;
}

// Affine element polynomial stored as centroid value plus constant
// gradient; evaluation is stable far from the element.
struct ElementAffine {
    int element = -1;  // active element id
    Point2 centroid;
    double value = 0.0;
    Point2 grad;

    double eval(Point2 x) const { return value + dot(grad, x - centroid); }
};

namespace detail {

// Constant gradients of the three P1 basis functions on a triangle.
inline std::array<Point2, 3> basis_gradients(Point2 a, Point2 b, Point2 c) {
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    return {Point2{(b.y - c.y) / det, (c.x - b.x) / det},
            Point2{(c.y - a.y) / det, (a.x - c.x) / det},
            Point2{(a.y - b.y) / det, (b.x - a.x) / det}};
}

// Barycentric coordinates of x w.r.t. the triangle, valid outside it too;
// these are the canonical extensions of the element basis functions.
inline std::array<double, 3> barycentric(Point2 a, Point2 b, Point2 c, Point2 x) {
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((x.x - a.x) * (c.y - a.y) - (c.x - a.x) * (x.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (x.y - a.y) - (x.x - a.x) * (b.y - a.y)) / det;
    return {1.0 - l1 - l2, l1, l2};
}

}  // namespace detail

inline std::array<Point2, 3> element_basis_gradients(const ActiveMesh& active, int a) {
    auto [p0, p1, p2] = active.mesh().element_coords(active.bg(a));
    return detail::basis_gradients(p0, p1, p2);
}

// Canonical extensions of the element basis functions evaluated at x.
inline std::array<double, 3> element_basis_values(const ActiveMesh& active, int a,
                                                  Point2 x) {
    auto [p0, p1, p2] = active.mesh().element_coords(active.bg(a));
    return detail::barycentric(p0, p1, p2, x);
}

// The affine polynomial determined by v on active element a.
inline ElementAffine element_affine(const ActiveMesh& active, const DofMap& dofmap,
                                    const DofVector& v, int a) {
    auto [p0, p1, p2] = active.mesh().element_coords(active.bg(a));
    auto dofs = dofmap.element_dofs(a);
    auto grads = detail::basis_gradients(p0, p1, p2);
    ElementAffine poly;
    poly.element = a;
    poly.centroid = active.mesh().element_centroid(active.bg(a));
    poly.value = (v[dofs[0]] + v[dofs[1]] + v[dofs[2]]) / 3.0;
    poly.grad = v[dofs[0]] * grads[0] + v[dofs[1]] * grads[1] + v[dofs[2]] * grads[2];
    return poly;
}

struct ValueGrad {
    double value = 0.0;
    Point2 grad;
};

// Canonical extension of v|_T evaluated at an arbitrary point.
inline ValueGrad extend_and_eval(const ActiveMesh& active, const DofMap& dofmap,
                                 const DofVector& v, int a, Point2 x) {
    auto poly = element_affine(active, dofmap, v, a);
    return {poly.eval(x), poly.grad};
}

// [v]_{T1,T2}(x) = v_1^e(x) - v_2^e(x) and the gradient jump.
inline ValueGrad jump_eval(const ActiveMesh& active, const DofMap& dofmap,
                           const DofVector& v, int a1, int a2, Point2 x) {
    auto e1 = extend_and_eval(active, dofmap, v, a1, x);
    auto e2 = extend_and_eval(active, dofmap, v, a2, x);
    return {e1.value - e2.value, e1.grad - e2.grad};
}

// Nodal dof functional: point evaluation at x_i (P1 Lagrange).
inline double nodal_functional(const DofMap& dofmap, int i, int a,
                               const ElementAffine& p) {
    auto dofs = dofmap.element_dofs(a);
    if (i != dofs[0] && i != dofs[1] && i != dofs[2])
        throw std::invalid_argument("nodal_functional: dof not on element");
    return p.eval(dofmap.dof_coords[i]);
}

}  // namespace cutfem
