#pragma once

// Cut-cell quadrature: tabulated simplex rules mapped to elements or to
// sub-triangles of the clipped polygon, plus Gauss rules on the interface
// chord and on the clipped box-boundary segments.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "cutfem/geometry.hpp"

namespace cutfem {

struct QuadratureRule {
    std::vector<Point2> points;
    std::vector<double> weights;
    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

struct BoundaryQuadratureRule {
    std::vector<Point2> points;
    std::vector<double> weights;  // arc-length measures
    std::vector<Point2> normals;  // outward unit normals
    double total_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

namespace detail {

struct RefRule {
    // barycentric coordinates (l1, l2) with l0 = 1 - l1 - l2 and weights
    // summing to 1 (scaled by the triangle area on mapping)
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};

// Tabulated rules exact to degree 1, 2 and 4 on the reference triangle.
inline const RefRule& reference_rule(int order) {
    static const RefRule deg1{{{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}},
                              {1.0}};
    static const RefRule deg2{{{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                               {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                               {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}},
                              {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
    static const RefRule deg4 = [] {
        RefRule r;
        const double a1 = 0.445948490915965, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, w2 = 0.109951743655322;
        for (double a : {a1, a2}) {
            r.points.push_back({1.0 - 2.0 * a, a, a});
            r.points.push_back({a, 1.0 - 2.0 * a, a});
            r.points.push_back({a, a, 1.0 - 2.0 * a});
            const double w = (a == a1) ? w1 : w2;
            r.weights.insert(r.weights.end(), 3, w);
        }
        return r;
    }();
    if (order <= 1) return deg1;
    if (order <= 2) return deg2;
    if (order <= 4) return deg4;
    throw std::invalid_argument("reference_rule: order > 4 not implemented");
}

inline void map_rule_to_triangle(const RefRule& ref, Point2 a, Point2 b, Point2 c,
                                 QuadratureRule& out) {
    const double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    for (size_t q = 0; q < ref.points.size(); ++q) {
        const auto& l = ref.points[q];
        out.points.push_back({l[0] * a.x + l[1] * b.x + l[2] * c.x,
                              l[0] * a.y + l[1] * b.y + l[2] * c.y});
        out.weights.push_back(ref.weights[q] * area);
    }
}

// 3-point Gauss on [0,1]; exact to degree 5.
struct GaussSeg {
    std::array<double, 3> t;
    std::array<double, 3> w;
};
inline const GaussSeg& gauss_segment() {
    static const GaussSeg g = [] {
        GaussSeg s;
        const double r = std::sqrt(3.0 / 5.0);
        s.t = {0.5 * (1.0 - r), 0.5, 0.5 * (1.0 + r)};
        s.w = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
        return s;
    }();
    return g;
}

}  // namespace detail

// Volume rule over T cap Omega.  Interior elements get the standard
// simplex rule; cut elements are clipped against the chord-linearized
// interface and the polygon is fan-triangulated.
inline QuadratureRule cut_volume_quadrature(const BackgroundMesh& mesh, int e,
                                            const LevelSet& phi, int order) {
    const auto& ref = detail::reference_rule(order);
    QuadratureRule rule;
    auto tri = mesh.element_coords(e);
    int n_inside = 0;
    for (auto& p : tri)
        if (detail::perturbed_phi(phi, p, mesh.h) < 0.0) ++n_inside;
    if (n_inside == 3) {
        detail::map_rule_to_triangle(ref, tri[0], tri[1], tri[2], rule);
        return rule;
    }
    auto poly = detail::clip_element(mesh, e, phi);
    for (size_t k = 1; k + 1 < poly.size(); ++k)
        detail::map_rule_to_triangle(ref, poly[0], poly[k], poly[k + 1], rule);
    return rule;
}

// Full-element simplex rule, used for penalty terms integrated over
// whole (uncut) elements and for local projections.
inline QuadratureRule element_quadrature(const BackgroundMesh& mesh, int e, int order) {
    const auto& ref = detail::reference_rule(order);
    QuadratureRule rule;
    auto tri = mesh.element_coords(e);
    detail::map_rule_to_triangle(ref, tri[0], tri[1], tri[2], rule);
    return rule;
}

// Gauss points on the interface chord of a cut element with exact
// level-set normals.
inline BoundaryQuadratureRule cut_boundary_quadrature(const BackgroundMesh& mesh, int e,
                                                      const LevelSet& phi, int order) {
    if (order > 5)
        throw std::invalid_argument("cut_boundary_quadrature: order > 5 not implemented");
    auto tri = mesh.element_coords(e);
    int n_inside = 0;
    for (auto& p : tri)
        if (detail::perturbed_phi(phi, p, mesh.h) < 0.0) ++n_inside;
    if (n_inside == 0 || n_inside == 3)
        throw std::logic_error("cut_boundary_quadrature: element is not cut");
    auto chord = detail::interface_chord(mesh, e, phi);
    const double len = norm(chord[1] - chord[0]);
    const auto& g = detail::gauss_segment();
    BoundaryQuadratureRule rule;
    for (int q = 0; q < 3; ++q) {
        Point2 p = chord[0] + g.t[q] * (chord[1] - chord[0]);
        rule.points.push_back(p);
        rule.weights.push_back(g.w[q] * len);
        rule.normals.push_back(phi.gradient(p));
    }
    return rule;
}

// Portions of the box boundary partial Omega_0 that lie inside Omega and
// on a face of element e.  Needed when the physical domain is clipped by
// the box (halfplane geometries); empty for the immersed circle.
inline BoundaryQuadratureRule box_boundary_quadrature(const BackgroundMesh& mesh, int e,
                                                      const LevelSet& phi, int order) {
    if (order > 5)
        throw std::invalid_argument("box_boundary_quadrature: order > 5 not implemented");
    BoundaryQuadratureRule rule;
    for (int face_id : mesh.element_faces[e]) {
        const Face& f = mesh.faces[face_id];
        if (f.right >= 0) continue;  // internal face
        Point2 a = mesh.nodes[f.n0], b = mesh.nodes[f.n1];
        double fa = detail::perturbed_phi(phi, a, mesh.h);
        double fb = detail::perturbed_phi(phi, b, mesh.h);
        if (fa >= 0.0 && fb >= 0.0) continue;
        // keep the phi < 0 part of the segment
        if (fa >= 0.0) a = detail::edge_root(phi, a, b, fa, fb);
        else if (fb >= 0.0) b = detail::edge_root(phi, a, b, fa, fb);
        const double len = norm(b - a);
        if (len <= 0.0) continue;
        const auto& g = detail::gauss_segment();
        for (int q = 0; q < 3; ++q) {
            rule.points.push_back(a + g.t[q] * (b - a));
            rule.weights.push_back(g.w[q] * len);
            rule.normals.push_back(f.normal);
        }
    }
    return rule;
}

}  // namespace cutfem
