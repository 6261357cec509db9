#pragma once

// Structured background triangulations, level-set geometries and the
// active-mesh classification used by the cut discretization.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cutfem {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 p) { return std::sqrt(dot(p, p)); }

struct BBox {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
};

// Internal faces carry the two adjacent elements; boundary faces have
// right == -1.  The normal points out of the `left` element.
struct Face {
    int n0 = -1, n1 = -1;
    int left = -1, right = -1;
    Point2 normal;
};

struct BackgroundMesh {
    std::vector<Point2> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<Face> faces;
    std::vector<std::array<int, 3>> element_faces;  // face ids per element
    double h = 0.0;                                 // max element diameter
    BBox bbox;

    int n_internal_faces() const {
        int c = 0;
        for (const auto& f : faces)
            if (f.right >= 0) ++c;
        return c;
    }

    std::array<Point2, 3> element_coords(int e) const {
        const auto& el = elements[e];
        return {nodes[el[0]], nodes[el[1]], nodes[el[2]]};
    }

    double element_area(int e) const {
        auto [a, b, c] = element_coords(e);
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }

    Point2 element_centroid(int e) const {
        auto [a, b, c] = element_coords(e);
        return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    }

    double element_diameter(int e) const {
        auto [a, b, c] = element_coords(e);
        return std::max({norm(b - a), norm(c - b), norm(a - c)});
    }
};

// Uniform n x n grid of squares on bbox, each split along the same
// diagonal (lower-left to upper-right).  h is the diagonal length.
inline BackgroundMesh build_background_mesh(int n, BBox bbox) {
    if (n < 1)
        throw std::invalid_argument("build_background_mesh: n must be >= 1");
    if (bbox.width() <= 0.0 || bbox.height() <= 0.0)
        throw std::invalid_argument("build_background_mesh: degenerate bbox");

    BackgroundMesh mesh;
    mesh.bbox = bbox;
    const double dx = bbox.width() / n;
    const double dy = bbox.height() / n;
    mesh.h = std::sqrt(dx * dx + dy * dy);

    mesh.nodes.reserve((n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.nodes.push_back({bbox.xmin + i * dx, bbox.ymin + j * dy});

    auto nid = [n](int i, int j) { return j * (n + 1) + i; };
    mesh.elements.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int ll = nid(i, j), lr = nid(i + 1, j);
            const int ul = nid(i, j + 1), ur = nid(i + 1, j + 1);
            mesh.elements.push_back({ll, lr, ur});
            mesh.elements.push_back({ll, ur, ul});
        }
    }

    // Face connectivity from sorted node pairs.
    struct PairHash {
        int first = -1, second = -1, face = -1;
    };
    std::vector<std::vector<PairHash>> bucket(mesh.nodes.size());
    mesh.element_faces.assign(mesh.elements.size(), {-1, -1, -1});
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        const auto& el = mesh.elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = el[k], b = el[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            int face_id = -1;
            for (auto& ph : bucket[a])
                if (ph.second == b) face_id = ph.face;
            if (face_id < 0) {
                Face f;
                f.n0 = a;
                f.n1 = b;
                f.left = e;
                Point2 t = mesh.nodes[b] - mesh.nodes[a];
                Point2 nrm{t.y, -t.x};
                nrm = (1.0 / norm(nrm)) * nrm;
                // orient out of `left`
                Point2 mid = 0.5 * (mesh.nodes[a] + mesh.nodes[b]);
                if (dot(nrm, mid - mesh.element_centroid(e)) < 0.0)
                    nrm = -1.0 * nrm;
                f.normal = nrm;
                face_id = static_cast<int>(mesh.faces.size());
                mesh.faces.push_back(f);
                bucket[a].push_back({a, b, face_id});
            } else {
                mesh.faces[face_id].right = e;
            }
            mesh.element_faces[e][k] = face_id;
        }
    }
    return mesh;
}

// Signed-distance level sets: negative inside the physical domain.
class LevelSet {
  public:
    enum class Kind { Circle, Halfplane };

    static LevelSet circle(Point2 center, double radius) {
        if (radius <= 0.0)
            throw std::invalid_argument("LevelSet::circle: radius must be positive");
        LevelSet ls;
        ls.kind_ = Kind::Circle;
        ls.center_ = center;
        ls.radius_ = radius;
        return ls;
    }

    static LevelSet halfplane(Point2 normal, double offset) {
        const double len = norm(normal);
        if (len <= 0.0)
            throw std::invalid_argument("LevelSet::halfplane: zero normal");
        LevelSet ls;
        ls.kind_ = Kind::Halfplane;
        ls.normal_ = (1.0 / len) * normal;
        ls.offset_ = offset / len;
        return ls;
    }

    Kind kind() const { return kind_; }

    double operator()(Point2 p) const {
        if (kind_ == Kind::Circle) return norm(p - center_) - radius_;
        return dot(normal_, p) - offset_;
    }

    // Unit outward normal of the domain; exact for both kinds.
    Point2 gradient(Point2 p) const {
        if (kind_ == Kind::Circle) {
            Point2 d = p - center_;
            const double r = norm(d);
            if (r == 0.0) return {1.0, 0.0};
            return (1.0 / r) * d;
        }
        return normal_;
    }

  private:
    Kind kind_ = Kind::Circle;
    Point2 center_{0.0, 0.0};
    double radius_ = 0.5;
    Point2 normal_{1.0, 0.0};
    double offset_ = 0.0;
};

enum class ElementClass { Interior, Cut };

namespace detail {

// Deterministic tie-break: a vertex exactly on the interface is pushed
// outside the domain.
inline double perturbed_phi(const LevelSet& phi, Point2 p, double h) {
    const double v = phi(p);
    return v == 0.0 ? 1e-12 * h : v;
}

// Bisection root of phi along segment [a,b]; phi(a) and phi(b) must have
// opposite signs.  Tolerance 1e-13 in the parameter.
inline Point2 edge_root(const LevelSet& phi, Point2 a, Point2 b, double fa, double fb) {
    double lo = 0.0, hi = 1.0;
    double flo = fa;
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = phi(a + mid * (b - a));
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    const double t = 0.5 * (lo + hi);
    return a + t * (b - a);
}

// Polygon T cap {phi <= 0} with the interface replaced by the chord
// between edge roots.  Vertices in element orientation.
inline std::vector<Point2> clip_element(const BackgroundMesh& mesh, int e,
                                        const LevelSet& phi) {
    auto tri = mesh.element_coords(e);
    std::array<double, 3> f;
    for (int k = 0; k < 3; ++k) f[k] = perturbed_phi(phi, tri[k], mesh.h);
    std::vector<Point2> poly;
    for (int k = 0; k < 3; ++k) {
        const int k2 = (k + 1) % 3;
        if (f[k] < 0.0) poly.push_back(tri[k]);
        if ((f[k] < 0.0) != (f[k2] < 0.0))
            poly.push_back(edge_root(phi, tri[k], tri[k2], f[k], f[k2]));
    }
    return poly;
}

inline double polygon_area(const std::vector<Point2>& poly) {
    double a = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

// The two chord endpoints of the linearized interface inside a cut element.
inline std::array<Point2, 2> interface_chord(const BackgroundMesh& mesh, int e,
                                             const LevelSet& phi) {
    auto tri = mesh.element_coords(e);
    std::array<double, 3> f;
    for (int k = 0; k < 3; ++k) f[k] = perturbed_phi(phi, tri[k], mesh.h);
    std::array<Point2, 2> pts;
    int count = 0;
    for (int k = 0; k < 3; ++k) {
        const int k2 = (k + 1) % 3;
        if ((f[k] < 0.0) != (f[k2] < 0.0)) {
            if (count < 2) pts[count] = edge_root(phi, tri[k], tri[k2], f[k], f[k2]);
            ++count;
        }
    }
    if (count != 2)
        throw std::logic_error("interface_chord: element is not cut");
    return pts;
}

}  // namespace detail

struct ActiveMesh {
    const BackgroundMesh* parent = nullptr;
    std::vector<int> element_ids;       // background ids, ascending
    std::vector<ElementClass> classes;  // parallel to element_ids
    std::vector<double> cut_fractions;  // parallel to element_ids
    std::vector<int> background_to_active;

    int size() const { return static_cast<int>(element_ids.size()); }
    bool is_active(int bg) const { return background_to_active[bg] >= 0; }
    bool is_cut(int a) const { return classes[a] == ElementClass::Cut; }
    const BackgroundMesh& mesh() const { return *parent; }
    int bg(int a) const { return element_ids[a]; }
};

// |T cap Omega| / |T| from the clipped polygon; exactly 1 for interior T.
inline double cut_fraction(const BackgroundMesh& mesh, int e, const LevelSet& phi) {
    auto tri = mesh.element_coords(e);
    bool all_in = true, all_out = true;
    for (auto& p : tri) {
        const double f = detail::perturbed_phi(phi, p, mesh.h);
        (f < 0.0 ? all_out : all_in) = false;
    }
    if (all_in) return 1.0;
    if (all_out) return 0.0;
    auto poly = detail::clip_element(mesh, e, phi);
    if (poly.size() < 3) return 0.0;
    return detail::polygon_area(poly) / mesh.element_area(e);
}

inline ActiveMesh extract_active_mesh(const BackgroundMesh& mesh, const LevelSet& phi) {
    ActiveMesh active;
    active.parent = &mesh;
    active.background_to_active.assign(mesh.elements.size(), -1);
    for (int e = 0; e < static_cast<int>(mesh.elements.size()); ++e) {
        auto tri = mesh.element_coords(e);
        int n_inside = 0;
        for (auto& p : tri)
            if (detail::perturbed_phi(phi, p, mesh.h) < 0.0) ++n_inside;
        if (n_inside == 0) continue;
        active.background_to_active[e] = active.size();
        active.element_ids.push_back(e);
        if (n_inside == 3) {
            active.classes.push_back(ElementClass::Interior);
            active.cut_fractions.push_back(1.0);
        } else {
            active.classes.push_back(ElementClass::Cut);
            active.cut_fractions.push_back(cut_fraction(mesh, e, phi));
        }
    }
    if (active.element_ids.empty())
        throw std::runtime_error("extract_active_mesh: level set has no negative values on the mesh");
    return active;
}

}  // namespace cutfem
