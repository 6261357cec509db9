#pragma once

// Nitsche bilinear form and load, the Clement interpolant pi_h, the
// discrete extension Pi~_h whose image is the nodal penalty's kernel,
// the strong-consistency interpolant Pi_h, and cut-norm error evaluation.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "cutfem/classification.hpp"
#include "cutfem/fe_space.hpp"
#include "cutfem/linalg.hpp"
#include "cutfem/quadrature.hpp"
#include "cutfem/stabilization.hpp"

namespace cutfem {

using ScalarField = std::function<double(Point2)>;
using VectorField = std::function<Point2(Point2)>;

struct ProblemData {
    ScalarField f;                       // source
    ScalarField g;                       // Dirichlet data, default 0
    std::optional<ScalarField> u_exact;
    std::optional<VectorField> grad_u_exact;
};

struct NitscheSystem {
    linalg::SparseMatrix matrix;   // a_h
    std::vector<double> load;      // l_h
    double beta = 10.0;
    double h = 0.0;
};

namespace detail {

// Boundary quadrature of the physical domain seen from element a: the
// interface chord for cut elements plus clipped box-boundary segments.
inline BoundaryQuadratureRule domain_boundary_quadrature(const ActiveMesh& active, int a,
                                                         const LevelSet& phi, int order) {
    const auto& mesh = active.mesh();
    BoundaryQuadratureRule rule;
    if (active.is_cut(a)) rule = cut_boundary_quadrature(mesh, active.bg(a), phi, order);
    auto box = box_boundary_quadrature(mesh, active.bg(a), phi, order);
    rule.points.insert(rule.points.end(), box.points.begin(), box.points.end());
    rule.weights.insert(rule.weights.end(), box.weights.begin(), box.weights.end());
    rule.normals.insert(rule.normals.end(), box.normals.begin(), box.normals.end());
    return rule;
}

}  // namespace detail

inline NitscheSystem assemble_nitsche(const ActiveMesh& active, const DofMap& dofmap,
                                      const LevelSet& phi, const ProblemData& data,
                                      double beta, int order = 4) {
    if (beta <= 0.0)
        throw std::invalid_argument("assemble_nitsche: beta must be positive");
    const auto& mesh = active.mesh();
    const double h = mesh.h;
    NitscheSystem sys;
    sys.beta = beta;
    sys.h = h;
    sys.load.assign(dofmap.n_dofs(), 0.0);
    linalg::SparseBuilder builder(dofmap.n_dofs());
    ScalarField g = data.g ? data.g : [](Point2) { return 0.0; };

    for (int a = 0; a < active.size(); ++a) {
        auto dofs = dofmap.element_dofs(a);
        auto grads = element_basis_gradients(active, a);

        // (grad v, grad w)_Omega and (f, v)_Omega over T cap Omega
        auto vol = cut_volume_quadrature(mesh, active.bg(a), phi, order);
        double area = 0.0;
        for (size_t q = 0; q < vol.points.size(); ++q) {
            area += vol.weights[q];
            auto vals = element_basis_values(active, a, vol.points[q]);
            const double fq = data.f(vol.points[q]);
            for (int i = 0; i < 3; ++i)
                sys.load[dofs[i]] += vol.weights[q] * fq * vals[i];
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                builder.add(dofs[i], dofs[j], area * dot(grads[i], grads[j]));

        // Nitsche terms on T cap boundary
        auto bdr = detail::domain_boundary_quadrature(active, a, phi, order);
        for (size_t q = 0; q < bdr.points.size(); ++q) {
            const double w = bdr.weights[q];
            const Point2 n = bdr.normals[q];
            auto vals = element_basis_values(active, a, bdr.points[q]);
            const double gq = g(bdr.points[q]);
            for (int i = 0; i < 3; ++i) {
                const double dni = dot(n, grads[i]);
                for (int j = 0; j < 3; ++j) {
                    const double dnj = dot(n, grads[j]);
                    builder.add(dofs[i], dofs[j],
                                w * (-dnj * vals[i] - vals[j] * dni +
                                     beta / h * vals[j] * vals[i]));
                }
                sys.load[dofs[i]] += w * gq * (-dni + beta / h * vals[i]);
            }
        }
    }
    sys.matrix = builder.finalize();
    return sys;
}

// A_h = a_h + s_h
inline linalg::SparseMatrix assemble_system(const NitscheSystem& nitsche,
                                            const StabilizationMatrix& stab) {
    return linalg::add(nitsche.matrix, stab.matrix);
}

// Clement interpolant: local L2 projection onto affines on the
// smallest-id active element of each dof's support, evaluated at x_i.
inline DofVector clement_interpolate(const ScalarField& fn, const ActiveMesh& active,
                                     const DofMap& dofmap, int order = 4) {
    const auto& mesh = active.mesh();
    std::vector<int> pick(dofmap.n_dofs(), -1);
    for (int a = 0; a < active.size(); ++a)
        for (int i : dofmap.element_dofs(a))
            if (pick[i] < 0) pick[i] = a;  // active ids ascend with element ids

    DofVector v(dofmap.n_dofs(), 0.0);
    for (int i = 0; i < dofmap.n_dofs(); ++i) {
        const int a = pick[i];
        const Point2 xc = mesh.element_centroid(active.bg(a));
        auto rule = element_quadrature(mesh, active.bg(a), order);
        // basis {1, x-xc, y-yc}; 3x3 normal equations
        double M[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double rhs[3] = {0, 0, 0};
        for (size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q];
            const double bx = rule.points[q].x - xc.x;
            const double by = rule.points[q].y - xc.y;
            const double b[3] = {1.0, bx, by};
            const double fq = fn(rule.points[q]);
            for (int r = 0; r < 3; ++r) {
                rhs[r] += w * fq * b[r];
                for (int c = 0; c < 3; ++c) M[r][c] += w * b[r] * b[c];
            }
        }
        // Gaussian elimination with partial pivoting
        int perm[3] = {0, 1, 2};
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int r = col + 1; r < 3; ++r)
                if (std::abs(M[perm[r]][col]) > std::abs(M[perm[piv]][col])) piv = r;
            std::swap(perm[col], perm[piv]);
            const double d = M[perm[col]][col];
            if (d == 0.0)
                throw std::logic_error("clement_interpolate: singular local mass matrix");
            for (int r = col + 1; r < 3; ++r) {
                const double factor = M[perm[r]][col] / d;
                for (int c = col; c < 3; ++c) M[perm[r]][c] -= factor * M[perm[col]][c];
                rhs[perm[r]] -= factor * rhs[perm[col]];
            }
        }
        double coef[3];
        for (int col = 2; col >= 0; --col) {
            double s = rhs[perm[col]];
            for (int c = col + 1; c < 3; ++c) s -= M[perm[col]][c] * coef[c];
            coef[col] = s / M[perm[col]][col];
        }
        const Point2 xi = dofmap.dof_coords[i];
        v[i] = coef[0] + coef[1] * (xi.x - xc.x) + coef[2] * (xi.y - xc.y);
    }
    return v;
}

// Discrete extension Pi~_h: unstable dof values replaced by the
// canonical extension from S_h(T_i) evaluated at x_i.
inline DofVector discrete_extension(const DofVector& v, const DofPartition& dofpart,
                                    const AgglomerationMap& map, const DofMap& dofmap) {
    const ActiveMesh& active = *dofmap.active;
    DofVector w = v;
    for (int i : dofpart.unstable_dofs) {
        const int s = map.target[dofpart.anchor[i]];
        auto sd = dofmap.element_dofs(s);
        auto sv = element_basis_values(active, s, dofmap.dof_coords[i]);
        w[i] = sv[0] * v[sd[0]] + sv[1] * v[sd[1]] + sv[2] * v[sd[2]];
    }
    return w;
}

// Pi_h = Pi~_h pi_h; lies in the kernel of the nodal penalty.
inline DofVector strong_interpolant(const ScalarField& fn, const ActiveMesh& active,
                                    const DofMap& dofmap, const DofPartition& dofpart,
                                    const AgglomerationMap& map) {
    return discrete_extension(clement_interpolate(fn, active, dofmap), dofpart, map, dofmap);
}

struct ErrorPair {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

inline ErrorPair compute_errors(const DofVector& u_h, const ProblemData& data,
                                const ActiveMesh& active, const DofMap& dofmap,
                                const LevelSet& phi, int order = 4) {
    if (!data.u_exact || !data.grad_u_exact)
        throw std::invalid_argument("compute_errors: exact solution not provided");
    const auto& mesh = active.mesh();
    double e0 = 0.0, e1 = 0.0;
    for (int a = 0; a < active.size(); ++a) {
        auto dofs = dofmap.element_dofs(a);
        auto grads = element_basis_gradients(active, a);
        Point2 gh = u_h[dofs[0]] * grads[0] + u_h[dofs[1]] * grads[1] + u_h[dofs[2]] * grads[2];
        auto rule = cut_volume_quadrature(mesh, active.bg(a), phi, order);
        for (size_t q = 0; q < rule.points.size(); ++q) {
            auto vals = element_basis_values(active, a, rule.points[q]);
            const double uh = u_h[dofs[0]] * vals[0] + u_h[dofs[1]] * vals[1] +
                              u_h[dofs[2]] * vals[2];
            const double du = uh - (*data.u_exact)(rule.points[q]);
            const Point2 dg = gh - (*data.grad_u_exact)(rule.points[q]);
            e0 += rule.weights[q] * du * du;
            e1 += rule.weights[q] * dot(dg, dg);
        }
    }
    return {std::sqrt(e0), std::sqrt(e1)};
}

// ||grad^m v||^2 over the full active mesh Omega_h (m=0: the function).
inline double seminorm_sq_active(const DofVector& v, const ActiveMesh& active,
                                 const DofMap& dofmap, int m) {
    const auto& mesh = active.mesh();
    double s = 0.0;
    for (int a = 0; a < active.size(); ++a) {
        auto dofs = dofmap.element_dofs(a);
        const double area = mesh.element_area(active.bg(a));
        if (m == 1) {
            auto grads = element_basis_gradients(active, a);
            Point2 g = v[dofs[0]] * grads[0] + v[dofs[1]] * grads[1] + v[dofs[2]] * grads[2];
            s += area * dot(g, g);
        } else {
            // exact P1 mass: |T|/12 * (sum v_i)^2 + |T|/12 * sum v_i^2
            const double v0 = v[dofs[0]], v1 = v[dofs[1]], v2 = v[dofs[2]];
            s += area / 6.0 *
                 (v0 * v0 + v1 * v1 + v2 * v2 + v0 * v1 + v1 * v2 + v0 * v2);
        }
    }
    return s;
}

// ||grad^m v||^2 over Omega via cut quadrature.
inline double seminorm_sq_cut(const DofVector& v, const ActiveMesh& active,
                              const DofMap& dofmap, const LevelSet& phi, int m,
                              int order = 4) {
    const auto& mesh = active.mesh();
    double s = 0.0;
    for (int a = 0; a < active.size(); ++a) {
        auto dofs = dofmap.element_dofs(a);
        auto rule = cut_volume_quadrature(mesh, active.bg(a), phi, order);
        if (m == 1) {
            auto grads = element_basis_gradients(active, a);
            Point2 g = v[dofs[0]] * grads[0] + v[dofs[1]] * grads[1] + v[dofs[2]] * grads[2];
            s += rule.total_weight() * dot(g, g);
        } else {
            for (size_t q = 0; q < rule.points.size(); ++q) {
                auto vals = element_basis_values(active, a, rule.points[q]);
                const double vq = v[dofs[0]] * vals[0] + v[dofs[1]] * vals[1] +
                                  v[dofs[2]] * vals[2];
                s += rule.weights[q] * vq * vq;
            }
        }
    }
    return s;
}

// Active-mesh mass matrix (full elements), used as the coercivity
// surrogate norm.
inline linalg::SparseMatrix assemble_mass(const ActiveMesh& active, const DofMap& dofmap) {
    const auto& mesh = active.mesh();
    linalg::SparseBuilder builder(dofmap.n_dofs());
    for (int a = 0; a < active.size(); ++a) {
        auto dofs = dofmap.element_dofs(a);
        const double area = mesh.element_area(active.bg(a));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                builder.add(dofs[i], dofs[j], area / 12.0 * (i == j ? 2.0 : 1.0));
    }
    return builder.finalize();
}

// Manufactured circle problem: u = cos(pi r) on the disc of
// radius 1/2, f = pi (sin(pi r) + pi r cos(pi r)) / r with the removable
// singularity at the origin resolved by its series value.
inline ProblemData circle_problem() {
    ProblemData data;
    data.f = [](Point2 p) {
        const double r = norm(p);
        const double pi = M_PI;
        if (r < 1e-6) {
            // f = 2 pi^2 - (2/3) pi^4 r^2 + O(r^4)
            return 2.0 * pi * pi - (2.0 / 3.0) * pi * pi * pi * pi * r * r;
        }
        return pi * (std::sin(pi * r) + pi * r * std::cos(pi * r)) / r;
    };
    data.g = [](Point2) { return 0.0; };
    data.u_exact = [](Point2 p) { return std::cos(M_PI * norm(p)); };
    data.grad_u_exact = [](Point2 p) -> Point2 {
        const double r = norm(p);
        if (r < 1e-12) return {0.0, 0.0};
        const double s = -M_PI * std::sin(M_PI * r) / r;
        return {s * p.x, s * p.y};
    };
    return data;
}

}  // namespace cutfem
