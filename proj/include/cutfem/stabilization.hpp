#pragma once

// The three ghost-penalty families assembled as sparse symmetric
// positive semidefinite matrices: face penalty (gradient-jump and L2
// variants), extension-jump penalty over (T, S_h(T)) pairs, and the
// nodal penalty built from rank-1 matrices omega_i (x) omega_i with at
// most four nonzero coefficients each.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutfem/classification.hpp"
#include "cutfem/fe_space.hpp"
#include "cutfem/linalg.hpp"
#include "cutfem/quadrature.hpp"

namespace cutfem {

enum class StabFamily {
    FaceGradient,
    FaceL2,
    ExtensionGradient,
    ExtensionL2,
    Nodal,
};

inline std::string to_string(StabFamily f) {
    switch (f) {
        case StabFamily::FaceGradient: return "face_gradient";
        case StabFamily::FaceL2: return "face_l2";
        case StabFamily::ExtensionGradient: return "extension_gradient";
        case StabFamily::ExtensionL2: return "extension_l2";
        case StabFamily::Nodal: return "nodal";
    }
    return "?";
}

inline StabFamily stab_family_from_string(const std::string& s) {
    if (s == "face_gradient" || s == "face") return StabFamily::FaceGradient;
    if (s == "face_l2") return StabFamily::FaceL2;
    if (s == "extension_gradient" || s == "extension") return StabFamily::ExtensionGradient;
    if (s == "extension_l2") return StabFamily::ExtensionL2;
    if (s == "nodal") return StabFamily::Nodal;
    throw std::invalid_argument("unknown stabilization family: " + s);
}

struct StabilizationSpec {
    StabFamily family = StabFamily::Nodal;
    int m = 1;  // norm target: 0 (L2) or 1 (H1)
    double tau = 0.1;

    // mesh-size exponent alpha_m of the family
    double alpha() const {
        switch (family) {
            case StabFamily::FaceGradient: return 3.0 - 2.0 * m;
            case StabFamily::FaceL2: return -2.0 * m;
            case StabFamily::ExtensionGradient: return 0.0;
            case StabFamily::ExtensionL2: return -2.0 * m;
            case StabFamily::Nodal: return 2.0 - 2.0 * m;  // d - 2m, d = 2
        }
        return 0.0;
    }

    void validate() const {
        if (tau <= 0.0)
            throw std::invalid_argument("StabilizationSpec: tau must be positive");
        if (m != 0 && m != 1)
            throw std::invalid_argument("StabilizationSpec: m must be 0 or 1");
        if (family == StabFamily::ExtensionGradient && m != 1)
            throw std::invalid_argument("extension_gradient stabilizes H1 only (m=1)");
    }
};

struct StabilizationMatrix {
    linalg::SparseMatrix matrix;
    StabilizationSpec spec;
};

namespace detail {

// Faces of the cut zone: internal faces of the active mesh with at
// least one cut adjacent element.
inline std::vector<int> cut_zone_faces(const ActiveMesh& active) {
    std::vector<int> out;
    const auto& mesh = active.mesh();
    for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
        const Face& face = mesh.faces[f];
        if (face.right < 0) continue;
        const int a1 = active.background_to_active[face.left];
        const int a2 = active.background_to_active[face.right];
        if (a1 < 0 || a2 < 0) continue;
        if (active.is_cut(a1) || active.is_cut(a2)) out.push_back(f);
    }
    return out;
}

// Coefficients of the linear functional v -> [v]_{T1,T2}(x) in dof space.
inline void jump_value_coeffs(const ActiveMesh& active, const DofMap& dofmap, int a1,
                              int a2, Point2 x, std::vector<int>& dofs,
                              std::vector<double>& coeffs) {
    dofs.clear();
    coeffs.clear();
    auto push = [&](int dof, double c) {
        for (size_t k = 0; k < dofs.size(); ++k) {
            if (dofs[k] == dof) {
                coeffs[k] += c;
                return;
            }
        }
        dofs.push_back(dof);
        coeffs.push_back(c);
    };
    auto d1 = dofmap.element_dofs(a1);
    auto v1 = element_basis_values(active, a1, x);
    for (int k = 0; k < 3; ++k) push(d1[k], v1[k]);
    auto d2 = dofmap.element_dofs(a2);
    auto v2 = element_basis_values(active, a2, x);
    for (int k = 0; k < 3; ++k) push(d2[k], -v2[k]);
}

// Coefficients of v -> e . (grad v|_{T1} - grad v|_{T2}) for a direction e.
inline void jump_grad_coeffs(const ActiveMesh& active, const DofMap& dofmap, int a1,
                             int a2, Point2 dir, std::vector<int>& dofs,
                             std::vector<double>& coeffs) {
    dofs.clear();
    coeffs.clear();
    auto push = [&](int dof, double c) {
        for (size_t k = 0; k < dofs.size(); ++k) {
            if (dofs[k] == dof) {
                coeffs[k] += c;
                return;
            }
        }
        dofs.push_back(dof);
        coeffs.push_back(c);
    };
    auto d1 = dofmap.element_dofs(a1);
    auto g1 = element_basis_gradients(active, a1);
    for (int k = 0; k < 3; ++k) push(d1[k], dot(dir, g1[k]));
    auto d2 = dofmap.element_dofs(a2);
    auto g2 = element_basis_gradients(active, a2);
    for (int k = 0; k < 3; ++k) push(d2[k], -dot(dir, g2[k]));
}

}  // namespace detail

// Example 1 (gradient-jump) and Example 2 (L2) face penalties over the
// cut-zone face set.  Normal-gradient jumps are constant per face for
// P1, so the gradient variant is a single rank-1 term per face.
inline StabilizationMatrix assemble_face_penalty(int m, double tau,
                                                 const ActiveMesh& active,
                                                 const DofMap& dofmap,
                                                 StabFamily family = StabFamily::FaceGradient) {
    StabilizationSpec spec{family, m, tau};
    spec.validate();
    if (family != StabFamily::FaceGradient && family != StabFamily::FaceL2)
        throw std::invalid_argument("assemble_face_penalty: not a face family");
    const auto& mesh = active.mesh();
    const double h = mesh.h;
    linalg::SparseBuilder builder(dofmap.n_dofs());
    auto faces = detail::cut_zone_faces(active);

    std::vector<int> dofs;
    std::vector<double> coeffs;
    for (int f : faces) {
        const Face& face = mesh.faces[f];
        const int a1 = active.background_to_active[face.left];
        const int a2 = active.background_to_active[face.right];
        if (family == StabFamily::FaceGradient) {
            const double flen = norm(mesh.nodes[face.n1] - mesh.nodes[face.n0]);
            detail::jump_grad_coeffs(active, dofmap, a1, a2, face.normal, dofs, coeffs);
            builder.add_rank1(dofs, coeffs, tau * std::pow(h, spec.alpha()) * flen);
        } else {
            // integrate ([v]_{T1,T2})^2 over both full elements
            for (int a : {a1, a2}) {
                auto rule = element_quadrature(mesh, active.bg(a), 4);
                for (size_t q = 0; q < rule.points.size(); ++q) {
                    detail::jump_value_coeffs(active, dofmap, a1, a2, rule.points[q],
                                              dofs, coeffs);
                    builder.add_rank1(dofs, coeffs,
                                      tau * std::pow(h, spec.alpha()) * rule.weights[q]);
                }
            }
        }
    }
    return {builder.finalize(), spec};
}

// Example 3: extension-jump penalty over pairs (T, S_h(T)), gradient
// variant integrated over T (constant integrand), L2 variant by full-
// element quadrature on T.
inline StabilizationMatrix assemble_extension_penalty(StabFamily family, int m, double tau,
                                                      const ActiveMesh& active,
                                                      const DofMap& dofmap,
                                                      const ElementPartition& part,
                                                      const AgglomerationMap& map) {
    StabilizationSpec spec{family, m, tau};
    spec.validate();
    if (family != StabFamily::ExtensionGradient && family != StabFamily::ExtensionL2)
        throw std::invalid_argument("assemble_extension_penalty: not an extension family");
    const auto& mesh = active.mesh();
    const double h = mesh.h;
    linalg::SparseBuilder builder(dofmap.n_dofs());

    std::vector<int> dofs;
    std::vector<double> coeffs;
    for (int a : part.small_ids) {
        const int s = map.target[a];
        if (s < 0)
            throw std::logic_error("assemble_extension_penalty: unmapped small element");
        if (family == StabFamily::ExtensionGradient) {
            const double area = mesh.element_area(active.bg(a));
            detail::jump_grad_coeffs(active, dofmap, a, s, {1.0, 0.0}, dofs, coeffs);
            builder.add_rank1(dofs, coeffs, tau * area);
            detail::jump_grad_coeffs(active, dofmap, a, s, {0.0, 1.0}, dofs, coeffs);
            builder.add_rank1(dofs, coeffs, tau * area);
        } else {
            auto rule = element_quadrature(mesh, active.bg(a), 4);
            for (size_t q = 0; q < rule.points.size(); ++q) {
                detail::jump_value_coeffs(active, dofmap, a, s, rule.points[q], dofs, coeffs);
                builder.add_rank1(dofs, coeffs,
                                  tau * std::pow(h, spec.alpha()) * rule.weights[q]);
            }
        }
    }
    return {builder.finalize(), spec};
}

// The stabilization weight vector omega_i of an unstable dof: e_i minus
// the extended element basis of S_h(T_i) evaluated at x_i.  At most four
// nonzero coefficients; they sum to zero by partition of unity.
inline void nodal_weight_vector(const ActiveMesh& active, const DofMap& dofmap,
                                const DofPartition& dofpart, const AgglomerationMap& map,
                                int i, std::vector<int>& dofs, std::vector<double>& coeffs) {
    dofs.clear();
    coeffs.clear();
    const int anchor = dofpart.anchor[i];
    const int s = map.target[anchor];
    if (s < 0)
        throw std::logic_error("nodal_weight_vector: anchor has no mapped element");
    dofs.push_back(i);
    coeffs.push_back(1.0);
    auto sd = dofmap.element_dofs(s);
    auto sv = element_basis_values(active, s, dofmap.dof_coords[i]);
    for (int k = 0; k < 3; ++k) {
        if (sd[k] == i) {
            coeffs[0] -= sv[k];
        } else {
            dofs.push_back(sd[k]);
            coeffs.push_back(-sv[k]);
        }
    }
}

// Nodal stabilization: S = sum_{i in I^S} tau h^{d-2m} omega_i (x) omega_i.
inline StabilizationMatrix assemble_nodal_penalty(int m, double tau, const DofPartition& dofpart,
                                                  const AgglomerationMap& map,
                                                  const DofMap& dofmap) {
    StabilizationSpec spec{StabFamily::Nodal, m, tau};
    spec.validate();
    const ActiveMesh& active = *dofmap.active;
    const double h = active.mesh().h;
    linalg::SparseBuilder builder(dofmap.n_dofs());
    std::vector<int> dofs;
    std::vector<double> coeffs;
    for (int i : dofpart.unstable_dofs) {
        nodal_weight_vector(active, dofmap, dofpart, map, i, dofs, coeffs);
        builder.add_rank1(dofs, coeffs, tau * std::pow(h, spec.alpha()));
    }
    return {builder.finalize(), spec};
}

// Dispatcher used by the experiment drivers.
inline StabilizationMatrix assemble_stabilization(const StabilizationSpec& spec,
                                                  const ActiveMesh& active,
                                                  const DofMap& dofmap,
                                                  const ElementPartition& part,
                                                  const AgglomerationMap& map,
                                                  const DofPartition& dofpart) {
    switch (spec.family) {
        case StabFamily::FaceGradient:
        case StabFamily::FaceL2:
            return assemble_face_penalty(spec.m, spec.tau, active, dofmap, spec.family);
        case StabFamily::ExtensionGradient:
        case StabFamily::ExtensionL2:
            return assemble_extension_penalty(spec.family, spec.m, spec.tau, active, dofmap,
                                              part, map);
        case StabFamily::Nodal:
            return assemble_nodal_penalty(spec.m, spec.tau, dofpart, map, dofmap);
    }
    throw std::logic_error("assemble_stabilization: unreachable");
}

// ||v||_{s} = sqrt(max(v^T S v, 0)).
inline double stab_seminorm(const StabilizationMatrix& stab, const DofVector& v) {
    if (static_cast<int>(v.size()) != stab.matrix.n)
        throw std::invalid_argument("stab_seminorm: dimension mismatch");
    return std::sqrt(std::max(stab.matrix.quad(v), 0.0));
}

}  // namespace cutfem
