#pragma once

// Experiment drivers shared by the CLI and the acceptance suite: the
// per-level discrete setup, the stabilized Poisson solve, and the
// convergence / condition / tau-sweep / verification studies.

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "cutfem/assembly.hpp"
#include "cutfem/classification.hpp"
#include "cutfem/config.hpp"
#include "cutfem/fe_space.hpp"
#include "cutfem/geometry.hpp"
#include "cutfem/linalg.hpp"
#include "cutfem/quadrature.hpp"
#include "cutfem/stabilization.hpp"

namespace cutfem {

// Everything derived from one (geometry, n, gamma) triple.
struct Instance {
    BackgroundMesh mesh;
    LevelSet phi;
    ActiveMesh active;
    DofMap dofmap;
    ElementPartition partition;
    AgglomerationMap map;
    DofPartition dofpart;
};

inline Instance build_instance(const ExperimentConfig& cfg, int n) {
    Instance inst{build_background_mesh(n, cfg.bbox), cfg.level_set(), {}, {}, {}, {}, {}};
    inst.active = extract_active_mesh(inst.mesh, inst.phi);
    inst.dofmap = build_dof_map(inst.active);
    inst.partition = partition_elements(inst.active, cfg.gamma);
    if (cfg.map_target == "interior") {
        std::vector<int> interior;
        for (int a = 0; a < inst.active.size(); ++a)
            if (!inst.active.is_cut(a)) interior.push_back(a);
        inst.map = build_agglomeration_map(inst.partition, inst.active, &interior);
    } else {
        inst.map = build_agglomeration_map(inst.partition, inst.active);
    }
    inst.dofpart = partition_dofs(inst.dofmap, inst.partition);
    return inst;
}

struct SolveResult {
    DofVector u;
    linalg::SolveReport report;
    ErrorPair errors;  // populated when the problem carries an exact solution
    double h = 0.0;
    int n_dofs = 0;
};

inline SolveResult solve_poisson(const Instance& inst, const ProblemData& data,
                                 const StabilizationSpec& spec, double beta,
                                 double tol = 1e-12, int order = 4) {
    auto nitsche = assemble_nitsche(inst.active, inst.dofmap, inst.phi, data, beta, order);
    auto stab = assemble_stabilization(spec, inst.active, inst.dofmap, inst.partition,
                                       inst.map, inst.dofpart);
    auto A = assemble_system(nitsche, stab);
    SolveResult res;
    std::tie(res.u, res.report) = linalg::solve_spd(A, nitsche.load, tol);
    res.h = inst.mesh.h;
    res.n_dofs = inst.dofmap.n_dofs();
    if (data.u_exact && data.grad_u_exact)
        res.errors = compute_errors(res.u, data, inst.active, inst.dofmap, inst.phi, order);
    return res;
}

struct ConvergenceRow {
    int n = 0;
    double h = 0.0;
    int dofs = 0;
    double l2 = 0.0;
    double h1 = 0.0;
    double rate_l2 = 0.0;  // vs previous row, 0 on the first
    double rate_h1 = 0.0;
};

inline std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& cfg,
                                                   const ProblemData& data, double tau) {
    std::vector<ConvergenceRow> rows;
    for (int n : cfg.levels) {
        auto inst = build_instance(cfg, n);
        StabilizationSpec spec{cfg.family, cfg.m, tau};
        auto res = solve_poisson(inst, data, spec, cfg.beta, cfg.solver_tol, cfg.quad_order);
        ConvergenceRow row{n, res.h, res.n_dofs, res.errors.l2, res.errors.h1_semi, 0.0, 0.0};
        if (!rows.empty()) {
            const auto& prev = rows.back();
            row.rate_l2 = std::log(prev.l2 / row.l2) / std::log(prev.h / row.h);
            row.rate_h1 = std::log(prev.h1 / row.h1) / std::log(prev.h / row.h);
        }
        rows.push_back(row);
    }
    return rows;
}

struct ConditionRow {
    int n = 0;
    double h = 0.0;
    double tau = 0.0;
    double lambda_max = 0.0;
    double lambda_min = 0.0;
    double cond2 = 0.0;
};

inline std::vector<ConditionRow> run_condition(const ExperimentConfig& cfg,
                                               const ProblemData& data) {
    std::vector<ConditionRow> rows;
    for (int n : cfg.levels) {
        auto inst = build_instance(cfg, n);
        auto nitsche =
            assemble_nitsche(inst.active, inst.dofmap, inst.phi, data, cfg.beta, cfg.quad_order);
        for (double tau : cfg.tau_list) {
            StabilizationSpec spec{cfg.family, cfg.m, tau};
            auto stab = assemble_stabilization(spec, inst.active, inst.dofmap, inst.partition,
                                               inst.map, inst.dofpart);
            auto A = assemble_system(nitsche, stab);
            auto est = linalg::condition_estimate(A);
            rows.push_back({n, inst.mesh.h, tau, est.lambda_max, est.lambda_min, est.cond2});
        }
    }
    return rows;
}

// log-log slope of y against x by least squares.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct TauSweepRow {
    double tau = 0.0;
    double max_constraint = 0.0;  // max_i |omega_i . u_h|
    double ext_deviation = 0.0;   // ||u_h - Pi~_h u_h||_inf
};

// Probes the tau -> infinity limit u_h -> Pi~_h u_h for the nodal family.
inline std::vector<TauSweepRow> run_tau_sweep(const ExperimentConfig& cfg,
                                              const ProblemData& data, int n,
                                              const std::vector<double>& taus) {
    auto inst = build_instance(cfg, n);
    auto nitsche =
        assemble_nitsche(inst.active, inst.dofmap, inst.phi, data, cfg.beta, cfg.quad_order);
    std::vector<TauSweepRow> rows;
    std::vector<int> dofs;
    std::vector<double> coeffs;
    for (double tau : taus) {
        StabilizationSpec spec{StabFamily::Nodal, cfg.m, tau};
        auto stab = assemble_nodal_penalty(spec.m, tau, inst.dofpart, inst.map, inst.dofmap);
        auto A = assemble_system(nitsche, stab);
        auto [u, rep] = linalg::solve_spd(A, nitsche.load, cfg.solver_tol);
        TauSweepRow row{tau, 0.0, 0.0};
        for (int i : inst.dofpart.unstable_dofs) {
            nodal_weight_vector(inst.active, inst.dofmap, inst.dofpart, inst.map, i, dofs,
                                coeffs);
            double wi = 0.0;
            for (size_t k = 0; k < dofs.size(); ++k) wi += coeffs[k] * u[dofs[k]];
            row.max_constraint = std::max(row.max_constraint, std::abs(wi));
        }
        auto ext = discrete_extension(u, inst.dofpart, inst.map, inst.dofmap);
        for (size_t i = 0; i < u.size(); ++i)
            row.ext_deviation = std::max(row.ext_deviation, std::abs(u[i] - ext[i]));
        rows.push_back(row);
    }
    return rows;
}

struct VerifyItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

// The aggregated diagnostic suite behind the `verify` subcommand:
// geometry convergence, path assumptions, matrix structure, strong
// consistency and the stability ratio.
inline std::vector<VerifyItem> run_verify(const ExperimentConfig& cfg) {
    std::vector<VerifyItem> items;
    auto record = [&](const std::string& name, bool pass, const std::string& detail) {
        items.push_back({name, pass, detail});
    };

    if (cfg.geometry == "circle") {
        // quadrature area / perimeter convergence on the configured ladder
        std::vector<double> hs, area_err, per_err;
        for (int n : cfg.levels) {
            auto mesh = build_background_mesh(n, cfg.bbox);
            auto phi = cfg.level_set();
            auto active = extract_active_mesh(mesh, phi);
            double area = 0.0, per = 0.0;
            for (int a = 0; a < active.size(); ++a) {
                area += cut_volume_quadrature(mesh, active.bg(a), phi, cfg.quad_order)
                            .total_weight();
                if (active.is_cut(a))
                    per += cut_boundary_quadrature(mesh, active.bg(a), phi, cfg.quad_order)
                               .total_weight();
            }
            const double r = cfg.radius;
            hs.push_back(mesh.h);
            area_err.push_back(std::abs(area - M_PI * r * r));
            per_err.push_back(std::abs(per - 2.0 * M_PI * r));
        }
        const double sa = loglog_slope(hs, area_err);
        const double sp = loglog_slope(hs, per_err);
        record("quadrature-area-rate", sa >= 1.9, "slope " + std::to_string(sa));
        record("quadrature-perimeter-rate", sp >= 1.9, "slope " + std::to_string(sp));
    }

    const int n = cfg.levels.back();
    auto inst = build_instance(cfg, n);

    auto a2a3 = verify_assumptions(inst.map, inst.partition, inst.dofmap, cfg.l_max);
    record("assumptions-A2-A3", a2a3.ok(),
           std::to_string(a2a3.items.size()) + " violations at L_max=" +
               std::to_string(cfg.l_max));

    // symmetry / PSD / affine kernel per family
    std::mt19937 rng(cfg.seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (StabFamily fam : {StabFamily::FaceGradient, StabFamily::FaceL2,
                           StabFamily::ExtensionGradient, StabFamily::ExtensionL2,
                           StabFamily::Nodal}) {
        StabilizationSpec spec{fam, 1, cfg.tau_list.front()};
        auto stab = assemble_stabilization(spec, inst.active, inst.dofmap, inst.partition,
                                           inst.map, inst.dofpart);
        const auto& S = stab.matrix;
        double asym = 0.0;
        for (int i = 0; i < S.n; ++i)
            for (int k = S.row_ptr[i]; k < S.row_ptr[i + 1]; ++k)
                asym = std::max(asym, std::abs(S.vals[k] - S.coeff(S.cols[k], i)));
        const double scale = std::max(S.max_abs(), 1e-30);
        bool psd_ok = true;
        double min_quad = 0.0;
        DofVector v(S.n);
        for (int trial = 0; trial < 20; ++trial) {
            for (double& x : v) x = dist(rng);
            const double q = S.quad(v);
            min_quad = std::min(min_quad, q);
            if (q < -1e-12 * scale * linalg::dot(v, v)) psd_ok = false;
        }
        DofVector aff(S.n), Saff(S.n);
        double aff_inf = 0.0;
        for (int i = 0; i < S.n; ++i) {
            const Point2 p = inst.dofmap.dof_coords[i];
            aff[i] = 0.7 + 1.3 * p.x - 0.4 * p.y;
            aff_inf = std::max(aff_inf, std::abs(aff[i]));
        }
        S.matvec(aff, Saff);
        double kern = 0.0;
        for (double x : Saff) kern = std::max(kern, std::abs(x));
        const double kern_tol = 1e-11 * scale * aff_inf;
        char detail[128];
        std::snprintf(detail, sizeof(detail), "asym %.2e, ||S aff||_inf %.2e", asym, kern);
        record("stab-" + to_string(fam),
               asym <= 1e-12 * scale && psd_ok && kern <= kern_tol, detail);
    }

    if (inst.dofpart.unstable_dofs.empty()) {
        record("strong-consistency", true, "skipped: I^S empty");
        record("stability-ratio", true, "skipped: I^S empty");
    } else {
        // strong consistency of Pi_h for the manufactured solution
        auto data = circle_problem();
        ScalarField u = cfg.geometry == "circle" ? *data.u_exact
                                                 : ScalarField([](Point2 p) { return p.x; });
        auto piu = strong_interpolant(u, inst.active, inst.dofmap, inst.dofpart, inst.map);
        auto stab = assemble_nodal_penalty(1, cfg.tau_list.front(), inst.dofpart, inst.map,
                                           inst.dofmap);
        double piu_inf = 0.0;
        for (double x : piu) piu_inf = std::max(piu_inf, std::abs(x));
        const double sn = stab_seminorm(stab, piu);
        const double tol = 1e-12 * piu_inf * std::sqrt(std::max(stab.matrix.max_abs(), 1e-30));
        record("strong-consistency", sn <= tol,
               "||Pi_h u||_s = " + std::to_string(sn));

        // stability ratio over random v, both norms, nodal family
        bool ratio_ok = true;
        std::string detail;
        for (int m : {0, 1}) {
            auto stab_m = assemble_nodal_penalty(m, cfg.tau_list.front(), inst.dofpart,
                                                 inst.map, inst.dofmap);
            double worst = 0.0;
            DofVector v(inst.dofmap.n_dofs());
            for (int trial = 0; trial < 50; ++trial) {
                for (double& x : v) x = dist(rng);
                const double num = seminorm_sq_active(v, inst.active, inst.dofmap, m);
                const double den =
                    seminorm_sq_cut(v, inst.active, inst.dofmap, inst.phi, m) +
                    stab_m.matrix.quad(v);
                worst = std::max(worst, num / den);
            }
            detail += "m=" + std::to_string(m) + " ratio " + std::to_string(worst) + " ";
            if (!std::isfinite(worst)) ratio_ok = false;
        }
        record("stability-ratio", ratio_ok, detail);
    }
    return items;
}

}  // namespace cutfem
