// cutfem: configuration-driven front end for the stabilized cut
// discretization.  Subcommands: solve, convergence, tau-sweep,
// condition, verify.  All outputs are CSV tables plus gnuplot scripts.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cutfem/experiments.hpp"

namespace {

using namespace cutfem;

std::ofstream open_csv(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    if (!out) throw std::runtime_error("cannot open " + dir + "/" + name);
    out.precision(15);
    return out;
}

void dump_matrix(const linalg::SparseMatrix& A, const std::string& dir,
                 const std::string& name) {
    auto out = open_csv(dir, name);
    out << "row,col,value\n";
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            out << i << "," << A.cols[k] << "," << A.vals[k] << "\n";
}

void write_gnuplot(const std::string& dir, const std::string& name,
                   const std::string& csv, const std::string& title, int xcol, int ycol,
                   const std::string& xlabel, const std::string& ylabel) {
    auto out = open_csv(dir, name);
    out << "set datafile separator ','\n"
        << "set logscale xy\n"
        << "set xlabel '" << xlabel << "'\n"
        << "set ylabel '" << ylabel << "'\n"
        << "set key left top\n"
        << "plot '" << csv << "' every ::1 using " << xcol << ":" << ycol
        << " with linespoints title '" << title << "'\n";
}

ProblemData problem_for(const ExperimentConfig& cfg) {
    if (cfg.geometry == "circle") return circle_problem();
    // halfplane patch problem: u = x, f = 0
    ProblemData data;
    data.f = [](Point2) { return 0.0; };
    data.g = [](Point2 p) { return p.x; };
    data.u_exact = [](Point2 p) { return p.x; };
    data.grad_u_exact = [](Point2) -> Point2 { return {1.0, 0.0}; };
    return data;
}

int cmd_solve(const ExperimentConfig& cfg) {
    auto data = problem_for(cfg);
    const int n = cfg.levels.back();
    auto inst = build_instance(cfg, n);
    StabilizationSpec spec{cfg.family, cfg.m, cfg.tau_list.front()};
    auto nitsche =
        assemble_nitsche(inst.active, inst.dofmap, inst.phi, data, cfg.beta, cfg.quad_order);
    auto stab = assemble_stabilization(spec, inst.active, inst.dofmap, inst.partition,
                                       inst.map, inst.dofpart);
    auto A = assemble_system(nitsche, stab);
    if (cfg.dump_matrices) {
        dump_matrix(nitsche.matrix, cfg.out_dir, "matrix_nitsche.csv");
        dump_matrix(stab.matrix, cfg.out_dir, "matrix_stabilization.csv");
        dump_matrix(A, cfg.out_dir, "matrix_system.csv");
    }
    auto [u, rep] = linalg::solve_spd(A, nitsche.load, cfg.solver_tol);

    auto sol = open_csv(cfg.out_dir, "solution.csv");
    sol << "dof_id,x,y,value\n";
    for (int i = 0; i < inst.dofmap.n_dofs(); ++i)
        sol << i << "," << inst.dofmap.dof_coords[i].x << ","
            << inst.dofmap.dof_coords[i].y << "," << u[i] << "\n";

    ErrorPair err;
    if (data.u_exact)
        err = compute_errors(u, data, inst.active, inst.dofmap, inst.phi, cfg.quad_order);
    auto summary = open_csv(cfg.out_dir, "summary.csv");
    summary << "h,dofs,l2_error,h1_error,iterations,residual\n";
    summary << inst.mesh.h << "," << inst.dofmap.n_dofs() << "," << err.l2 << ","
            << err.h1_semi << "," << rep.iterations << "," << rep.relative_residual << "\n";
    std::cout << "solve: n=" << n << " dofs=" << inst.dofmap.n_dofs() << " L2=" << err.l2
              << " H1=" << err.h1_semi << " iters=" << rep.iterations << "\n";
    return 0;
}

int cmd_convergence(const ExperimentConfig& cfg) {
    if (cfg.levels.size() < 3)
        throw std::invalid_argument("convergence: need at least 3 mesh levels");
    auto data = problem_for(cfg);
    auto out = open_csv(cfg.out_dir, "convergence.csv");
    out << "family,tau,n,h,dofs,l2_error,h1_error,rate_l2,rate_h1\n";
    for (double tau : cfg.tau_list) {
        auto rows = run_convergence(cfg, data, tau);
        for (const auto& r : rows) {
            out << to_string(cfg.family) << "," << tau << "," << r.n << "," << r.h << ","
                << r.dofs << "," << r.l2 << "," << r.h1 << "," << r.rate_l2 << ","
                << r.rate_h1 << "\n";
            std::cout << to_string(cfg.family) << " tau=" << tau << " n=" << r.n
                      << " L2=" << r.l2 << " (rate " << r.rate_l2 << ") H1=" << r.h1
                      << " (rate " << r.rate_h1 << ")\n";
        }
    }
    write_gnuplot(cfg.out_dir, "convergence.gp", "convergence.csv",
                  to_string(cfg.family) + " L2 error", 4, 6, "h", "error");
    return 0;
}

int cmd_tau_sweep(const ExperimentConfig& cfg) {
    if (cfg.family != StabFamily::Nodal)
        throw std::invalid_argument("tau-sweep: nodal family only");
    auto data = problem_for(cfg);
    std::vector<double> taus = cfg.tau_list;
    if (taus.size() < 2) taus = {1e3, 1e6, 1e9};
    const int n = cfg.levels.back();
    auto rows = run_tau_sweep(cfg, data, n, taus);
    auto out = open_csv(cfg.out_dir, "tau_sweep.csv");
    out << "tau,max_constraint,ext_deviation\n";
    std::vector<double> ts, deltas;
    for (const auto& r : rows) {
        out << r.tau << "," << r.max_constraint << "," << r.ext_deviation << "\n";
        ts.push_back(r.tau);
        deltas.push_back(r.max_constraint);
        std::cout << "tau=" << r.tau << " delta=" << r.max_constraint
                  << " ||u - Pi~u||_inf=" << r.ext_deviation << "\n";
    }
    std::cout << "log-log slope of delta vs tau: " << loglog_slope(ts, deltas) << "\n";
    write_gnuplot(cfg.out_dir, "tau_sweep.gp", "tau_sweep.csv", "max constraint", 1, 2,
                  "tau", "delta");
    return 0;
}

int cmd_condition(const ExperimentConfig& cfg) {
    if (cfg.levels.size() < 3)
        throw std::invalid_argument("condition: need at least 3 mesh levels");
    auto data = problem_for(cfg);
    auto rows = run_condition(cfg, data);
    auto out = open_csv(cfg.out_dir, "condition.csv");
    out << "family,tau,n,h,lambda_max,lambda_min,cond2\n";
    for (const auto& r : rows) {
        out << to_string(cfg.family) << "," << r.tau << "," << r.n << "," << r.h << ","
            << r.lambda_max << "," << r.lambda_min << "," << r.cond2 << "\n";
        std::cout << to_string(cfg.family) << " tau=" << r.tau << " n=" << r.n
                  << " cond=" << r.cond2 << "\n";
    }
    for (double tau : cfg.tau_list) {
        std::vector<double> hs, ks;
        for (const auto& r : rows) {
            if (r.tau != tau) continue;
            hs.push_back(r.h);
            ks.push_back(r.cond2);
        }
        std::cout << "tau=" << tau << " slope of log cond vs log h: " << loglog_slope(hs, ks)
                  << "\n";
    }
    write_gnuplot(cfg.out_dir, "condition.gp", "condition.csv", "cond2", 4, 7, "h",
                  "condition number");
    return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
    auto items = run_verify(cfg);
    auto out = open_csv(cfg.out_dir, "verify.csv");
    out << "check,pass,detail\n";
    bool all = true;
    for (const auto& it : items) {
        out << it.name << "," << (it.pass ? 1 : 0) << "," << it.detail << "\n";
        std::cout << (it.pass ? "PASS " : "FAIL ") << it.name << " (" << it.detail << ")\n";
        all = all && it.pass;
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D cut finite element solver with ghost-penalty stabilization"};
    app.require_subcommand(1);

    std::string config_path, out_dir, subname;
    bool dump = false;
    unsigned seed = 0;
    bool have_seed = false;

    const std::pair<const char*, const char*> commands[] = {
        {"solve", "solve the Poisson problem on the finest configured level"},
        {"convergence", "error convergence study over the configured mesh ladder"},
        {"tau-sweep", "probe the tau -> infinity limit of the nodal stabilization"},
        {"condition", "condition number scaling study"},
        {"verify", "self-checks: quadrature, assumptions, matrix structure"},
    };
    for (auto [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "config file (key = value, [section] blocks)");
        sub->add_option("--out", out_dir, "output directory for CSV tables and plot scripts");
        sub->add_flag("--dump-matrices", dump, "write matrices as row,col,value triplets");
        sub->add_option("--seed", seed, "RNG seed for randomized checks")
            ->each([&](const std::string&) { have_seed = true; });
        sub->callback([&, name] { subname = name; });
    }

    CLI11_PARSE(app, argc, argv);

    cutfem::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = cutfem::load_config(config_path, subname);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (dump) cfg.dump_matrices = true;
        if (have_seed) cfg.seed = seed;
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (subname == "solve") return cmd_solve(cfg);
        if (subname == "convergence") return cmd_convergence(cfg);
        if (subname == "tau-sweep") return cmd_tau_sweep(cfg);
        if (subname == "condition") return cmd_condition(cfg);
        if (subname == "verify") return cmd_verify(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
