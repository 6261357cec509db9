#pragma once

// Flat key = value config files with optional [section] headers; keys in
// a section apply only when the section matches the active subcommand.
// Every key has a default, so the reference circle case runs with no file.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cutfem/geometry.hpp"
#include "cutfem/stabilization.hpp"

namespace cutfem {

struct ExperimentConfig {
    // geometry
    std::string geometry = "circle";
    Point2 center{0.0, 0.0};
    double radius = 0.5;
    Point2 normal{1.0, 0.0};
    double offset = 0.5;
    BBox bbox{-1.0, -1.0, 1.0, 1.0};

    // discretization
    std::vector<int> levels{8, 16, 32, 64};
    double gamma = 0.5;
    double beta = 10.0;
    std::vector<double> tau_list{0.1};
    StabFamily family = StabFamily::Nodal;
    int m = 1;
    int quad_order = 4;
    int l_max = 6;
    std::string map_target = "large";  // or "interior"

    // numerics / IO
    double solver_tol = 1e-12;
    unsigned seed = 42;
    std::string out_dir = ".";
    bool dump_matrices = false;
    bool verbose = false;

    LevelSet level_set() const {
        if (geometry == "circle") return LevelSet::circle(center, radius);
        if (geometry == "halfplane") return LevelSet::halfplane(normal, offset);
        throw std::invalid_argument("unknown geometry: " + geometry);
    }

    void validate() const {
        if (levels.empty())
            throw std::invalid_argument("config: mesh levels must be nonempty");
        for (size_t i = 1; i < levels.size(); ++i)
            if (levels[i] <= levels[i - 1])
                throw std::invalid_argument("config: mesh levels must be strictly increasing");
        if (tau_list.empty())
            throw std::invalid_argument("config: tau list must be nonempty");
        for (double t : tau_list)
            if (t <= 0.0) throw std::invalid_argument("config: tau must be positive");
        if (gamma <= 0.0 || gamma > 1.0)
            throw std::invalid_argument("config: gamma must be in (0,1]");
        if (beta <= 0.0) throw std::invalid_argument("config: beta must be positive");
        if (quad_order < 1 || quad_order > 4)
            throw std::invalid_argument("config: quad order must be in [1,4]");
        if (map_target != "large" && map_target != "interior")
            throw std::invalid_argument("config: target must be large or interior");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_list(const std::string& value) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(value);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value '" + v + "'");
}

}  // namespace detail

inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
    using detail::parse_list;
    if (key == "geometry") cfg.geometry = value;
    else if (key == "center") {
        auto v = parse_list(value);
        if (v.size() != 2) throw std::invalid_argument("config: center needs two values");
        cfg.center = {v[0], v[1]};
    } else if (key == "radius") cfg.radius = std::stod(value);
    else if (key == "normal") {
        auto v = parse_list(value);
        if (v.size() != 2) throw std::invalid_argument("config: normal needs two values");
        cfg.normal = {v[0], v[1]};
    } else if (key == "offset") cfg.offset = std::stod(value);
    else if (key == "bbox") {
        auto v = parse_list(value);
        if (v.size() != 4) throw std::invalid_argument("config: bbox needs four values");
        cfg.bbox = {v[0], v[1], v[2], v[3]};
    } else if (key == "levels") {
        cfg.levels.clear();
        for (double d : parse_list(value)) cfg.levels.push_back(static_cast<int>(d));
    } else if (key == "gamma") cfg.gamma = std::stod(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "tau") cfg.tau_list = parse_list(value);
    else if (key == "family") cfg.family = stab_family_from_string(value);
    else if (key == "m") cfg.m = std::stoi(value);
    else if (key == "order") cfg.quad_order = std::stoi(value);
    else if (key == "l_max") cfg.l_max = std::stoi(value);
    else if (key == "target") cfg.map_target = value;
    else if (key == "solver_tol") cfg.solver_tol = std::stod(value);
    else if (key == "seed") cfg.seed = static_cast<unsigned>(std::stoul(value));
    else if (key == "out") cfg.out_dir = value;
    else if (key == "dump_matrices") cfg.dump_matrices = detail::parse_bool(value);
    else if (key == "verbose") cfg.verbose = detail::parse_bool(value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

// `section` selects which [section] blocks apply besides the global one.
inline ExperimentConfig load_config(const std::string& path, const std::string& section) {
    ExperimentConfig cfg;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string line, current;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            current = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value, got '" + line + "'");
        if (!current.empty() && current != section) continue;
        apply_config_key(cfg, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

}  // namespace cutfem
