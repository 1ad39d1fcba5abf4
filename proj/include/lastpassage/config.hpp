#pragma once

#include "lastpassage/boundary.hpp"
#include "lastpassage/error.hpp"
#include "lastpassage/kernels.hpp"
#include "lastpassage/levy_model.hpp"
#include "lastpassage/simulator.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lastpassage {

/// Parsed run configuration. Defaults apply to keys that are absent.
struct RunConfig {
    LevyModel model = LevyModel::brownian(0.0, 1.0);
    double theta = 0.0;

    std::size_t n = 200;
    SolverSettings solver;
    McKernelSettings kernels;

    SimConfig sim;

    std::size_t value_points = 200;
    std::optional<double> value_x_min;
    std::optional<double> value_x_max;
    bool gnuplot = false;

    std::string out_dir = "out";
    std::string source;  // canonical key=value listing, hashed for provenance
    std::uint64_t hash = 0;

    double median() const { return std::numbers::ln2 / theta; }
};

inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"model", {"kind", "mu", "sigma", "lambda", "rho"}},
        {"problem", {"theta", "median"}},
        {"solver", {"n", "h0", "root_tolerance", "residual_tolerance", "kernel_paths", "kernel_batches", "seed",
                    "batch_errors"}},
        {"sim", {"dt", "n_paths", "seed", "horizon_cap", "x0", "threads"}},
        {"value", {"points", "x_min", "x_max", "gnuplot"}},
        {"output", {"dir"}},
    };
    return schema;
}

class ConfigReader {
public:
    explicit ConfigReader(const boost::property_tree::ptree& tree) : tree_(tree) {}

    std::optional<std::string> text(const std::string& section, const std::string& key) const {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto v = sec->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }

    std::optional<double> real(const std::string& section, const std::string& key) const {
        const auto t = text(section, key);
        if (!t) return std::nullopt;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(*t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != t->size() || !std::isfinite(v))
            throw ConfigError(section + "." + key + ": expected a finite number, got '" + *t + "'");
        return v;
    }

    std::optional<std::uint64_t> integer(const std::string& section, const std::string& key) const {
        const auto t = text(section, key);
        if (!t) return std::nullopt;
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (!t->empty() && (*t)[0] != '-') v = std::stoull(*t, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != t->size())
            throw ConfigError(section + "." + key + ": expected a nonnegative integer, got '" + *t + "'");
        return v;
    }

    std::optional<bool> boolean(const std::string& section, const std::string& key) const {
        const auto t = text(section, key);
        if (!t) return std::nullopt;
        if (*t == "true" || *t == "1" || *t == "yes") return true;
        if (*t == "false" || *t == "0" || *t == "no") return false;
        throw ConfigError(section + "." + key + ": expected true or false, got '" + *t + "'");
    }

private:
    const boost::property_tree::ptree& tree_;
};

}  // namespace detail

/// Parses and validates an INI configuration. Unknown sections or keys are errors.
inline RunConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }

    const auto& schema = detail::config_schema();
    std::ostringstream canon;
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end()) throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key outside a section: " + section);
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
            if (!value.empty()) throw ConfigError("nested value under " + section + "." + key);
        }
    }
    // canonical listing: schema order, present keys only
    for (const auto& [section, keys] : schema) {
        for (const std::string& key : keys) {
            const auto sec = tree.get_child_optional(section);
            if (!sec) continue;
            if (const auto v = sec->get_optional<std::string>(key)) canon << section << "." << key << "=" << *v << "\n";
        }
    }

    const detail::ConfigReader r(tree);
    RunConfig cfg;

    const std::string kind = r.text("model", "kind").value_or("");
    const double mu = r.real("model", "mu").value_or(0.0);
    const double sigma = r.real("model", "sigma").value_or(1.0);
    try {
        if (kind == "brownian") {
            if (r.text("model", "lambda") || r.text("model", "rho"))
                throw ConfigError("model.lambda and model.rho apply to the jump_diffusion model only");
            cfg.model = LevyModel::brownian(mu, sigma);
        } else if (kind == "jump_diffusion") {
            const auto lambda = r.real("model", "lambda");
            const auto rho = r.real("model", "rho");
            if (!lambda || !rho) throw ConfigError("jump_diffusion needs model.lambda and model.rho");
            cfg.model = LevyModel::jump_diffusion(mu, sigma, *lambda, *rho);
        } else {
            throw ConfigError("model.kind must be brownian or jump_diffusion, got '" + kind + "'");
        }
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError(std::string("model: ") + e.what());
    }

    const auto theta = r.real("problem", "theta");
    const auto median = r.real("problem", "median");
    if (theta.has_value() == median.has_value()) throw ConfigError("give exactly one of problem.theta or problem.median");
    cfg.theta = theta ? *theta : std::numbers::ln2 / *median;
    if (!(cfg.theta > 0.0) || !std::isfinite(cfg.theta)) throw ConfigError("theta must be positive");

    cfg.n = r.integer("solver", "n").value_or(cfg.n);
    if (cfg.n < 2) throw ConfigError("solver.n must be at least 2");
    cfg.solver.h0 = r.real("solver", "h0").value_or(cfg.solver.h0);
    if (!(cfg.solver.h0 > 0.0)) throw ConfigError("solver.h0 must be positive");
    cfg.solver.root_tolerance = r.real("solver", "root_tolerance").value_or(cfg.solver.root_tolerance);
    cfg.solver.residual_tolerance = r.real("solver", "residual_tolerance").value_or(cfg.solver.residual_tolerance);
    if (!(cfg.solver.root_tolerance > 0.0) || !(cfg.solver.residual_tolerance > 0.0))
        throw ConfigError("solver tolerances must be positive");
    cfg.solver.batch_errors = r.boolean("solver", "batch_errors").value_or(cfg.model.has_jumps());
    cfg.kernels.n_paths = r.integer("solver", "kernel_paths").value_or(cfg.kernels.n_paths);
    cfg.kernels.batches = r.integer("solver", "kernel_batches").value_or(cfg.kernels.batches);
    cfg.kernels.seed = r.integer("solver", "seed").value_or(cfg.kernels.seed);
    if (cfg.kernels.batches < 2) throw ConfigError("solver.kernel_batches must be at least 2");
    if (cfg.kernels.n_paths < 10000) throw ConfigError("solver.kernel_paths must be at least 10000");

    cfg.sim.model = cfg.model;
    cfg.sim.theta = cfg.theta;
    cfg.sim.dt = r.real("sim", "dt").value_or(cfg.sim.dt);
    cfg.sim.n_paths = r.integer("sim", "n_paths").value_or(cfg.sim.n_paths);
    cfg.sim.seed = r.integer("sim", "seed").value_or(cfg.sim.seed);
    cfg.sim.horizon_cap = r.real("sim", "horizon_cap");
    cfg.sim.x0 = r.real("sim", "x0").value_or(0.0);
    cfg.sim.threads = static_cast<unsigned>(r.integer("sim", "threads").value_or(0));
    try {
        validate(cfg.sim);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    cfg.value_points = r.integer("value", "points").value_or(cfg.value_points);
    if (cfg.value_points < 2) throw ConfigError("value.points must be at least 2");
    cfg.value_x_min = r.real("value", "x_min");
    cfg.value_x_max = r.real("value", "x_max");
    if (cfg.value_x_min && cfg.value_x_max && !(*cfg.value_x_min < *cfg.value_x_max))
        throw ConfigError("value.x_min must be below value.x_max");
    cfg.gnuplot = r.boolean("value", "gnuplot").value_or(false);

    cfg.out_dir = r.text("output", "dir").value_or(cfg.out_dir);
    if (cfg.out_dir.empty()) throw ConfigError("output.dir must not be empty");

    cfg.source = canon.str();
    cfg.hash = fnv1a64(cfg.source);
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in);
}

/// Applies a --seed override to every random stream of the run.
inline void override_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.kernels.seed = seed;
    cfg.sim.seed = seed;
}

}  // namespace lastpassage
