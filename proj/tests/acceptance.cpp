// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number, e.g. `acceptance 1 4`.

#include "lastpassage/boundary.hpp"
#include "lastpassage/config.hpp"
#include "lastpassage/io.hpp"
#include "lastpassage/simulator.hpp"
#include "lastpassage/validation.hpp"
#include "lastpassage/valuation.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lastpassage;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) { return num(v); }

/// Demo inputs and the products shared between criteria, built on first use.
class Demo {
public:
    Demo()
        : brownian_cfg(load_config(LASTPASSAGE_CONFIG_DIR "/brownian_demo.ini")),
          jump_cfg(load_config(LASTPASSAGE_CONFIG_DIR "/jump_demo.ini")),
          brownian_ctx(brownian_cfg.model, brownian_cfg.theta),
          jump_ctx(jump_cfg.model, jump_cfg.theta) {}

    RunConfig brownian_cfg;
    RunConfig jump_cfg;
    GainContext brownian_ctx;
    GainContext jump_ctx;

    const BoundaryGrid& brownian_boundary() {
        if (!brownian_) {
            const Stopwatch w;
            brownian_ = solve_boundary_brownian(brownian_ctx, brownian_cfg.n, brownian_cfg.solver);
            brownian_seconds = w.seconds();
        }
        return *brownian_;
    }

    const McKernelTable& jump_table() {
        if (!table_) {
            const Stopwatch w;
            table_ = std::make_unique<McKernelTable>(jump_ctx, jump_ctx.median() / static_cast<double>(jump_cfg.n),
                                                     jump_cfg.n, jump_cfg.kernels);
            table_seconds = w.seconds();
        }
        return *table_;
    }

    const BoundaryGrid& jump_boundary() {
        if (!jump_) {
            const McKernelTable& table = jump_table();
            const Stopwatch w;
            jump_ = solve_boundary_jump(jump_ctx, table, jump_cfg.n, jump_cfg.solver);
            jump_seconds = table_seconds + w.seconds();
        }
        return *jump_;
    }

    /// Demo rules on 1e5 common Brownian paths: optimal, shifts +-0.2, constant b_0, immediate.
    const SimReport& brownian_rules() {
        if (!rules_) {
            const BoundaryGrid& g = brownian_boundary();
            const std::vector<StoppingRule> rules{boundary_rule(g), boundary_rule(g, 0.2, "shift_up_0.2"),
                                                  boundary_rule(g, -0.2, "shift_down_0.2"),
                                                  constant_rule(g, g.b[0]), immediate_rule(g)};
            const Stopwatch w;
            rules_ = evaluate_rules(brownian_cfg.sim, rules, &brownian_ctx);
            rules_seconds = w.seconds();
        }
        return *rules_;
    }

    double brownian_seconds = 0.0;
    double table_seconds = 0.0;
    double jump_seconds = 0.0;
    double rules_seconds = 0.0;

private:
    std::optional<BoundaryGrid> brownian_;
    std::unique_ptr<McKernelTable> table_;
    std::optional<BoundaryGrid> jump_;
    std::optional<SimReport> rules_;
};

Outcome criterion1(Demo&) {
    const Stopwatch w;
    const CheckResult c = check_scale_closed_form(LevyModel::brownian(2.0, 1.0), std::numbers::ln2 / 10.0, 1000, 10.0, 1e-10);
    const double t = w.seconds();
    return {c.pass && t < 1.0, "max error " + fmt(c.statistic) + " (tol " + fmt(c.threshold) + "), " + fmt(t) + " s"};
}

Outcome criterion2(Demo& d) {
    SimConfig cfg = d.brownian_cfg.sim;
    cfg.n_paths = 100000;
    cfg.dt = 1e-3;
    const Stopwatch w;
    SimReport rep;
    const CheckResult c = check_infimum_law(d.brownian_ctx, cfg, &rep);
    const double t = w.seconds();
    return {c.pass && t < 120.0, "KS " + fmt(c.statistic) + " vs 1.5 x crit " + fmt(c.threshold) +
                                     " (node-only minima KS " + fmt(*rep.ks_grid) + "), " + fmt(t) + " s"};
}

Outcome boundary_properties(const GainContext& ctx, const BoundaryGrid& g, double tol, std::string& detail) {
    std::size_t rises = 0, below_h = 0;
    for (std::size_t k = 0; k < g.n; ++k) {
        if (k + 1 < g.n && g.b[k] < g.b[k + 1] - 2.0 * tol) ++rises;
        if (g.b[k] < ctx.h(g.t[k]) - tol) ++below_h;
    }
    const bool terminal = g.b[g.n - 1] <= 0.05;
    detail = "increases=" + std::to_string(rises) + " below_h=" + std::to_string(below_h) +
             " b_0=" + fmt(g.b[0]) + " b_{n-1}=" + fmt(g.b[g.n - 1]);
    return {rises == 0 && below_h == 0 && terminal, detail};
}

Outcome criterion3(Demo& d) {
    std::string bd, jd;
    const BoundaryGrid& bg = d.brownian_boundary();
    const Outcome b = boundary_properties(d.brownian_ctx, bg, d.brownian_cfg.solver.root_tolerance, bd);
    const BoundaryGrid& jg = d.jump_boundary();
    const Outcome j = boundary_properties(d.jump_ctx, jg, d.jump_cfg.solver.root_tolerance, jd);
    std::size_t flagged = 0;
    for (bool c : jg.certified) flagged += c ? 0 : 1;
    const bool fast = d.brownian_seconds < 120.0 && d.jump_seconds < 900.0;
    return {b.pass && j.pass && fast, "brownian[" + bd + ", " + fmt(d.brownian_seconds) + " s] jump[" + jd + ", " +
                                          fmt(d.jump_seconds) + " s, uncertified steps " + std::to_string(flagged) +
                                          "]"};
}

Outcome criterion4(Demo& d) {
    const CheckResult c = check_refinement(d.brownian_ctx, 100, 400, 5e-2);
    return {c.pass, "sup |b_100 - b_400| = " + fmt(c.statistic) + " (tol " + fmt(c.threshold) + ")"};
}

Outcome criterion5(Demo& d) {
    const SimReport& rep = d.brownian_rules();
    const double v0 = riemann_value_brownian(d.brownian_ctx, d.brownian_boundary(), 0, 0.0);
    const LemmaIdentity l = check_lemma_identity(rep, v0, 0.0);
    return {l.check.pass && d.rules_seconds < 300.0,
            "E|g-tau_D| = " + fmt(l.loss) + " +- " + fmt(l.loss_se) + ", V_h(0,0) + E(g) = " + fmt(l.value) + " +- " +
                fmt(l.value_se) + ", diff = " + fmt(l.loss - l.value) + " = " + fmt(3.0 * l.check.statistic) +
                " combined SE (paired SE " + fmt(l.paired_se) + "), " + fmt(d.rules_seconds) + " s"};
}

Outcome criterion6(Demo& d) {
    const SimReport& rep = d.brownian_rules();
    std::ostringstream os;
    bool pass = true;
    for (std::size_t r = 1; r < rep.rules.size(); ++r) {
        const RuleSummary& s = rep.rules[r];
        if (s.name == "immediate") continue;
        const bool ok = s.diff_mean >= -2.0 * s.diff_se;
        pass = pass && ok;
        os << s.name << " " << fmt(s.diff_mean) << " +- " << fmt(s.diff_se) << (ok ? "" : " (beaten)") << "; ";
    }
    return {pass, os.str()};
}

Outcome criterion7(Demo& d) {
    const RunConfig& c = d.jump_cfg;
    const DegeneracyResult r =
        check_degeneracy(c.model.mu(), c.model.sigma(), c.model.rho(), c.theta, c.n, c.kernels, c.solver, 1e-6);
    return {r.check.pass, "max |b_jump - b_brownian| / (3 SE) = " + fmt(r.check.statistic) + " at " + r.check.detail +
                              "; b_0 jump " + fmt(r.jump.b[0]) + " +- " + fmt(r.jump.b_se[0]) + " vs " +
                              fmt(r.brownian.b[0])};
}

bool slice_shape(const ValueGrid& vg, double slack, double se_mult, std::string& detail) {
    const double b = vg.boundary.b[vg.rows[0]];
    double worst_sign = -INFINITY, worst_mono = -INFINITY;
    bool hits_zero = false;
    for (std::size_t j = 0; j < vg.xs.size(); ++j) {
        const double v = vg.at_index(0, j);
        worst_sign = std::max(worst_sign, v - slack - se_mult * vg.se_at(0, j));
        if (j + 1 < vg.xs.size())
            worst_mono = std::max(worst_mono, v - vg.at_index(0, j + 1) - slack -
                                                  se_mult * std::hypot(vg.se_at(0, j), vg.se_at(0, j + 1)));
        if (vg.xs[j] >= b && v == 0.0) hits_zero = true;
    }
    const bool negative_start = vg.at_index(0, 0) < 0.0;
    detail = "V(lowest x)=" + fmt(vg.at_index(0, 0)) + " sign excess " + fmt(worst_sign) + " monotone excess " +
             fmt(worst_mono) + (hits_zero ? " reaches 0 at b" : " never reaches 0");
    return worst_sign <= 0.0 && worst_mono <= 0.0 && hits_zero && negative_start;
}

std::string shape_text(const ValueShapeReport& r) {
    return "positive " + fmt(r.positive) + ", floor " + fmt(r.below_floor) + ", decreasing_x " +
           fmt(r.decreasing_in_x) + ", decreasing_t " + fmt(r.decreasing_in_t) + ", |V(t_k,b_k)| " +
           fmt(r.boundary_residual) + " (beyond degenerate-step residual " + fmt(r.boundary_excess) + ")";
}

Outcome criterion8(Demo& d) {
    std::ostringstream os;
    bool pass = true;

    const BoundaryGrid& bg = d.brownian_boundary();
    const auto bxs = default_x_grid(d.brownian_ctx, bg, d.brownian_cfg.value_points);
    const ValueGrid bv = value_brownian(d.brownian_ctx, bg, {bxs, {}});
    const ValueShapeReport bs = check_value_shape(d.brownian_ctx, bv, 1e-6);
    const bool b_resid = bs.boundary_excess <= bg.h_step * d.brownian_cfg.solver.residual_tolerance;
    pass = pass && bs.ok() && b_resid;
    os << "brownian grid: " << shape_text(bs) << (b_resid ? "" : " (boundary residual too large)") << "; ";

    const ValueGrid b1 = value_brownian(d.brownian_ctx, bg, {bxs, {bg.row(1.0)}});
    std::string s1;
    const bool b1_ok = slice_shape(b1, 1e-6, 0.0, s1);
    pass = pass && b1_ok;
    os << "brownian t=1 slice: " << s1 << "; ";

    const BoundaryGrid& jg = d.jump_boundary();
    const McKernelTable& table = d.jump_table();
    const auto jxs = default_x_grid(d.jump_ctx, jg, d.jump_cfg.value_points);
    const ValueGrid jv = value_jump(d.jump_ctx, jg, table, {jxs, {}});
    const ValueShapeReport js = check_value_shape(d.jump_ctx, jv, 0.0, 3.0, &table);
    const bool j_resid = js.boundary_excess <= jg.h_step * d.jump_cfg.solver.residual_tolerance;
    pass = pass && js.ok() && j_resid;
    os << "jump grid: " << shape_text(js) << (j_resid ? "" : " (boundary residual too large)") << "; ";

    const ValueGrid j0 = value_jump(d.jump_ctx, jg, table, {jxs, {0}});
    std::string s0;
    const bool j0_ok = slice_shape(j0, 0.0, 3.0, s0);
    pass = pass && j0_ok;
    os << "jump t=0 slice: " << s0;
    return {pass, os.str()};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LASTPASSAGE_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[e.path().filename().string()] = ss.str();
    }
    return files;
}

Outcome criterion9(Demo&) {
    const fs::path root = fs::temp_directory_path() / ("lastpassage_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::map<std::string, std::string> configs{
        {"brownian", "[model]\nkind = brownian\nmu = 2\nsigma = 1\n[problem]\nmedian = 10\n[solver]\nn = 40\n"
                     "[sim]\nn_paths = 2000\ndt = 0.002\n[value]\npoints = 40\ngnuplot = true\n"},
        {"jump", "[model]\nkind = jump_diffusion\nmu = 3\nsigma = 1\nlambda = 1\nrho = 1\n[problem]\nmedian = 10\n"
                 "[solver]\nn = 20\nkernel_paths = 20000\nkernel_batches = 10\n[sim]\nn_paths = 1000\ndt = 0.002\n"
                 "[value]\npoints = 30\n"}};
    const std::vector<std::string> commands{"solve", "value", "value --slice t=1", "simulate", "validate"};
    std::ostringstream os;
    bool pass = true;
    for (const auto& [name, text] : configs) {
        const fs::path cfg = root / (name + ".ini");
        std::ofstream(cfg) << text;
        std::map<std::string, std::string> runs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = root / (name + "_" + std::to_string(rep));
            for (const std::string& c : commands) {
                const int rc = run_cli(c + " --config " + cfg.string() + " --out " + out.string() + " --seed 314");
                if (rc != 0 && rc != 2) {
                    pass = false;
                    os << name << " '" << c << "' exit " << rc << "; ";
                }
            }
            runs[rep] = read_tree(out);
        }
        std::size_t differing = 0;
        for (const auto& [file, content] : runs[0]) {
            const auto it = runs[1].find(file);
            if (it == runs[1].end() || it->second != content) ++differing;
        }
        if (runs[0].size() != runs[1].size()) ++differing;
        pass = pass && differing == 0 && !runs[0].empty();
        os << name << ": " << runs[0].size() << " files, " << differing << " differ; ";
    }
    fs::remove_all(root);
    return {pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome(Demo&)>>> criteria{
        {"closed-form scale function (Brownian)", criterion1},
        {"law of the running infimum (KS, 1e5 paths)", criterion2},
        {"boundary properties (both demo models)", criterion3},
        {"grid self-convergence (n=100 vs n=400)", criterion4},
        {"prediction identity E|g - tau_D| = V_h(0,0) + E(g)", criterion5},
        {"optimal rule dominance (paired, 1e5 paths)", criterion6},
        {"jump model with vanishing jump rate", criterion7},
        {"value function sign, monotonicity and slices", criterion8},
        {"bitwise determinism of every command", criterion9},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(static_cast<std::size_t>(std::stoul(argv[i])));

    Demo demo;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.count(i + 1)) continue;
        Outcome o;
        const Stopwatch w;
        try {
            o = criteria[i].second(demo);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " | "
                  << o.detail << " [" << fmt(w.seconds()) << " s]" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
