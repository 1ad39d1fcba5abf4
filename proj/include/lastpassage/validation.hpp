#pragma once

#include "lastpassage/boundary.hpp"
#include "lastpassage/gain.hpp"
#include "lastpassage/kernels.hpp"
#include "lastpassage/simulator.hpp"
#include "lastpassage/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace lastpassage {

/// Outcome of one oracle check: pass iff statistic <= threshold.
struct CheckResult {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

inline CheckResult make_check(std::string name, double statistic, double threshold, std::string detail = {}) {
    return {std::move(name), statistic, threshold, statistic <= threshold, std::move(detail)};
}

/// Brownian model: F from the scale functions against 1 - exp(xi x), and the stable
/// form against the literal (theta/Phi) W - Z + 1, on `points` points of [0, x_max].
inline CheckResult check_scale_closed_form(const LevyModel& brownian, double theta, std::size_t points = 1000,
                                           double x_max = 10.0, double tol = 1e-10) {
    const ScaleContext sc(brownian, theta);
    const double s2 = brownian.sigma() * brownian.sigma();
    const double xi = -(std::sqrt(brownian.mu() * brownian.mu() + 2.0 * s2 * theta) + brownian.mu()) / s2;
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = x_max * static_cast<double>(i) / static_cast<double>(points - 1);
        const double closed = -std::expm1(xi * x);
        worst = std::max({worst, std::abs(sc.F_from_scale(x) - closed), std::abs(sc.F(x) - closed)});
    }
    return make_check("scale_closed_form", worst, tol, "max |F - (1 - exp(xi x))| on [0, " + std::to_string(x_max) + "]");
}

/// Jump model: stable form of F against the literal scale-function route.
inline CheckResult check_scale_routes(const LevyModel& model, double theta, std::size_t points = 1000,
                                      double x_max = 10.0, double tol = 1e-10) {
    const ScaleContext sc(model, theta);
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = x_max * static_cast<double>(i) / static_cast<double>(points - 1);
        worst = std::max(worst, std::abs(sc.F_from_scale(x) - sc.F(x)));
    }
    return make_check("scale_routes", worst, tol, "max |F_stable - F_literal|");
}

/// KS distance of the simulated law of -inf_{[0, e_theta]} X from F, against 1.5 times
/// the 1% critical value.
inline CheckResult check_infimum_law(const GainContext& ctx, SimConfig cfg, SimReport* out = nullptr) {
    cfg.model = ctx.model();
    cfg.theta = ctx.theta();
    cfg.x0 = 0.0;
    const SimReport rep = summarize(simulate_rules(cfg, {}), &ctx);
    if (out) *out = rep;
    return make_check("infimum_law_ks", *rep.ks_bridge, 1.5 * rep.ks_critical,
                      "paths=" + std::to_string(rep.n_paths) + " node-only KS=" + std::to_string(*rep.ks_grid));
}

/// Sup distance between Brownian boundaries at n_coarse and n_fine on the coarse times.
inline CheckResult check_refinement(const GainContext& brownian_ctx, std::size_t n_coarse = 100,
                                    std::size_t n_fine = 400, double tol = 5e-2) {
    if (n_fine % n_coarse != 0) throw std::invalid_argument("n_fine must be a multiple of n_coarse");
    const BoundaryGrid coarse = solve_boundary_brownian(brownian_ctx, n_coarse);
    const BoundaryGrid fine = solve_boundary_brownian(brownian_ctx, n_fine);
    const std::size_t ratio = n_fine / n_coarse;
    double worst = 0.0;
    for (std::size_t k = 0; k < n_coarse; ++k) worst = std::max(worst, std::abs(coarse.b[k] - fine.b[k * ratio]));
    return make_check("grid_refinement", worst, tol,
                      "n=" + std::to_string(n_coarse) + " vs n=" + std::to_string(n_fine));
}

struct DegeneracyResult {
    CheckResult check;
    BoundaryGrid jump;
    BoundaryGrid brownian;
};

/// Jump boundary with a vanishing jump rate against the Brownian boundary with the same
/// drift and volatility. Statistic: max_k |b_jump - b_brownian| / (3 se_k); pass iff <= 1.
inline DegeneracyResult check_degeneracy(double mu, double sigma, double rho, double theta, std::size_t n,
                                         McKernelSettings kernels, SolverSettings solver, double lambda = 1e-6) {
    const GainContext jctx(LevyModel::jump_diffusion(mu, sigma, lambda, rho), theta);
    const GainContext bctx(LevyModel::brownian(mu, sigma), theta);
    const McKernelTable table(jctx, jctx.median() / static_cast<double>(n), n, kernels);
    solver.batch_errors = true;
    DegeneracyResult out{{}, solve_boundary_jump(jctx, table, n, solver), solve_boundary_brownian(bctx, n, solver)};
    double worst = 0.0;
    std::size_t at = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double band = 3.0 * out.jump.b_se[k];
        const double ratio = band > 0.0 ? std::abs(out.jump.b[k] - out.brownian.b[k]) / band
                                        : (out.jump.b[k] == out.brownian.b[k] ? 0.0 : INFINITY);
        if (ratio > worst) {
            worst = ratio;
            at = k;
        }
    }
    out.check = make_check("lambda_to_zero", worst, 1.0,
                           "worst k=" + std::to_string(at) + " jump b=" + std::to_string(out.jump.b[at]) +
                               " brownian b=" + std::to_string(out.brownian.b[at]) +
                               " se=" + std::to_string(out.jump.b_se[at]));
    return out;
}

struct LemmaIdentity {
    double loss = 0.0;       // E|g - tau_D|
    double loss_se = 0.0;
    double value = 0.0;      // V_h(0, x0) + E(g)
    double value_se = 0.0;
    double combined_se = 0.0;
    double paired_se = 0.0;  // SE of mean(|g - tau| - g) over common paths, for reference
    CheckResult check;
};

/// E|g - tau_D| against V_h(0, x0) + E(g) from the same simulation; the optimal rule is
/// rule 0 of the report. Statistic: |difference| / (3 combined SE).
inline LemmaIdentity check_lemma_identity(const SimReport& rep, double v0, double v0_se) {
    LemmaIdentity out;
    const RuleSummary& opt = rep.rules.at(0);
    out.loss = opt.mean_loss;
    out.loss_se = opt.se_loss;
    out.value = v0 + rep.mean_g;
    out.value_se = std::hypot(v0_se, rep.se_g);
    out.combined_se = std::hypot(out.loss_se, out.value_se);
    out.paired_se = std::hypot(opt.excess_se, v0_se);
    const double diff = out.loss - out.value;
    out.check = make_check("lemma_identity", std::abs(diff) / (3.0 * out.combined_se), 1.0,
                           "E|g-tau|=" + std::to_string(out.loss) + " V+E(g)=" + std::to_string(out.value) +
                               " diff=" + std::to_string(diff) + " se=" + std::to_string(out.combined_se));
    return out;
}

/// Every rule r > 0 must satisfy mean(loss_r - loss_0) >= -2 SE(paired difference).
/// Statistic: max_r of -diff / (2 SE).
inline CheckResult check_dominance(const SimReport& rep) {
    double worst = -INFINITY;
    std::string who;
    for (std::size_t r = 1; r < rep.rules.size(); ++r) {
        const RuleSummary& s = rep.rules[r];
        const double stat = s.diff_se > 0.0 ? -s.diff_mean / (2.0 * s.diff_se) : (s.diff_mean < 0.0 ? INFINITY : -INFINITY);
        if (stat > worst) {
            worst = stat;
            who = s.name;
        }
    }
    return make_check("optimal_dominance", worst, 1.0, "tightest rule: " + who);
}

}  // namespace lastpassage
