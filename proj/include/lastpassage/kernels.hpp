#pragma once

#include "lastpassage/error.hpp"
#include "lastpassage/gain.hpp"
#include "lastpassage/levy_model.hpp"
#include "lastpassage/normal.hpp"
#include "lastpassage/parallel.hpp"
#include "lastpassage/rng.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace lastpassage {

/// Arguments of the one-step expectation kernels: current time t, current
/// level x, lookahead s and the boundary level b in force at t + s.
struct KernelQuery {
    double t = 0.0;
    double x = 0.0;
    double s = 0.0;
    double b = 0.0;
};

/// K(t, x, s, b) = E[G(t + s, X_s + x) 1{X_s + x <= b}] for Brownian motion with drift,
/// in closed form. The exp(-rate y) part of G is absorbed by an exponential change of
/// measure that shifts the Gaussian mean from mu s to -s sqrt(mu^2 + 2 sigma^2 theta).
inline double K_brownian(const GainContext& ctx, const KernelQuery& q) {
    const LevyModel& m = ctx.model();
    if (m.has_jumps()) throw UnsupportedModelError("K_brownian requires a Brownian-with-drift model");
    if (!(q.s > 0.0)) throw DomainError("kernel lookahead s must be positive");

    const double theta = ctx.theta();
    const double sd = m.sigma() * std::sqrt(q.s);
    const double root = std::sqrt(m.mu() * m.mu() + 2.0 * m.sigma() * m.sigma() * theta);
    const double rate = (root + m.mu()) / (m.sigma() * m.sigma());
    const double mean = m.mu() * q.s;

    const double below_b = normal_cdf((q.b - q.x - mean) / sd);
    const double below_0 = normal_cdf((std::min(q.b, 0.0) - q.x - mean) / sd);
    double value = below_b - 2.0 * std::exp(-theta * (q.s + q.t)) * below_0;

    if (q.b > 0.0) {
        const double tilted_mean = -q.s * root;
        const double p = normal_interval((-q.x - tilted_mean) / sd, (q.b - q.x - tilted_mean) / sd);
        if (p > 0.0) value -= 2.0 * std::exp(-theta * q.t - rate * q.x + std::log(p));
    }
    return value;
}

/// One exact draw of X_s: sigma sqrt(s) Z + mu s - (sum of Poisson(lambda s) many Exp(rho) jumps).
template <typename URBG>
double simulate_increment(const LevyModel& model, double s, URBG& gen) {
    if (!(s > 0.0)) throw DomainError("simulate_increment requires s > 0");
    boost::random::normal_distribution<double> normal;
    double x = model.mu() * s + model.sigma() * std::sqrt(s) * normal(gen);
    if (model.has_jumps()) {
        boost::random::poisson_distribution<long> count(model.lambda() * s);
        const long k = count(gen);
        if (k > 0) {
            boost::random::gamma_distribution<double> total(static_cast<double>(k), 1.0 / model.rho());
            x -= total(gen);
        }
    }
    return x;
}

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct McKernelSettings {
    std::size_t n_paths = 200000;
    std::size_t batches = 20;
    std::uint64_t seed = 20240601;
};

/// Monte Carlo kernels K1, K2 for the jump-diffusion model on a uniform lookahead grid
/// s_i = i * step, i = 1..lookaheads.
///
/// Samples of X_{s_i} come from cumulative exact increments along each simulated path, so
/// every (x, b) query at a lookahead reuses the same draws. Each (lookahead, batch) slice is
/// kept sorted together with normalised suffix sums of exp(rate * Y) for every exponential
/// rate in G and for -rho; a query is then two binary searches plus a handful of exps.
///
/// Paths are split into equal batches on independent RNG streams. Full-sample values are the
/// batch average and standard errors are batch-means errors.
class McKernelTable {
public:
    McKernelTable(const GainContext& ctx, double step, std::size_t lookaheads, McKernelSettings settings = {})
        : model_(ctx.model()), theta_(ctx.theta()), step_(step), lookaheads_(lookaheads), settings_(settings) {
        if (!model_.has_jumps()) throw UnsupportedModelError("McKernelTable requires the jump-diffusion model");
        if (!(step > 0.0)) throw DomainError("lookahead step must be positive");
        if (lookaheads == 0) throw std::invalid_argument("need at least one lookahead");
        if (settings.batches < 2) throw std::invalid_argument("need at least two batches");
        if (settings.n_paths < 10000) throw std::invalid_argument("n_paths must be at least 1e4");
        per_batch_ = settings.n_paths / settings.batches;

        rates_.clear();
        for (const ExpTerm& term : ctx.scale().tail_terms()) {
            rates_.push_back(term.rate);
            tail_coeffs_.push_back(term.coeff);
        }
        rho_slot_ = rates_.size();
        rates_.push_back(-model_.rho());

        slices_.resize(lookaheads_ * settings_.batches);
        for (Slice& s : slices_) s.y.resize(per_batch_);

        parallel_for(settings_.batches, [&](std::size_t batch) { simulate_batch(batch); });
        parallel_for(slices_.size(), [&](std::size_t i) { finish_slice(slices_[i]); });
    }

    const LevyModel& model() const noexcept { return model_; }
    double theta() const noexcept { return theta_; }
    double step() const noexcept { return step_; }
    std::size_t lookaheads() const noexcept { return lookaheads_; }
    std::size_t batches() const noexcept { return settings_.batches; }
    std::size_t paths_per_batch() const noexcept { return per_batch_; }
    std::size_t n_paths() const noexcept { return per_batch_ * settings_.batches; }
    std::uint64_t seed() const noexcept { return settings_.seed; }
    double rho() const noexcept { return model_.rho(); }

    /// Index i with s == i * step; throws if s is not on the lookahead grid.
    std::size_t lookahead_index(double s) const {
        const double r = s / step_;
        const auto i = static_cast<std::size_t>(std::llround(r));
        if (i < 1 || i > lookaheads_ || std::abs(r - static_cast<double>(i)) > 1e-9 * std::max(1.0, r))
            throw DomainError("lookahead s is not on the table grid");
        return i;
    }

    /// Sorted samples of X_{s_i} in one batch.
    std::span<const double> samples(std::size_t lookahead, std::size_t batch) const {
        return slice(lookahead, batch).y;
    }

    /// Batch estimate of E[G(t + s_i, X + x) 1{X + x < b}].
    double k1_batch(std::size_t batch, std::size_t lookahead, double t, double x, double b) const {
        const Slice& sl = slice(lookahead, batch);
        const std::vector<double>& y = sl.y;
        const std::size_t n = y.size();
        const double decay = 2.0 * std::exp(-theta_ * (t + static_cast<double>(lookahead) * step_));

        const std::size_t below_b = static_cast<std::size_t>(std::lower_bound(y.begin(), y.end(), b - x) - y.begin());
        const std::size_t below_0 = static_cast<std::size_t>(std::lower_bound(y.begin(), y.end(), -x) - y.begin());
        double acc = static_cast<double>(below_b) - decay * static_cast<double>(std::min(below_0, below_b));

        if (below_b > below_0) {
            // samples with 0 <= X + x < b contribute decay * sum_r c_r exp(rate_r (Y + x))
            const std::size_t lo = below_0;
            const std::size_t hi = below_b;
            double tail = 0.0;
            for (std::size_t r = 0; r < tail_coeffs_.size(); ++r) {
                double range = std::exp(rates_[r] * (y[lo] + x)) * sl.suffix[r][lo];
                if (hi < n) range -= std::exp(rates_[r] * (y[hi] + x)) * sl.suffix[r][hi];
                tail += tail_coeffs_[r] * range;
            }
            acc += decay * tail;
        }
        return acc / static_cast<double>(n);
    }

    /// Batch estimate of E[exp(-rho (X + x - b)) 1{X + x > b}].
    double k2_batch(std::size_t batch, std::size_t lookahead, double x, double b) const {
        const Slice& sl = slice(lookahead, batch);
        const std::vector<double>& y = sl.y;
        const std::size_t n = y.size();
        const std::size_t lo = static_cast<std::size_t>(std::upper_bound(y.begin(), y.end(), b - x) - y.begin());
        if (lo == n) return 0.0;
        const double v = std::exp(-model_.rho() * (y[lo] + x - b)) * sl.suffix[rho_slot_][lo];
        return v / static_cast<double>(n);
    }

    double k1(std::size_t lookahead, double t, double x, double b) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < batches(); ++j) acc += k1_batch(j, lookahead, t, x, b);
        return acc / static_cast<double>(batches());
    }

    double k2(std::size_t lookahead, double x, double b) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < batches(); ++j) acc += k2_batch(j, lookahead, x, b);
        return acc / static_cast<double>(batches());
    }

    McEstimate k1_estimate(std::size_t lookahead, double t, double x, double b) const {
        return batch_estimate([&](std::size_t j) { return k1_batch(j, lookahead, t, x, b); });
    }

    McEstimate k2_estimate(std::size_t lookahead, double x, double b) const {
        return batch_estimate([&](std::size_t j) { return k2_batch(j, lookahead, x, b); });
    }

    template <typename PerBatch>
    McEstimate batch_estimate(PerBatch&& per_batch) const {
        const std::size_t nb = batches();
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t j = 0; j < nb; ++j) {
            const double v = per_batch(j);
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / static_cast<double>(nb);
        const double var = std::max(0.0, (sum_sq - nb * mean * mean) / static_cast<double>(nb - 1));
        return {mean, std::sqrt(var / static_cast<double>(nb))};
    }

    void check_context(const GainContext& ctx) const {
        if (!(ctx.model() == model_) || ctx.theta() != theta_)
            throw std::invalid_argument("kernel table was built for a different model or theta");
    }

private:
    struct Slice {
        std::vector<double> y;
        // suffix[r][j] = sum_{k >= j} exp(rate_r (y[k] - y[j])), all entries in [1, n]
        std::vector<std::vector<float>> suffix;
    };

    const Slice& slice(std::size_t lookahead, std::size_t batch) const {
        if (lookahead < 1 || lookahead > lookaheads_) throw DomainError("lookahead index out of range");
        return slices_[(lookahead - 1) * settings_.batches + batch];
    }

    void simulate_batch(std::size_t batch) {
        Engine gen = make_engine(settings_.seed, batch);
        boost::random::normal_distribution<double> normal;
        boost::random::poisson_distribution<long> count(model_.lambda() * step_);
        const double drift = model_.mu() * step_;
        const double vol = model_.sigma() * std::sqrt(step_);
        const double jump_scale = 1.0 / model_.rho();
        for (std::size_t p = 0; p < per_batch_; ++p) {
            double x = 0.0;
            for (std::size_t i = 0; i < lookaheads_; ++i) {
                x += drift + vol * normal(gen);
                const long k = count(gen);
                if (k > 0) x -= boost::random::gamma_distribution<double>(static_cast<double>(k), jump_scale)(gen);
                slices_[i * settings_.batches + batch].y[p] = x;
            }
        }
    }

    void finish_slice(Slice& s) const {
        std::sort(s.y.begin(), s.y.end());
        const std::size_t n = s.y.size();
        s.suffix.assign(rates_.size(), std::vector<float>(n));
        for (std::size_t r = 0; r < rates_.size(); ++r) {
            double acc = 1.0;
            s.suffix[r][n - 1] = 1.0f;
            for (std::size_t j = n - 1; j-- > 0;) {
                acc = 1.0 + std::exp(rates_[r] * (s.y[j + 1] - s.y[j])) * acc;
                s.suffix[r][j] = static_cast<float>(acc);
            }
        }
    }

    LevyModel model_;
    double theta_;
    double step_;
    std::size_t lookaheads_;
    McKernelSettings settings_;
    std::size_t per_batch_ = 0;
    std::vector<double> rates_;
    std::vector<double> tail_coeffs_;
    std::size_t rho_slot_ = 0;
    std::vector<Slice> slices_;
};

/// Monte Carlo K1(t, x, s, b) = E[G(t + s, X_s + x) 1{X_s + x < b}].
inline McEstimate K1_mc(const McKernelTable& table, const GainContext& ctx, const KernelQuery& q) {
    table.check_context(ctx);
    return table.k1_estimate(table.lookahead_index(q.s), q.t, q.x, q.b);
}

/// Monte Carlo K2(t, x, s, b) = E[exp(-rho (X_s + x - b)) 1{X_s + x > b}].
inline McEstimate K2_mc(const McKernelTable& table, const GainContext& ctx, const KernelQuery& q) {
    table.check_context(ctx);
    return table.k2_estimate(table.lookahead_index(q.s), q.x, q.b);
}

}  // namespace lastpassage
