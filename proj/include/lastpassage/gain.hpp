#pragma once

#include "lastpassage/error.hpp"
#include "lastpassage/levy_model.hpp"
#include "lastpassage/roots.hpp"
#include "lastpassage/scale_function.hpp"

#include <cmath>
#include <numbers>

namespace lastpassage {

inline constexpr double kGainZeroTolerance = 1e-10;

/// Gain function of the stopping problem equivalent to predicting g_theta:
///   G(t, x) = 1 + 2 exp(-theta t) (F(x) - 1),
/// with F the law of -inf X at the exponential time.
class GainContext {
public:
    GainContext(const LevyModel& model, double theta)
        : scale_(model, theta), theta_(theta), median_(std::numbers::ln2 / theta) {}

    const ScaleContext& scale() const noexcept { return scale_; }
    const LevyModel& model() const noexcept { return scale_.model(); }
    double theta() const noexcept { return theta_; }

    /// m_theta = ln 2 / theta, the median of the exponential horizon.
    double median() const noexcept { return median_; }

    double G(double t, double x) const {
        return 1.0 + 2.0 * std::exp(-theta_ * t) * (scale_.F(x) - 1.0);
    }

    /// Zero level of G in x: inf{x : F(x) >= 1 - exp(theta t)/2} for t in [0, m_theta).
    double h(double t) const {
        if (!(t >= 0.0) || !(t < median_)) throw DomainError("h(t) is defined for t in [0, m_theta)");
        const double target = 1.0 - 0.5 * std::exp(theta_ * t);
        if (!model().has_jumps()) {
            // F(x) = 1 - exp(xi x)  =>  x = ln(2 exp(-theta t)) / -xi
            const double rate = -scale_.modes()[1].rate;
            return std::max(0.0, (std::numbers::ln2 - theta_ * t) / rate);
        }
        if (scale_.F(0.0) >= target) return 0.0;
        double hi = 1.0;
        while (scale_.F(hi) < target) {
            hi *= 2.0;
            if (hi > 1e12) throw NumericError("h(t): could not bracket the zero of G");
        }
        return bisect_monotone([&](double x) { return scale_.F(x); }, target, 0.0, hi, kGainZeroTolerance);
    }

    /// First time the stopping boundary reaches zero. Equal to m_theta for
    /// processes of infinite variation.
    double t_b() const {
        if (variation_class(model()) == VariationClass::FiniteVariation)
            throw UnsupportedModelError("t_b for finite-variation processes is not implemented");
        return median_;
    }

private:
    ScaleContext scale_;
    double theta_;
    double median_;
};

inline double gain_G(const GainContext& ctx, double t, double x) { return ctx.G(t, x); }

}  // namespace lastpassage
