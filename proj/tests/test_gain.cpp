#include "lastpassage/error.hpp"
#include "lastpassage/gain.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lastpassage;

namespace {

const double kTheta = std::numbers::ln2 / 10.0;

}  // namespace

TEST(Gain, MatchesDefinition) {
    const GainContext ctx(LevyModel::brownian(2.0, 1.0), kTheta);
    for (double t : {0.0, 1.0, 7.5}) {
        for (double x : {-1.0, 0.0, 0.3, 2.0}) {
            EXPECT_DOUBLE_EQ(ctx.G(t, x), 1.0 + 2.0 * std::exp(-kTheta * t) * (ctx.scale().F(x) - 1.0));
        }
    }
    EXPECT_NEAR(ctx.G(0.0, 1.0), 0.9646060716, 1e-10);
}

TEST(Gain, BelowZeroDependsOnTimeOnly) {
    const GainContext ctx(LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0), kTheta);
    EXPECT_DOUBLE_EQ(ctx.G(0.0, -3.0), -1.0);
    EXPECT_DOUBLE_EQ(ctx.G(2.0, -0.1), 1.0 - 2.0 * std::exp(-2.0 * kTheta));
}

TEST(Gain, BoundedAndNonnegativeAtTheMedian) {
    for (const LevyModel& m : {LevyModel::brownian(2.0, 1.0), LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0)}) {
        const GainContext ctx(m, kTheta);
        for (double t = 0.0; t < 2.0 * ctx.median(); t += 0.7) {
            for (double x = -2.0; x < 5.0; x += 0.1) {
                EXPECT_GE(ctx.G(t, x), -1.0);
                EXPECT_LE(ctx.G(t, x), 1.0);
            }
        }
        for (double x = 0.0; x < 5.0; x += 0.1) EXPECT_NEAR(ctx.G(ctx.median(), x), ctx.scale().F(x), 1e-14);
    }
}

TEST(Gain, HIsTheZeroOfG) {
    for (const LevyModel& m : {LevyModel::brownian(2.0, 1.0), LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0),
                               LevyModel::jump_diffusion(-1.0, 0.5, 3.0, 2.0)}) {
        const GainContext ctx(m, kTheta);
        double prev = INFINITY;
        for (int i = 0; i < 37; ++i) {
            const double t = ctx.median() * i / 37.0;
            const double h = ctx.h(t);
            const auto f = [&](long double x) { return static_cast<long double>(ctx.G(t, static_cast<double>(x))); };
            const double ref = static_cast<double>(oracle::bisect(f, 0.0L, 100.0L));
            EXPECT_NEAR(h, ref, 1e-9) << m.describe() << " t=" << t;
            EXPECT_LE(h, prev);
            prev = h;
        }
    }
}

TEST(Gain, HTendsToZeroAtTheMedian) {
    const GainContext ctx(LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0), kTheta);
    EXPECT_LT(ctx.h(ctx.median() * (1.0 - 1e-9)), 1e-6);
    EXPECT_GT(ctx.h(0.0), 0.0);
}

TEST(Gain, BrownianHClosedForm) {
    const GainContext ctx(LevyModel::brownian(2.0, 1.0), kTheta);
    const double rate = std::sqrt(4.0 + 2.0 * kTheta) + 2.0;
    for (double t : {0.0, 3.0, 9.9}) EXPECT_NEAR(ctx.h(t), (std::numbers::ln2 - kTheta * t) / rate, 1e-15);
}

TEST(Gain, HOutsideDomain) {
    const GainContext ctx(LevyModel::brownian(2.0, 1.0), kTheta);
    EXPECT_THROW(ctx.h(-0.1), DomainError);
    EXPECT_THROW(ctx.h(ctx.median()), DomainError);
    EXPECT_THROW(ctx.h(ctx.median() + 1.0), DomainError);
}

TEST(Gain, BoundaryHitsZeroAtTheMedian) {
    const GainContext ctx(LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0), kTheta);
    EXPECT_DOUBLE_EQ(ctx.t_b(), ctx.median());
    EXPECT_NEAR(ctx.median(), 10.0, 1e-12);
}
