#include "lastpassage/config.hpp"
#include "lastpassage/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace lastpassage;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

const char* kBrownian = R"([model]
kind = brownian
mu = 2
sigma = 1

[problem]
median = 10

[solver]
n = 40
)";

}  // namespace

TEST(Config, ParsesBrownian) {
    const RunConfig cfg = parse(kBrownian);
    EXPECT_EQ(cfg.model, LevyModel::brownian(2.0, 1.0));
    EXPECT_NEAR(cfg.theta, std::numbers::ln2 / 10.0, 1e-15);
    EXPECT_NEAR(cfg.median(), 10.0, 1e-12);
    EXPECT_EQ(cfg.n, 40u);
    EXPECT_FALSE(cfg.solver.batch_errors);
    EXPECT_EQ(cfg.sim.model, cfg.model);
    EXPECT_EQ(cfg.sim.theta, cfg.theta);
    EXPECT_EQ(cfg.out_dir, "out");
}

TEST(Config, ParsesJumpWithDefaults) {
    const RunConfig cfg = parse("[model]\nkind=jump_diffusion\nmu=3\nsigma=1\nlambda=1\nrho=1\n[problem]\ntheta=0.5\n");
    EXPECT_EQ(cfg.model, LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0));
    EXPECT_EQ(cfg.theta, 0.5);
    EXPECT_TRUE(cfg.solver.batch_errors);
    EXPECT_EQ(cfg.kernels.n_paths, 200000u);
}

TEST(Config, DemoConfigsLoad) {
    const RunConfig b = load_config(LASTPASSAGE_CONFIG_DIR "/brownian_demo.ini");
    EXPECT_EQ(b.n, 200u);
    EXPECT_EQ(b.sim.n_paths, 100000u);
    const RunConfig j = load_config(LASTPASSAGE_CONFIG_DIR "/jump_demo.ini");
    EXPECT_TRUE(j.model.has_jumps());
    EXPECT_EQ(j.kernels.n_paths, 200000u);
}

TEST(Config, RejectsUnknownKeysAndSections) {
    EXPECT_THROW(parse(std::string(kBrownian) + "bogus = 1\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kBrownian) + "[extra]\nx = 1\n"), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
    EXPECT_THROW(parse("[model]\nkind=levy\n[problem]\ntheta=1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\nsigma=0\n[problem]\ntheta=1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\nmu=abc\n[problem]\ntheta=1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\n[problem]\ntheta=1\nmedian=2\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\n[problem]\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\n[problem]\ntheta=-1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=jump_diffusion\nlambda=1\n[problem]\ntheta=1\n"), ConfigError);
    EXPECT_THROW(parse("[model]\nkind=brownian\nrho=1\n[problem]\ntheta=1\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kBrownian) + "[sim]\ndt=0\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kBrownian) + "[sim]\nn_paths=-3\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kBrownian) + "[value]\nx_min=1\nx_max=0\n"), ConfigError);
    EXPECT_THROW(parse(std::string(kBrownian) + "[value]\ngnuplot=maybe\n"), ConfigError);
    EXPECT_THROW(parse("[model\nkind=brownian\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, HashTracksContent) {
    const RunConfig a = parse(kBrownian);
    const RunConfig b = parse(kBrownian);
    const RunConfig c = parse(std::string(kBrownian) + "h0 = 0.1\n");
    EXPECT_EQ(a.hash, b.hash);
    EXPECT_NE(a.hash, c.hash);
    EXPECT_EQ(hex64(a.hash).size(), 16u);
}

TEST(Config, SeedOverrideAppliesToEveryStream) {
    RunConfig cfg = parse(kBrownian);
    override_seed(cfg, 42);
    EXPECT_EQ(cfg.kernels.seed, 42u);
    EXPECT_EQ(cfg.sim.seed, 42u);
}

TEST(Io, TwelveSignificantDigits) {
    EXPECT_EQ(num(0.1), "0.1");
    EXPECT_EQ(num(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(num(123456.7890123456), "123456.789012");
    EXPECT_EQ(num(-2.5e-15), "-2.5e-15");
    EXPECT_EQ(num(INFINITY), "inf");
}

TEST(Io, BoundaryRoundTripBrownian) {
    const RunConfig cfg = parse(kBrownian);
    const GainContext ctx(cfg.model, cfg.theta);
    const BoundaryGrid g = solve_boundary_brownian(ctx, cfg.n);
    std::istringstream in(boundary_csv(g, run_provenance(cfg, "solve")));
    const BoundaryGrid back = read_boundary(in, ctx, cfg.n);
    for (std::size_t k = 0; k < g.n; ++k) EXPECT_NEAR(back.b[k], g.b[k], 1e-11 * std::max(1.0, std::abs(g.b[k])));
}

TEST(Io, BoundaryRoundTripJump) {
    const GainContext ctx(LevyModel::jump_diffusion(3.0, 1.0, 1.0, 1.0), std::numbers::ln2 / 10.0);
    const McKernelTable table(ctx, ctx.median() / 10, 10, {20000, 4, 1});
    const BoundaryGrid g = solve_boundary_jump(ctx, table, 10);
    std::istringstream in(boundary_csv(g, {}));
    const BoundaryGrid back = read_boundary(in, ctx, 10);
    ASSERT_TRUE(back.has_jump_functional());
    for (std::size_t k = 0; k < g.n; ++k) {
        EXPECT_NEAR(back.b[k], g.b[k], 1e-11);
        EXPECT_NEAR(back.v[k], g.v[k], 1e-11);
        EXPECT_EQ(back.certified[k], g.certified[k]);
    }
}

TEST(Io, BoundaryReaderRejectsMismatch) {
    const RunConfig cfg = parse(kBrownian);
    const GainContext ctx(cfg.model, cfg.theta);
    const std::string text = boundary_csv(solve_boundary_brownian(ctx, cfg.n), {});
    {
        std::istringstream in(text);
        EXPECT_THROW(read_boundary(in, ctx, 50), std::invalid_argument);
    }
    {
        std::istringstream in(text);
        EXPECT_THROW(read_boundary(in, GainContext(LevyModel::brownian(1.0, 1.0), cfg.theta), cfg.n),
                     std::invalid_argument);
    }
    {
        std::istringstream in(text);
        EXPECT_THROW(read_boundary(in, GainContext(cfg.model, 2.0 * cfg.theta), cfg.n), std::invalid_argument);
    }
    {
        std::istringstream in("x,y\n1,2\n");
        EXPECT_THROW(read_boundary(in, ctx, cfg.n), std::invalid_argument);
    }
}

TEST(Io, ValueCsvLongFormat) {
    const RunConfig cfg = parse(kBrownian);
    const GainContext ctx(cfg.model, cfg.theta);
    const BoundaryGrid g = solve_boundary_brownian(ctx, cfg.n);
    const ValueGrid vg = value_brownian(ctx, g, {{-1.0, 0.0}, {0, 3}});
    const std::string csv = value_csv(vg, {{"k", "v"}});
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# k=v");
    std::getline(in, line);
    EXPECT_EQ(line, "t,x,value");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 4);
    const std::string plot = value_gnuplot(vg, {});
    EXPECT_NE(plot.find("\n\n# t="), std::string::npos);
}

TEST(Io, ReportCsv) {
    const std::string csv = report_csv({{"a", 1.0, 0.5, "n"}}, {});
    EXPECT_EQ(csv, "quantity,value,std_error,note\na,1,0.5,n\n");
}
