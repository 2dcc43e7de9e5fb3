#include <cmath>

#include <gtest/gtest.h>

#include "insider/insider.hpp"

using namespace insider;

namespace {

Experiment portfolio_experiment(double T, std::size_t steps, std::size_t ny, std::size_t n, std::uint64_t seed) {
    const auto s = InsiderSignal::constant(1.0, 1.0, T);
    auto info = InformationStructure::independent(PlayerInformation::insider(s, YGrid::uniform(-8, 8, ny)), {});
    return Experiment::create(TimeGrid(T, steps), info, {}, n, seed);
}

}  // namespace

TEST(ConsumptionEquilibrium, TrivialSignalClosedForm) {
    const ConsumptionModel m({0, 0}, {0, 0}, {0, 0}, 1.0, 1.0);
    const auto ex = Experiment::create(TimeGrid(1.0, 50), {}, {}, 100, 1);
    const auto sol = consumption_equilibrium(m, ex);
    for (std::size_t k = 0; k < 50; ++k) {
        const double t = ex.grid.time(k);
        EXPECT_NEAR(sol.u1_mean[k], 1.0 / (2.0 - t), 1e-6);
        EXPECT_NEAR(sol.u2_mean[k], -(2.0 - t), 1e-6);
    }
    EXPECT_EQ(sol.u1.adaptedness(), Adaptedness::uninformed);
    EXPECT_EQ(sol.u2.adaptedness(), Adaptedness::uninformed);
}

TEST(ConsumptionEquilibrium, LargerThetaConsumesLess) {
    const auto ex = Experiment::create(TimeGrid(1.0, 10), {}, {}, 50, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (double theta : {0.5, 1.0, 2.0, 4.0}) {
        const ConsumptionModel m({0, 0}, {0, 0}, {0, 0}, 1.0, theta);
        const double c0 = consumption_equilibrium(m, ex).u1_mean[0];
        EXPECT_LT(c0, prev);
        prev = c0;
    }
}

TEST(ConsumptionEquilibrium, InsiderConsumptionIndependentOfSignal) {
    const auto s = InsiderSignal::linear(1.0, -0.25, 1.25, 1.0);
    auto info = InformationStructure::shared(s, YGrid::uniform(-6, 6, 25));
    const ConsumptionModel m({0.05, 0.01}, {0.2, 0}, {0.5, 0.05}, 1.0, 1.0, JumpMeasure({{-0.2, 1.5}}));
    const auto ex = Experiment::create(TimeGrid(1.0, 20), info, m.jumps(), 500, 3);
    const auto sol = consumption_equilibrium(m, ex);
    for (std::size_t k = 0; k < 20; ++k)
        for (std::size_t i = 0; i < 25; ++i) {
            const double tau = 2.0 - ex.grid.time(k);
            EXPECT_NEAR(sol.u1_mean[k * 25 + i], 1.0 / tau, 1e-9);
            EXPECT_NEAR(sol.u2_mean[k * 25 + i], -tau, 1e-9);
        }
    EXPECT_EQ(sol.u1.adaptedness(), Adaptedness::insider);
}

TEST(ConsumptionEquilibrium, LsmcPathWithinTwoPercent) {
    const ConsumptionModel m({0, 0}, {0, 0}, {0, 0}, 1.0, 1.0);
    const auto ex = Experiment::create(TimeGrid(1.0, 50), {}, {}, 10000, 2);
    const auto sol = consumption_equilibrium(m, ex, AdjointMethod::lsmc, {2, true});
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < 50; ++k) {
        const double want = 1.0 / (2.0 - ex.grid.time(k));
        num += std::pow(sol.u1_mean[k] - want, 2);
        den += want * want;
    }
    EXPECT_LT(std::sqrt(num / den), 0.02);
}

TEST(PortfolioEquilibrium, BrownianSignalClosedForm) {
    const double T = 0.8, T0 = 1.0;
    const PortfolioModel m({1, 0}, {1, 0}, 1.0, 1.0);
    const auto ex = portfolio_experiment(T, 40, 201, 200, 4);
    const auto sol = portfolio_equilibrium(m, ex);
    for (double mu : sol.u2_mean) EXPECT_NEAR(mu, -0.5, 1e-9);
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); p += 7) {
        ex.kernels(p, kern);
        const double BT0 = ex.signals.terminal(1, p);
        for (std::size_t k = 0; k < 40; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            EXPECT_NEAR(sol.u2.at(ps, 0.0), -0.5, 1e-9);
            EXPECT_NEAR(sol.u1.at(ps, BT0), 0.5 + (BT0 - ps.B) / (T0 - ps.t), 1e-9);
        }
    }
}

TEST(PortfolioEquilibrium, ZeroDriftGivesZeroMu) {
    const PortfolioModel m({0, 0}, {1.3, 0}, 1.0, 1.0);
    const auto ex = portfolio_experiment(0.8, 10, 101, 50, 5);
    const PortfolioPolicy pol(m, ex.info, ex.grid);
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); ++p) {
        ex.kernels(p, kern);
        for (std::size_t k = 0; k < 10; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            const double mu = pol.mu(ps).mu;
            EXPECT_NEAR(mu, 0.0, 1e-9);
            EXPECT_NEAR(pol.pi(ps, mu, 0.7), pol.malliavin_ratio(ps, 0.7) / 1.3, 1e-12);
        }
    }
}

TEST(PortfolioEquilibrium, MalliavinRatioForBrownianSignal) {
    const PortfolioModel m({1, 0}, {1, 0}, 1.0, 1.0);
    const auto ex = portfolio_experiment(0.8, 8, 41, 20, 6);
    const PortfolioPolicy pol(m, ex.info, ex.grid);
    const auto& sig = *ex.info.player(1).signal;
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); ++p) {
        ex.kernels(p, kern);
        for (std::size_t k = 0; k < 8; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            for (double y : {-2.0, 0.1, 1.5}) {
                const double ratio = cond_malliavin_delta(sig, ps.t, ps.Y1, y) / cond_delta(sig, ps.t, ps.Y1, y);
                EXPECT_NEAR(pol.malliavin_ratio(ps, y), (y - ps.Y1) / (1.0 - ps.t), 1e-12);
                EXPECT_NEAR(ratio, (y - ps.Y1) / (1.0 - ps.t), 1e-12);
            }
        }
    }
}

TEST(PortfolioEquilibrium, LinearAndFixedPointAgree) {
    const PortfolioModel m({0.7, 0.2}, {1.1, 0.05}, 1.0, 1.5);
    const auto s = InsiderSignal::linear(1.0, 0.5, 1.0, 0.8);
    auto info = InformationStructure::independent(PlayerInformation::insider(s, YGrid::uniform(-4, 4, 81)), {});
    const auto ex = Experiment::create(TimeGrid(0.8, 16), info, {}, 30, 7);
    PortfolioOptions lin, fp;
    fp.solve = PortfolioSolve::fixed_point;
    const PortfolioPolicy a(m, ex.info, ex.grid, lin), b(m, ex.info, ex.grid, fp);
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); ++p) {
        ex.kernels(p, kern);
        for (std::size_t k = 0; k < 16; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            const auto sb = b.mu(ps);
            EXPECT_NEAR(a.mu(ps).mu, sb.mu, 1e-9);
            EXPECT_LE(sb.iterations, fp.max_iterations);
        }
    }
}

TEST(PortfolioEquilibrium, TheoremFormIsThetaInvariant) {
    const auto ex = portfolio_experiment(0.8, 10, 81, 20, 8);
    PortfolioOptions opt;
    opt.form = MuForm::theorem;
    const PortfolioModel a({0.6, 0}, {0.9, 0}, 1.0, 1.0), b({0.6, 0}, {0.9, 0}, 1.0, 3.7);
    const PortfolioPolicy pa(a, ex.info, ex.grid, opt), pb(b, ex.info, ex.grid, opt);
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); ++p) {
        ex.kernels(p, kern);
        for (std::size_t k = 0; k < 10; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            EXPECT_DOUBLE_EQ(pa.mu(ps).mu, pb.mu(ps).mu);
        }
    }
}

TEST(PortfolioEquilibrium, FixedPointNonConvergenceIsReported) {
    const PortfolioModel m({1, 0}, {1, 0}, 1.0, 1.0);
    const auto ex = portfolio_experiment(0.8, 4, 41, 5, 9);
    PortfolioOptions opt;
    opt.solve = PortfolioSolve::fixed_point;
    opt.damping = 0.1;
    opt.max_iterations = 3;
    EXPECT_THROW(portfolio_equilibrium(m, ex, opt), EquilibriumError);
}

TEST(PortfolioEquilibrium, RejectsSmallVolatilityAndInformedEnvironment) {
    const auto ex = portfolio_experiment(0.8, 4, 41, 5, 9);
    EXPECT_THROW(PortfolioPolicy(PortfolioModel({1, 0}, {0.0, 1e-8}, 1.0, 1.0), ex.info, ex.grid), ConfigError);
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    auto both = InformationStructure::independent(PlayerInformation::insider(s, YGrid::uniform(-8, 8, 9)),
                                                  PlayerInformation::insider(InsiderSignal::constant(0.0, 1.0, 0.8),
                                                                             YGrid::uniform(-1, 1, 3)));
    EXPECT_THROW(PortfolioPolicy(PortfolioModel({1, 0}, {1, 0}, 1.0, 1.0), both, ex.grid), ConfigError);
}

TEST(PortfolioEquilibrium, AdaptednessTags) {
    const auto ex = portfolio_experiment(0.8, 4, 41, 5, 9);
    const auto sol = portfolio_equilibrium(PortfolioModel({1, 0}, {1, 0}, 1.0, 1.0), ex);
    EXPECT_EQ(sol.u1.adaptedness(), Adaptedness::insider);
    EXPECT_EQ(sol.u2.adaptedness(), Adaptedness::uninformed);
}
