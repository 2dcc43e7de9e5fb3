#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "insider/insider.hpp"

using namespace insider;

namespace {

double normal_pdf(double mean, double var, double x) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Composite Simpson with 2 * 10^5 cells.
double simpson(const std::function<double(double)>& f, double a, double b) {
    const int n = 200000;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

}  // namespace

TEST(VarianceRemaining, ConstantPsi) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_NEAR(variance_remaining(s, 0.36), 0.64, 1e-14);
    EXPECT_EQ(variance_remaining(s, 1.0), 0.0);
}

TEST(VarianceRemaining, LinearPsiMatchesQuadrature) {
    const auto s = InsiderSignal::linear(0.0, 1.0, 1.0, 0.8);
    const double oracle = simpson([](double u) { return u * u; }, 0.0, 1.0);
    EXPECT_NEAR(variance_remaining(s, 0.0), oracle, 1e-8);
    const auto w = InsiderSignal::linear(0.7, -0.4, 1.5, 1.0);
    for (double t : {0.0, 0.3, 0.99, 1.2}) {
        const double o = simpson([](double u) { return (0.7 - 0.4 * u) * (0.7 - 0.4 * u); }, t, 1.5);
        EXPECT_NEAR(variance_remaining(w, t), o, 1e-8) << "t = " << t;
    }
}

TEST(VarianceRemaining, OutOfRangeThrows) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_THROW(variance_remaining(s, -0.1), DomainError);
    EXPECT_THROW(variance_remaining(s, 1.1), DomainError);
}

TEST(InsiderSignal, RejectsBadHorizonsAndValues) {
    EXPECT_THROW(InsiderSignal::constant(1.0, 0.8, 0.8), ConfigError);
    EXPECT_THROW(InsiderSignal::table({1.0, std::nan("")}, 1.0, 0.5), ConfigError);
    EXPECT_FALSE(InsiderSignal::constant(0.0, 1.0, 0.5).informative());
    EXPECT_TRUE(InsiderSignal::constant(1.0, 1.0, 0.5).informative());
}

TEST(CondDelta, StandardNormalAtOrigin) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_NEAR(cond_delta(s, 0.0, 0.0, 0.0), 0.3989423, 1e-7);
}

TEST(CondDelta, Symmetric) {
    const auto s = InsiderSignal::linear(1.0, 0.5, 2.0, 1.0);
    for (double a : {-1.3, 0.0, 0.4})
        for (double b : {-0.2, 2.5}) EXPECT_DOUBLE_EQ(cond_delta(s, 0.4, a, b), cond_delta(s, 0.4, b, a));
}

TEST(CondDelta, MatchesNormalDensity) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_NEAR(cond_delta(s, 0.75, 0.3, 0.8), normal_pdf(0.3, 0.25, 0.8), 1e-12);
}

TEST(CondDelta, DegenerateVarianceThrows) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_THROW(cond_delta(s, 1.0, 0.0, 0.0), DomainError);
}

TEST(CondDelta, IntegratesToOne) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    const YGrid g = YGrid::uniform(-8.0, 8.0, 201);
    for (double t : {0.0, 0.4, 0.8}) {
        double mass = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) mass += g.weights[i] * cond_delta(s, t, 0.2, g.nodes[i]);
        EXPECT_NEAR(mass, 1.0, 1e-6);
    }
}

TEST(CondMalliavinDelta, VanishesAtSignalValue) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    EXPECT_EQ(cond_malliavin_delta(s, 0.3, 0.7, 0.7), 0.0);
}

TEST(CondMalliavinDelta, ComposedOracle) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.8);
    const double oracle = normal_pdf(0.0, 1.0, 1.0) * 1.0 * 1.0;
    EXPECT_NEAR(cond_malliavin_delta(s, 0.0, 0.0, 1.0), oracle, 1e-14);
    EXPECT_NEAR(cond_malliavin_delta(s, 0.0, 0.0, 1.0), 0.2419707, 1e-7);
}

TEST(CondMalliavinDelta, SignFollowsOffset) {
    const auto s = InsiderSignal::linear(1.0, 0.3, 1.0, 0.8);
    EXPECT_GT(cond_malliavin_delta(s, 0.2, 0.1, 0.5), 0.0);
    EXPECT_LT(cond_malliavin_delta(s, 0.2, 0.1, -0.5), 0.0);
}

TEST(CondMalliavinDelta, FiniteDifferenceInSignalValue) {
    // D_t K = psi(t) dK/dY for the Gaussian kernel.
    const auto s = InsiderSignal::linear(0.8, 0.6, 1.2, 1.0);
    for (double t : {0.0, 0.35, 0.9})
        for (double y : {-1.0, 0.25, 1.7}) {
            const double Y = 0.4, h = 1e-6;
            const double fd = (cond_delta(s, t, Y + h, y) - cond_delta(s, t, Y - h, y)) / (2.0 * h);
            EXPECT_NEAR(cond_malliavin_delta(s, t, Y, y), s.psi(t) * fd, 1e-8);
        }
}

TEST(PairCondDelta, IndependenceCheck) {
    // psi1 lives on [0, 0.5], psi2 on [0.5, 1]: no common loading.
    const auto a = InsiderSignal::table({1.0, 1.0, 0.0, 0.0, 0.0}, 1.0, 0.4);
    const auto b = InsiderSignal::table({0.0, 0.0, 0.0, 1.0, 1.0}, 1.0, 0.4);
    EXPECT_EQ(IndependentPair::max_conditional_correlation(a, b), 0.0);
    EXPECT_NO_THROW(IndependentPair(a, b));
    const auto c = InsiderSignal::constant(1.0, 1.0, 0.4);
    const auto d = InsiderSignal::linear(0.5, 0.5, 1.0, 0.4);
    EXPECT_GT(IndependentPair::max_conditional_correlation(c, d), 0.5);
    EXPECT_THROW(IndependentPair(c, d), ConfigError);
}

TEST(PairCondDelta, TwoDimensionalTrapezoidMass) {
    const auto a = InsiderSignal::table({1.0, 1.0, 0.0, 0.0, 0.0}, 1.0, 0.4);
    const auto b = InsiderSignal::table({0.0, 0.0, 0.0, 1.0, 1.0}, 1.0, 0.4);
    const IndependentPair pair(a, b);
    const YGrid g1 = YGrid::uniform(-8, 8, 161), g2 = YGrid::uniform(-6, 6, 121);
    for (double t : {0.0, 0.2, 0.3}) {
        double mass = 0.0;
        for (std::size_t i = 0; i < g1.size(); ++i)
            for (std::size_t j = 0; j < g2.size(); ++j)
                mass += g1.weights[i] * g2.weights[j] * pair_cond_delta(pair, t, 0.3, -0.2, g1.nodes[i], g2.nodes[j]);
        EXPECT_NEAR(mass, 1.0, 1e-6) << "t = " << t;
    }
    EXPECT_DOUBLE_EQ(pair_cond_delta(pair, 0.1, 0.3, -0.2, 0.5, 0.1),
                     cond_delta(a, 0.1, 0.3, 0.5) * cond_delta(b, 0.1, -0.2, 0.1));
}

TEST(PairCondDelta, ProductRuleForMalliavinWeight) {
    const auto a = InsiderSignal::table({1.0, 1.0, 0.0, 0.0, 0.0}, 1.0, 0.4);
    const auto b = InsiderSignal::table({0.0, 0.0, 0.0, 1.0, 1.0}, 1.0, 0.4);
    auto info = InformationStructure::independent(PlayerInformation::insider(a, YGrid::uniform(-3, 3, 5)),
                                                  PlayerInformation::insider(b, YGrid::uniform(-2, 2, 3)));
    const TimeGrid g(0.4, 4);
    const auto ex = Experiment::create(g, info, {}, 2, 9);
    PathKernels kern;
    ex.kernels(0, kern);
    for (std::size_t n = 0; n < ex.nodes(); ++n) {
        const Node& nd = info.nodes()[n];
        const double t = g.time(2);
        const double Y1 = ex.signals.signal(1, 0)[2], Y2 = ex.signals.signal(2, 0)[2];
        const double D = cond_malliavin_delta(a, t, Y1, nd.y1) * cond_delta(b, t, Y2, nd.y2) +
                         cond_delta(a, t, Y1, nd.y1) * cond_malliavin_delta(b, t, Y2, nd.y2);
        EXPECT_NEAR(kern.malliavin(2, n), D, 1e-15);
    }
}

TEST(InformationStructure, IndependentNodesCoverProductGrid) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.5);
    auto info = InformationStructure::independent(PlayerInformation::insider(s, YGrid::uniform(-4, 4, 9)),
                                                  PlayerInformation::uninformed());
    EXPECT_EQ(info.nodes().size(), 9u);
    double w = 0.0;
    for (const auto& n : info.nodes()) w += n.weight;
    EXPECT_NEAR(w, 8.0, 1e-12);
    EXPECT_TRUE(info.informed(1));
    EXPECT_FALSE(info.informed(2));
}

TEST(InformationStructure, SharedSignalUsesOneKernel) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.5);
    auto info = InformationStructure::shared(s, YGrid::uniform(-4, 4, 9));
    EXPECT_EQ(info.nodes().size(), 9u);
    const TimeGrid g(0.5, 5);
    const auto ex = Experiment::create(g, info, {}, 3, 1);
    PathKernels kern;
    ex.kernels(1, kern);
    const double Y = ex.signals.signal(1, 1)[2];
    EXPECT_NEAR(kern.kernel(2, 4), cond_delta(s, g.time(2), Y, 0.0), 1e-15);
    EXPECT_NEAR(kern.malliavin(2, 4), cond_malliavin_delta(s, g.time(2), Y, 0.0), 1e-15);
}
