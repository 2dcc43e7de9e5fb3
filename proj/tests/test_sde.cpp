#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "insider/insider.hpp"

using namespace insider;

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
    const auto e = summarize(v);
    return {e.mean, e.std_error};
}

FunctionalModel gbm(double a, double b, Stepping scheme) {
    FunctionalModel m;
    m.b = [a](const StatePoint& s) { return a * s.x; };
    m.sigma = [b](const StatePoint& s) { return b * s.x; };
    m.scheme = scheme;
    m.positive = scheme == Stepping::geometric;
    return m;
}

std::vector<double> terminal_values(const FunctionalModel& m, const NoiseBundle& nz) {
    const std::size_t N = nz.steps();
    std::vector<double> out(nz.n_paths);
    for (std::size_t p = 0; p < nz.n_paths; ++p) {
        StatePoint s{0.0, m.initial_state(0.0, 0.0), 0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < N; ++k) {
            s.t = nz.grid.time(k);
            s.x = advance(m, s, nz.grid.dt(), nz.increments(p)[k], nz.counts(p, k));
        }
        out[p] = s.x;
    }
    return out;
}

}  // namespace

TEST(Seeds, DerivedStreamsAreDistinctAndStable) {
    std::set<std::uint64_t> seen;
    for (auto st : {Stream::noise, Stream::directions, Stream::evaluation_points})
        for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(42, st, i));
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_EQ(derive_seed(42, Stream::noise, 7), derive_seed(42, Stream::noise, 7));
    EXPECT_NE(derive_seed(42, Stream::noise, 7), derive_seed(43, Stream::noise, 7));
}

TEST(TimeGrid, RejectsInvalid) {
    EXPECT_THROW(TimeGrid(0.0, 10), ConfigError);
    EXPECT_THROW(TimeGrid(1.0, 0), ConfigError);
    const TimeGrid g(0.8, 3);
    EXPECT_EQ(g.time(3), 0.8);
}

TEST(SampleNoise, IncrementMomentsAndDeterminism) {
    const TimeGrid g(1.0, 20);
    const JumpMeasure jm({{1.0, 2.0}});
    const auto a = sample_noise(g, 10000, jm, 17);
    const auto b = sample_noise(g, 10000, jm, 17);
    EXPECT_EQ(a.dB, b.dB);
    EXPECT_EQ(a.dN, b.dN);
    std::vector<double> first(a.n_paths), sq(a.n_paths), counts(a.n_paths);
    for (std::size_t p = 0; p < a.n_paths; ++p) {
        first[p] = a.increments(p)[5];
        sq[p] = first[p] * first[p];
        counts[p] = a.counts(p, 5)[0];
    }
    const auto m = moments(first);
    EXPECT_LE(std::abs(m.mean), 5.0 * m.se);
    const auto v = moments(sq);
    EXPECT_LE(std::abs(v.mean - g.dt()), 5.0 * v.se);
    const auto c = moments(counts);
    EXPECT_LE(std::abs(c.mean - 2.0 * g.dt()), 5.0 * c.se);
}

TEST(SampleNoise, PathsIndependentOfPathCount) {
    const TimeGrid g(1.0, 8);
    const auto a = sample_noise(g, 5, {}, 3);
    const auto b = sample_noise(g, 50, {}, 3);
    for (std::size_t i = 0; i < a.dB.size(); ++i) EXPECT_EQ(a.dB[i], b.dB[i]);
}

TEST(SimulateSignal, TerminalVarianceMatches) {
    const auto s = InsiderSignal::linear(1.0, -0.5, 1.3, 1.0);
    const TimeGrid g(1.0, 50);
    const auto nz = sample_noise(g, 20000, {}, 5, s.horizon_T0());
    const auto sp = simulate_signal(s, nz);
    std::vector<double> sq(nz.n_paths);
    for (std::size_t p = 0; p < nz.n_paths; ++p) sq[p] = sp.terminal(1, p) * sp.terminal(1, p);
    const auto m = moments(sq);
    EXPECT_LE(std::abs(m.mean - s.variance_remaining(0.0)), 5.0 * m.se);
}

TEST(SimulateSignal, RequiresTail) {
    const auto s = InsiderSignal::constant(1.0, 1.0, 0.5);
    const auto nz = sample_noise(TimeGrid(0.5, 5), 10, {}, 1);
    EXPECT_THROW(simulate_signal(s, nz), ConfigError);
}

TEST(Advance, GeometricMeanMatchesExponential) {
    const TimeGrid g(1.0, 200);
    const auto nz = sample_noise(g, 20000, {}, 11);
    const auto x = terminal_values(gbm(0.3, 0.4, Stepping::geometric), nz);
    const auto m = moments(x);
    EXPECT_LE(std::abs(m.mean - std::exp(0.3)), 3.0 * m.se);
}

TEST(Advance, CompensatedJumpsKeepEulerMean) {
    FunctionalModel m;
    m.b = [](const StatePoint& s) { return 0.2 * s.x; };
    m.gamma = [](const StatePoint& s, std::size_t) { return 0.3 * s.x; };
    m.measure = JumpMeasure({{1.0, 1.5}});
    const TimeGrid g(1.0, 50);
    const auto nz = sample_noise(g, 20000, m.measure, 12);
    const auto x = terminal_values(m, nz);
    const auto e = moments(x);
    EXPECT_LE(std::abs(e.mean - std::pow(1.0 + 0.2 * g.dt(), 50)), 5.0 * e.se);
}

TEST(Advance, EulerWeakErrorHalvesWithStep) {
    // E[X(T)^2] under Euler against the exact scheme on the same increments.
    const double a = 0.5, b = 0.4;
    const auto euler = gbm(a, b, Stepping::euler);
    const auto exact = gbm(a, b, Stepping::geometric);
    double ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double err[2];
        for (int level = 0; level < 2; ++level) {
            const auto nz = sample_noise(TimeGrid(1.0, 10u << level), 20000, {}, seed);
            const auto xe = terminal_values(euler, nz), xx = terminal_values(exact, nz);
            std::vector<double> d(xe.size());
            for (std::size_t p = 0; p < d.size(); ++p) d[p] = xe[p] * xe[p] - xx[p] * xx[p];
            err[level] = moments(d).mean;
        }
        ratio += err[0] / err[1] / 5.0;
    }
    const double analytic = (std::pow(std::pow(1 + a * 0.1, 2) + b * b * 0.1, 10) - std::exp(2 * a + b * b)) /
                            (std::pow(std::pow(1 + a * 0.05, 2) + b * b * 0.05, 20) - std::exp(2 * a + b * b));
    EXPECT_NEAR(ratio, 2.0, 0.5);
    EXPECT_NEAR(ratio, analytic, 0.2);
}

TEST(CheckState, PositiveModelRejectsNonPositive) {
    const auto m = gbm(0.0, 1.0, Stepping::geometric);
    EXPECT_THROW(check_state(m, -1.0, 3, 0.5, 0.1, 0.0), SimulationError);
    EXPECT_THROW(check_state(m, std::nan(""), 3, 0.5, 0.1, 0.0), SimulationError);
    try {
        check_state(m, 0.0, 3, 0.5, 0.1, 0.0);
    } catch (const SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("path 3"), std::string::npos);
    }
}

TEST(Advance, JumpBelowMinusOneYieldsNaN) {
    FunctionalModel m;
    m.gamma = [](const StatePoint& s, std::size_t) { return -1.5 * s.x; };
    m.measure = JumpMeasure({{1.0, 1.0}});
    m.scheme = Stepping::geometric;
    const std::uint32_t dN[1] = {1};
    EXPECT_TRUE(std::isnan(advance(m, StatePoint{0, 1, 0, 0, 0, 0}, 0.1, 0.0, dN)));
}

TEST(JumpMeasure, RejectsNegativeIntensity) {
    EXPECT_THROW(JumpMeasure({{1.0, -0.1}}), ConfigError);
}
