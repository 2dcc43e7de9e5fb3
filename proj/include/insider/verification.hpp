#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "control.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace insider {

struct PerformanceEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

inline PerformanceEstimate summarize(const std::vector<double>& values, std::uint64_t seed = 0) {
    PerformanceEstimate e;
    e.n_paths = values.size();
    e.seed = seed;
    if (values.empty()) return e;
    double s = 0.0;
    for (double v : values) s += v;
    e.mean = s / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    }
    return e;
}

// Per-path estimates of a difference a * X - b * Y (paired samples).
inline PerformanceEstimate paired(const std::vector<double>& x, const std::vector<double>& y, double a = 1.0,
                                  double b = 1.0) {
    std::vector<double> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = a * x[i] - b * y[i];
    return summarize(d);
}

struct ControlPair {
    ControlField u1;
    ControlField u2;
};

// Per-path values of J_i for every control pair, all on the same noise:
// result[v][path] = sum_nodes w * (sum_k f_i K dt + g_i K_N).
template <StateModel M>
std::vector<std::vector<double>> sample_performance(const M& m, const Experiment& ex, int player,
                                                    const std::vector<ControlPair>& variants) {
    const std::size_t n = ex.n_paths(), nodes = ex.nodes(), P = ex.grid.points();
    std::vector<std::vector<double>> out(variants.size(), std::vector<double>(n, 0.0));
    parallel_for(n, [&](std::size_t p) {
        PathKernels kern;
        ex.kernels(p, kern);
        ControlTables tabs(ex, p, kern);
        std::vector<double> x(P);
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const auto& t1 = tabs.get(variants[v].u1);
            const auto& t2 = tabs.get(variants[v].u2);
            double J = 0.0;
            for (std::size_t node = 0; node < nodes; ++node) {
                simulate_node(m, ex, p, node, t1.data(), t2.data(), x.data());
                J += ex.info.nodes()[node].weight *
                     node_functional(m, ex, kern, node, player, t1.data(), t2.data(), x.data());
            }
            out[v][p] = J;
        }
    });
    return out;
}

template <StateModel M>
PerformanceEstimate estimate_performance(const M& m, const Experiment& ex, int player, const ControlField& u1,
                                         const ControlField& u2) {
    return summarize(sample_performance(m, ex, player, {{u1, u2}})[0], ex.noise.seed);
}

// ---------------------------------------------------------------------------
// Gateaux derivatives

struct GateauxResult {
    std::size_t direction = 0;
    double a = 0.0;
    double derivative = 0.0;
    double std_error = 0.0;
    double J = 0.0;
    double J_stderr = 0.0;
    std::vector<double> by_magnitude;      // central differences per listed a
    double richardson_ratio = std::nan("");  // (D(a3) - D(a2)) / (D(a2) - D(a1))
    bool pass = false;
};

inline constexpr double gateaux_relative_floor = 1e-3;

// [J_i(u + a beta) - J_i(u - a beta)] / (2a) on common noise, for every
// direction and every magnitude; the verdict uses the smallest a.
template <StateModel M>
std::vector<GateauxResult> gateaux_derivatives(const M& m, const Experiment& ex, int player, const ControlField& u1,
                                               const ControlField& u2, const std::vector<ControlField>& directions,
                                               std::vector<double> magnitudes,
                                               double relative_floor = gateaux_relative_floor) {
    if (magnitudes.empty()) throw PreconditionError("gateaux derivative needs at least one magnitude");
    std::sort(magnitudes.begin(), magnitudes.end());
    if (!(magnitudes.front() > 0.0)) throw PreconditionError("gateaux magnitudes must be positive");
    std::vector<ControlPair> variants{{u1, u2}};
    for (const auto& d : directions)
        for (double a : magnitudes)
            for (double s : {1.0, -1.0}) {
                if (player == 1) variants.push_back({u1.perturbed(d, s * a), u2});
                else variants.push_back({u1, u2.perturbed(d, s * a)});
            }
    const auto vals = sample_performance(m, ex, player, variants);
    const PerformanceEstimate base = summarize(vals[0]);
    std::vector<GateauxResult> out;
    std::size_t v = 1;
    for (std::size_t d = 0; d < directions.size(); ++d) {
        GateauxResult g;
        g.direction = d;
        g.a = magnitudes.front();
        g.J = base.mean;
        g.J_stderr = base.std_error;
        for (std::size_t j = 0; j < magnitudes.size(); ++j, v += 2) {
            const double a = magnitudes[j];
            const PerformanceEstimate e = paired(vals[v], vals[v + 1], 0.5 / a, 0.5 / a);
            g.by_magnitude.push_back(e.mean);
            if (j == 0) {
                g.derivative = e.mean;
                g.std_error = e.std_error;
            }
        }
        if (g.by_magnitude.size() >= 3) {
            const double d21 = g.by_magnitude[1] - g.by_magnitude[0];
            const double d32 = g.by_magnitude[2] - g.by_magnitude[1];
            g.richardson_ratio = d32 / d21;
        }
        g.pass = std::abs(g.derivative) <= std::max(3.0 * g.std_error, relative_floor * std::abs(g.J));
        out.push_back(std::move(g));
    }
    return out;
}

template <StateModel M>
GateauxResult gateaux_derivative(const M& m, const Experiment& ex, int player, const ControlField& u1,
                                 const ControlField& u2, const ControlField& direction,
                                 const std::vector<double>& magnitudes) {
    return gateaux_derivatives(m, ex, player, u1, u2, {direction}, magnitudes).front();
}

// ---------------------------------------------------------------------------
// Saddle and Nash orderings

struct OrderingRow {
    int player = 1;
    std::size_t direction = 0;
    double a = 0.0;
    double J = 0.0;         // functional at the deviation
    double J_stderr = 0.0;
    double gain = 0.0;      // deviation gain for the deviating player
    double gain_stderr = 0.0;
    bool holds = true;
};

struct OrderingReport {
    double J = 0.0;
    double J_stderr = 0.0;
    std::vector<OrderingRow> rows;
    double worst_margin = 0.0;  // largest gain in standard errors
    bool holds = true;
};

inline constexpr double ordering_sigmas = 3.0;

// saddle == true: J = J_1 for every deviation and the check is
// J(u1, u2^) <= J(u1^, u2^) <= J(u1^, u2). Otherwise each player's own
// functional J_i must not increase under its own deviation.
template <StateModel M>
OrderingReport ordering_check(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2,
                              const std::vector<ControlField>& dirs1, const std::vector<ControlField>& dirs2,
                              const std::vector<double>& magnitudes, bool saddle) {
    struct Dev {
        int player;
        std::size_t dir;
        double a;
    };
    std::vector<ControlPair> v1{{u1, u2}}, v2{{u1, u2}};
    std::vector<Dev> devs;
    for (std::size_t d = 0; d < dirs1.size(); ++d)
        for (double a : magnitudes) {
            v1.push_back({u1.perturbed(dirs1[d], a), u2});
            devs.push_back({1, d, a});
        }
    for (std::size_t d = 0; d < dirs2.size(); ++d)
        for (double a : magnitudes) {
            (saddle ? v1 : v2).push_back({u1, u2.perturbed(dirs2[d], a)});
            devs.push_back({2, d, a});
        }
    const auto j1 = sample_performance(m, ex, 1, v1);
    const auto j2 = saddle ? std::vector<std::vector<double>>{} : sample_performance(m, ex, 2, v2);
    OrderingReport rep;
    const PerformanceEstimate base = summarize(j1[0]);
    rep.J = base.mean;
    rep.J_stderr = base.std_error;
    rep.worst_margin = -std::numeric_limits<double>::infinity();
    std::size_t i1 = 1, i2 = 1;
    for (const Dev& d : devs) {
        OrderingRow row;
        row.player = d.player;
        row.direction = d.dir;
        row.a = d.a;
        const std::vector<double>* dev;
        const std::vector<double>* ref;
        double sign = 1.0;
        if (d.player == 1 || saddle) {
            dev = &j1[i1++];
            ref = &j1[0];
            sign = d.player == 1 ? 1.0 : -1.0;
        } else {
            dev = &j2[i2++];
            ref = &j2[0];
        }
        const PerformanceEstimate e = summarize(*dev);
        row.J = e.mean;
        row.J_stderr = e.std_error;
        const PerformanceEstimate g = paired(*dev, *ref, sign, sign);
        row.gain = g.mean;
        row.gain_stderr = g.std_error;
        const double scale = 1e-12 * std::max(1.0, std::abs(rep.J));
        const double margin = g.std_error > 0.0 ? g.mean / g.std_error : (g.mean > scale ? HUGE_VAL : 0.0);
        row.holds = margin <= ordering_sigmas;
        rep.worst_margin = std::max(rep.worst_margin, margin);
        rep.holds = rep.holds && row.holds;
        rep.rows.push_back(row);
    }
    if (devs.empty()) rep.worst_margin = 0.0;
    return rep;
}

template <StateModel M>
OrderingReport saddle_check(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2,
                            const std::vector<ControlField>& dirs1, const std::vector<ControlField>& dirs2,
                            const std::vector<double>& magnitudes) {
    return ordering_check(m, ex, u1, u2, dirs1, dirs2, magnitudes, true);
}

template <StateModel M>
OrderingReport nash_check(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2,
                          const std::vector<ControlField>& dirs1, const std::vector<ControlField>& dirs2,
                          const std::vector<double>& magnitudes) {
    return ordering_check(m, ex, u1, u2, dirs1, dirs2, magnitudes, false);
}

// ---------------------------------------------------------------------------
// Perturbation directions

// Even ids: smooth fields c0 + c1 sin(w1 t / T + f1) + c2 cos(w2 y / L + f2).
// Odd ids: steps 1{t >= t0} (c0 + c1 tanh(2 y / L)).
// Coefficients are normalized so that |beta| <= bound; uninformed players
// get c2 = c1 = 0 in the y terms.
inline std::vector<ControlField> random_directions(int player, Adaptedness adapted, const YGrid& own, double T,
                                                   std::size_t count, double bound, std::uint64_t seed) {
    std::vector<ControlField> out;
    const double L = std::max({1.0, std::abs(own.nodes.front()), std::abs(own.nodes.back())});
    const bool insider = adapted == Adaptedness::insider;
    for (std::size_t d = 0; d < count; ++d) {
        auto eng = make_engine(seed, Stream::directions, static_cast<std::uint64_t>(player) * 1000003ULL + d);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::uniform_real_distribution<double> U01(0.0, 1.0);
        double c0 = U(eng), c1 = U(eng), c2 = insider ? U(eng) : 0.0;
        const double w1 = 1.0 + 3.0 * U01(eng), f1 = 2.0 * std::numbers::pi * U01(eng);
        const double w2 = 1.0 + 3.0 * U01(eng), f2 = 2.0 * std::numbers::pi * U01(eng);
        const double t0 = T * U01(eng);
        if (d % 2 == 0) {
            const double norm = std::abs(c0) + std::abs(c1) + std::abs(c2);
            c0 *= bound / norm;
            c1 *= bound / norm;
            c2 *= bound / norm;
            out.push_back(ControlField::rule(player, adapted, own, [=](const PathState& ps, double y) {
                return c0 + c1 * std::sin(w1 * ps.t / T + f1) + c2 * std::cos(w2 * y / L + f2);
            }));
        } else {
            const double s1 = insider ? c1 : 0.0;
            const double norm = std::abs(c0) + std::abs(s1);
            const double a0 = c0 * bound / norm, a1 = s1 * bound / norm;
            out.push_back(ControlField::rule(player, adapted, own, [=](const PathState& ps, double y) {
                return ps.t >= t0 ? a0 + a1 * std::tanh(2.0 * y / L) : 0.0;
            }));
        }
    }
    return out;
}

}  // namespace insider
