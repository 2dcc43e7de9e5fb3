#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "adjoint.hpp"
#include "control.hpp"
#include "hamiltonian.hpp"
#include "parallel.hpp"
#include "simulate.hpp"

namespace insider {

// Path-averaged first-order residuals int dH_i/du_i d(opponent y) on the
// (time, own y) grid of each player, with the same quantity evaluated at a
// probe control u_i / 2 as the local derivative scale.
struct FocReport {
    std::size_t steps = 0;
    std::size_t own[2] = {1, 1};
    std::vector<double> residual[2];  // [k * own + i]
    std::vector<double> scale[2];
    AdjointTriple adjoint[2];

    double rms(int player) const { return root_mean_square(residual[player - 1]); }
    double scale_rms(int player) const { return root_mean_square(scale[player - 1]); }
    double relative(int player) const {
        const double s = scale_rms(player);
        return s > 0.0 ? rms(player) / s : (rms(player) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
    bool pass(int player, double tolerance) const { return relative(player) <= tolerance; }

    static double root_mean_square(const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s / static_cast<double>(v.size()));
    }
};

inline double probe_control(double u) { return std::abs(u) > 1e-12 ? 0.5 * u : 0.5; }

// Adjoint evaluated along a path: (player, path state, node, x, K, D, u1, u2) -> p, q, r.
using ExplicitAdjoint = std::function<void(int, const PathState&, const Node&, double, double, double, double, double,
                                           double&, double&, double*)>;

namespace detail {
inline FocReport make_report(const Experiment& ex, std::size_t marks) {
    FocReport rep;
    rep.steps = ex.steps();
    for (int i = 0; i < 2; ++i) {
        rep.own[i] = ex.info.own_size(i + 1);
        rep.residual[i].assign(rep.steps * rep.own[i], 0.0);
        rep.scale[i].assign(rep.steps * rep.own[i], 0.0);
        rep.adjoint[i] = AdjointTriple(rep.steps, ex.nodes(), marks);
    }
    return rep;
}

inline void finish(FocReport& rep) {
    for (int i = 0; i < 2; ++i)
        for (auto& s : rep.scale[i]) s = std::abs(s);
}
}  // namespace detail

// Residuals with an adjoint known along each path (closed forms). The
// adjoint is re-evaluated at the probe control for the scale.
template <StateModel M>
FocReport foc_residuals(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2,
                        const ExplicitAdjoint& adjoint) {
    const std::size_t n = ex.n_paths(), N = ex.steps(), nodes = ex.nodes(), MK = m.jumps().size();
    FocReport rep = detail::make_report(ex, MK);
    const std::size_t blocks = std::min<std::size_t>(n, 64);
    std::vector<FocReport> parts(blocks, rep);
    parallel_for(blocks, [&](std::size_t b) {
        FocReport& part = parts[b];
        PathKernels kern;
        std::vector<double> x(N + 1), r(MK);
        for (std::size_t p = b * n / blocks; p < (b + 1) * n / blocks; ++p) {
            ex.kernels(p, kern);
            ControlTables tabs(ex, p, kern);
            const auto& t1 = tabs.get(u1);
            const auto& t2 = tabs.get(u2);
            for (std::size_t node = 0; node < nodes; ++node) {
                const Node& nd = ex.info.nodes()[node];
                simulate_node(m, ex, p, node, t1.data(), t2.data(), x.data());
                for (std::size_t k = 0; k < N; ++k) {
                    const PathState ps = ex.state(p, k, &kern);
                    StatePoint s{ps.t, x[k], t1[k * rep.own[0] + nd.i1], t2[k * rep.own[1] + nd.i2], nd.y1, nd.y2};
                    const double K = kern.kernel(k, node), D = kern.malliavin(k, node);
                    for (int i = 1; i <= 2; ++i) {
                        double pv = 0.0, qv = 0.0;
                        adjoint(i, ps, nd, x[k], K, D, s.u1, s.u2, pv, qv, r.data());
                        const std::size_t idx = k * rep.own[i - 1] + ex.info.own_index(i, nd);
                        const double w = nd.opponent_weight[i - 1];
                        const auto d = hamiltonian_partials(m, i, s, pv, qv, r.data(), K);
                        part.residual[i - 1][idx] += w * (i == 1 ? d.du1 : d.du2);
                        AdjointTriple& at = part.adjoint[i - 1];
                        at.p[k * nodes + node] += pv;
                        at.q[k * nodes + node] += qv;
                        for (std::size_t j = 0; j < MK; ++j) at.r[(k * nodes + node) * MK + j] += r[j];
                        StatePoint probe = s;
                        (i == 1 ? probe.u1 : probe.u2) = probe_control(i == 1 ? s.u1 : s.u2);
                        adjoint(i, ps, nd, x[k], K, D, probe.u1, probe.u2, pv, qv, r.data());
                        const auto dp = hamiltonian_partials(m, i, probe, pv, qv, r.data(), K);
                        part.scale[i - 1][idx] += w * (i == 1 ? dp.du1 : dp.du2);
                    }
                }
            }
        }
    });
    const double inv = 1.0 / static_cast<double>(n);
    for (const auto& part : parts)
        for (int i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < rep.residual[i].size(); ++j) {
                rep.residual[i][j] += part.residual[i][j] * inv;
                rep.scale[i][j] += part.scale[i][j] * inv;
            }
            for (std::size_t j = 0; j < rep.adjoint[i].p.size(); ++j) {
                rep.adjoint[i].p[j] += part.adjoint[i].p[j] * inv;
                rep.adjoint[i].q[j] += part.adjoint[i].q[j] * inv;
            }
            for (std::size_t j = 0; j < rep.adjoint[i].r.size(); ++j) rep.adjoint[i].r[j] += part.adjoint[i].r[j] * inv;
        }
    detail::finish(rep);
    return rep;
}

// Residuals with each player's adjoint solved by regression Monte Carlo
// along the candidate pair, one node at a time.
template <StateModel M>
FocReport foc_residuals_lsmc(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2,
                             const LsmcOptions& opt = {}) {
    const std::size_t n = ex.n_paths(), N = ex.steps(), nodes = ex.nodes(), MK = m.jumps().size();
    FocReport rep = detail::make_report(ex, MK);
    const std::size_t m1 = rep.own[0], m2 = rep.own[1];
    std::vector<double> c1(n * N * m1), c2(n * N * m2);
    parallel_for(n, [&](std::size_t p) {
        PathKernels kern;
        ex.kernels(p, kern);
        ControlTables tabs(ex, p, kern);
        const auto& t1 = tabs.get(u1);
        const auto& t2 = tabs.get(u2);
        std::copy(t1.begin(), t1.end(), c1.begin() + static_cast<std::ptrdiff_t>(p * N * m1));
        std::copy(t2.begin(), t2.end(), c2.begin() + static_cast<std::ptrdiff_t>(p * N * m2));
    });
    struct NodePart {
        std::vector<double> res[2], scl[2];  // [k]
        NodeAdjoint adj[2];
    };
    std::vector<NodePart> parts(nodes);
    parallel_for(nodes, [&](std::size_t node) {
        const Node& nd = ex.info.nodes()[node];
        std::vector<double> x(n * (N + 1)), v1(n * N), v2(n * N);
        for (std::size_t p = 0; p < n; ++p) {
            simulate_node(m, ex, p, node, c1.data() + p * N * m1, c2.data() + p * N * m2, x.data() + p * (N + 1));
            for (std::size_t k = 0; k < N; ++k) {
                v1[p * N + k] = c1[p * N * m1 + k * m1 + nd.i1];
                v2[p * N + k] = c2[p * N * m2 + k * m2 + nd.i2];
            }
        }
        NodePart& part = parts[node];
        for (int i = 1; i <= 2; ++i) {
            part.adj[i - 1] = solve_model_adjoint_lsmc(m, ex, i, node, x, v1, v2, opt);
            part.res[i - 1].assign(N, 0.0);
            part.scl[i - 1].assign(N, 0.0);
            const NodeAdjoint& a = part.adj[i - 1];
            for (std::size_t k = 0; k < N; ++k)
                for (std::size_t p = 0; p < n; ++p) {
                    StatePoint s{ex.grid.time(k), x[p * (N + 1) + k], v1[p * N + k], v2[p * N + k], nd.y1, nd.y2};
                    const double K = ex.node_kernel(p, k, node);
                    const auto d = hamiltonian_partials(m, i, s, a.P(k, p), a.Q(k, p), a.R(k, p), K);
                    part.res[i - 1][k] += i == 1 ? d.du1 : d.du2;
                    StatePoint probe = s;
                    (i == 1 ? probe.u1 : probe.u2) = probe_control(i == 1 ? s.u1 : s.u2);
                    const auto dp = hamiltonian_partials(m, i, probe, a.P(k, p), a.Q(k, p), a.R(k, p), K);
                    part.scl[i - 1][k] += i == 1 ? dp.du1 : dp.du2;
                }
        }
    });
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t node = 0; node < nodes; ++node) {
        const Node& nd = ex.info.nodes()[node];
        for (int i = 1; i <= 2; ++i) {
            const double w = nd.opponent_weight[i - 1];
            const std::size_t own_i = ex.info.own_index(i, nd);
            for (std::size_t k = 0; k < N; ++k) {
                rep.residual[i - 1][k * rep.own[i - 1] + own_i] += w * parts[node].res[i - 1][k] * inv;
                rep.scale[i - 1][k * rep.own[i - 1] + own_i] += w * parts[node].scl[i - 1][k] * inv;
            }
            rep.adjoint[i - 1].accumulate(node, parts[node].adj[i - 1]);
        }
    }
    detail::finish(rep);
    return rep;
}

}  // namespace insider
