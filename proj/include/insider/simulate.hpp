#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "control.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "information.hpp"
#include "parallel.hpp"
#include "sde.hpp"

namespace insider {

// Shared noise, signal paths and information structure for one run.
struct Experiment {
    TimeGrid grid;
    InformationStructure info;
    NoiseBundle noise;
    SignalPaths signals;

    static Experiment create(const TimeGrid& grid, InformationStructure info, const JumpMeasure& jumps,
                             std::size_t n_paths, std::uint64_t seed) {
        Experiment ex;
        ex.grid = grid;
        ex.noise = sample_noise(grid, n_paths, jumps, seed, info.signal_horizon());
        ex.signals = simulate_signal(info, ex.noise);
        ex.info = std::move(info);
        return ex;
    }

    std::size_t n_paths() const { return noise.n_paths; }
    std::size_t steps() const { return grid.steps; }
    std::size_t nodes() const { return info.nodes().size(); }

    void kernels(std::size_t path, PathKernels& out) const {
        info.fill_kernels(grid, signals.signal(1, path), signals.signal(2, path), out);
    }

    // Node kernel and its Malliavin counterpart at (path, k) without
    // building the whole PathKernels table.
    double node_kernel(std::size_t path, std::size_t k, std::size_t node, double* malliavin = nullptr) const {
        const Node& nd = info.nodes()[node];
        const double t = grid.time(k);
        double K[2] = {1.0, 1.0}, D[2] = {0.0, 0.0};
        const int last = info.coupling() == Coupling::shared ? 1 : 2;
        for (int i = 1; i <= last; ++i) {
            if (!info.informed(i)) continue;
            const InsiderSignal& sig = *info.player(i).signal;
            const double v = sig.kernel_variance(t);
            const double Y = signals.signal(i, path)[k];
            const double y = i == 1 ? nd.y1 : nd.y2;
            K[i - 1] = gaussian_kernel(v, Y, y);
            D[i - 1] = -K[i - 1] * (Y - y) / v * sig.psi(t);
        }
        if (malliavin) *malliavin = D[0] * K[1] + K[0] * D[1];
        return K[0] * K[1];
    }

    PathState state(std::size_t path, std::size_t k, const PathKernels* kern) const {
        PathState ps;
        ps.path = path;
        ps.step = k;
        ps.t = grid.time(k);
        ps.Y1 = signals.signal(1, path)[k];
        ps.Y2 = signals.signal(2, path)[k];
        ps.B = signals.brownian(path)[k];
        ps.kernels = kern;
        return ps;
    }
};

// Control values on one path, memoized per field so that perturbations of a
// common candidate evaluate the candidate once.
class ControlTables {
public:
    ControlTables(const Experiment& ex, std::size_t path, const PathKernels& kern)
        : ex_(ex), path_(path), kern_(kern) {}

    // [k * own_size + i] for k = 0..N-1
    const std::vector<double>& get(const ControlField& u) {
        const auto& tab = build(*u.impl(), u.player());
        if (!checked_.contains(u.identity())) {
            check_box(u, tab);
            checked_[u.identity()] = true;
        }
        return tab;
    }

private:
    const std::vector<double>& build(const ControlField::Impl& im, int player) {
        auto it = memo_.find(&im);
        if (it != memo_.end()) return it->second;
        const std::size_t m = ex_.info.own_size(player);
        const std::size_t N = ex_.steps();
        std::vector<double> tab(N * m);
        if (!im.base) {
            for (std::size_t k = 0; k < N; ++k)
                im.fill(ex_.state(path_, k, &kern_), std::span<double>(tab.data() + k * m, m));
        } else {
            const auto& b = build(*im.base, player);
            const auto& d = build(*im.direction, player);
            for (std::size_t i = 0; i < tab.size(); ++i) tab[i] = b[i] + im.scale * d[i];
        }
        return memo_.emplace(&im, std::move(tab)).first->second;
    }

    void check_box(const ControlField& u, const std::vector<double>& tab) const {
        const std::size_t m = ex_.info.own_size(u.player());
        for (std::size_t i = 0; i < tab.size(); ++i)
            if (!u.box().contains(tab[i])) {
                const std::size_t k = i / m;
                throw PreconditionError("control of player " + std::to_string(u.player()) +
                                        " leaves its box at " +
                                        location(path_, ex_.grid.time(k), ex_.info.own_grid(u.player()).nodes[i % m],
                                                 0.0) +
                                        ", value " + std::to_string(tab[i]));
            }
    }

    const Experiment& ex_;
    std::size_t path_;
    const PathKernels& kern_;
    std::unordered_map<const void*, std::vector<double>> memo_;
    std::unordered_map<const void*, bool> checked_;
};

// x(t_k, y1, y2) for k = 0..N at one node of one path; x has N + 1 slots.
template <StateModel M>
void simulate_node(const M& m, const Experiment& ex, std::size_t path, std::size_t node, const double* u1,
                   const double* u2, double* x) {
    const Node& nd = ex.info.nodes()[node];
    const std::size_t m1 = ex.info.own_size(1), m2 = ex.info.own_size(2);
    const std::size_t N = ex.steps();
    const double dt = ex.grid.dt();
    const double* dB = ex.noise.increments(path);
    x[0] = m.initial_state(nd.y1, nd.y2);
    check_state(m, x[0], path, 0.0, nd.y1, nd.y2);
    StatePoint s{0.0, x[0], 0.0, 0.0, nd.y1, nd.y2};
    for (std::size_t k = 0; k < N; ++k) {
        s.t = ex.grid.time(k);
        s.x = x[k];
        s.u1 = u1[k * m1 + nd.i1];
        s.u2 = u2[k * m2 + nd.i2];
        x[k + 1] = advance(m, s, dt, dB[k], ex.noise.counts(path, k));
        check_state(m, x[k + 1], path, ex.grid.time(k + 1), nd.y1, nd.y2);
    }
}

// Kernel-weighted functional of one node path:
// sum_k f_i(t_{k+1}, x_{k+1}, u_k) K_{k+1} dt + g_i(x_N) K_N.
template <StateModel M>
double node_functional(const M& m, const Experiment& ex, const PathKernels& kern, std::size_t node, int player,
                       const double* u1, const double* u2, const double* x) {
    const Node& nd = ex.info.nodes()[node];
    const std::size_t m1 = ex.info.own_size(1), m2 = ex.info.own_size(2);
    const std::size_t N = ex.steps();
    const double dt = ex.grid.dt();
    double J = 0.0;
    StatePoint s{0.0, 0.0, 0.0, 0.0, nd.y1, nd.y2};
    for (std::size_t k = 0; k < N; ++k) {
        s.t = ex.grid.time(k + 1);
        s.x = x[k + 1];
        s.u1 = u1[k * m1 + nd.i1];
        s.u2 = u2[k * m2 + nd.i2];
        J += m.running(player, s) * kern.kernel(k + 1, node) * dt;
    }
    J += m.terminal(player, x[N], nd.y1, nd.y2) * kern.kernel(N, node);
    return J;
}

// x[path, k, node] for every grid point. Memory grows as paths * steps *
// nodes, so this is meant for inspection-sized problems.
struct PathBundle {
    std::size_t n_paths = 0;
    std::size_t points = 0;
    std::size_t nodes = 0;
    std::vector<double> x;  // [(path * points + k) * nodes + n]

    double at(std::size_t path, std::size_t k, std::size_t node) const {
        return x[(path * points + k) * nodes + node];
    }
};

template <StateModel M>
PathBundle simulate_state(const M& m, const Experiment& ex, const ControlField& u1, const ControlField& u2) {
    PathBundle pb;
    pb.n_paths = ex.n_paths();
    pb.points = ex.grid.points();
    pb.nodes = ex.nodes();
    pb.x.resize(pb.n_paths * pb.points * pb.nodes);
    parallel_for(pb.n_paths, [&](std::size_t p) {
        PathKernels kern;
        ex.kernels(p, kern);
        ControlTables tabs(ex, p, kern);
        const auto& t1 = tabs.get(u1);
        const auto& t2 = tabs.get(u2);
        std::vector<double> x(pb.points);
        for (std::size_t n = 0; n < pb.nodes; ++n) {
            simulate_node(m, ex, p, n, t1.data(), t2.data(), x.data());
            for (std::size_t k = 0; k < pb.points; ++k) pb.x[(p * pb.points + k) * pb.nodes + n] = x[k];
        }
    });
    return pb;
}

// X(t) = x(t, Y1, Y2) with the realized signal values substituted into the
// initial condition, the coefficients and the controls.
template <StateModel M>
std::vector<double> simulate_realized(const M& m, const Experiment& ex, const ControlField& u1,
                                      const ControlField& u2) {
    const std::size_t P = ex.grid.points();
    const std::size_t N = ex.steps();
    std::vector<double> X(ex.n_paths() * P);
    parallel_for(ex.n_paths(), [&](std::size_t p) {
        PathKernels kern;
        ex.kernels(p, kern);
        const double y1 = ex.signals.terminal(1, p);
        const double y2 = ex.signals.terminal(2, p);
        const double* dB = ex.noise.increments(p);
        double* x = X.data() + p * P;
        x[0] = m.initial_state(y1, y2);
        check_state(m, x[0], p, 0.0, y1, y2);
        for (std::size_t k = 0; k < N; ++k) {
            const PathState ps = ex.state(p, k, &kern);
            const StatePoint s{ps.t, x[k], u1.at(ps, y1), u2.at(ps, y2), y1, y2};
            x[k + 1] = advance(m, s, ex.grid.dt(), dB[k], ex.noise.counts(p, k));
            check_state(m, x[k + 1], p, ex.grid.time(k + 1), y1, y2);
        }
    });
    return X;
}

}  // namespace insider
