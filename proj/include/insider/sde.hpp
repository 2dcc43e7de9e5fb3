#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "information.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace insider {

// Atom zeta of the Levy measure carrying intensity lambda.
struct JumpMark {
    double zeta = 0.0;
    double lambda = 0.0;
    bool operator==(const JumpMark&) const = default;
};

struct JumpMeasure {
    std::vector<JumpMark> marks;

    JumpMeasure() = default;
    explicit JumpMeasure(std::vector<JumpMark> m) : marks(std::move(m)) {
        for (const auto& mk : marks)
            if (!(mk.lambda >= 0.0) || !std::isfinite(mk.lambda) || !std::isfinite(mk.zeta))
                throw ConfigError("jump marks need finite zeta and finite lambda >= 0");
    }
    std::size_t size() const { return marks.size(); }
    bool empty() const { return marks.empty(); }
};

// Brownian increments and per-mark Poisson counts for every path. When the
// bundle is extended past T, tail_dB carries the increments on [T, T0].
struct NoiseBundle {
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    TimeGrid grid;
    JumpMeasure jumps;
    std::vector<double> dB;              // [path * steps + k]
    std::vector<std::uint32_t> dN;       // [(path * steps + k) * marks + j]
    std::vector<double> tail_dt;         // step lengths on [T, T0]
    std::vector<double> tail_dB;         // [path * tail + j]
    double extended_to = 0.0;

    std::size_t steps() const { return grid.steps; }
    std::size_t marks() const { return jumps.size(); }
    std::size_t tail_steps() const { return tail_dt.size(); }
    const double* increments(std::size_t path) const { return dB.data() + path * grid.steps; }
    const std::uint32_t* counts(std::size_t path, std::size_t k) const {
        return dN.data() + (path * grid.steps + k) * jumps.size();
    }
    const double* tail(std::size_t path) const { return tail_dB.data() + path * tail_dt.size(); }
};

// Draw order per path: dB_k and the mark counts for k = 0..N-1, then the
// tail increments. Each path owns the engine seeded by
// derive_seed(seed, Stream::noise, path).
inline NoiseBundle sample_noise(const TimeGrid& grid, std::size_t n_paths, const JumpMeasure& jumps,
                                std::uint64_t seed, double extend_to = 0.0) {
    if (n_paths < 1) throw ConfigError("n_paths must be at least 1");
    NoiseBundle nb;
    nb.seed = seed;
    nb.n_paths = n_paths;
    nb.grid = grid;
    nb.jumps = jumps;
    const std::size_t N = grid.steps;
    const std::size_t M = jumps.size();
    const double dt = grid.dt();
    if (extend_to > grid.horizon) {
        double t = grid.horizon;
        while (extend_to - t > 1e-12 * extend_to) {
            const double h = std::min(dt, extend_to - t);
            nb.tail_dt.push_back(h);
            t += h;
        }
        nb.extended_to = extend_to;
    }
    const std::size_t L = nb.tail_dt.size();
    nb.dB.resize(n_paths * N);
    nb.dN.assign(n_paths * N * M, 0);
    nb.tail_dB.resize(n_paths * L);
    const double sdt = std::sqrt(dt);
    parallel_for(n_paths, [&](std::size_t p) {
        auto eng = make_engine(seed, Stream::noise, p);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<std::poisson_distribution<std::uint32_t>> poisson;
        for (const auto& mk : jumps.marks)
            poisson.emplace_back(mk.lambda > 0.0 ? mk.lambda * dt : 1.0);
        for (std::size_t k = 0; k < N; ++k) {
            nb.dB[p * N + k] = sdt * normal(eng);
            for (std::size_t j = 0; j < M; ++j)
                if (jumps.marks[j].lambda > 0.0) nb.dN[(p * N + k) * M + j] = poisson[j](eng);
        }
        for (std::size_t j = 0; j < L; ++j) nb.tail_dB[p * L + j] = std::sqrt(nb.tail_dt[j]) * normal(eng);
    });
    return nb;
}

// Brownian path and signal paths on the time grid, plus Y(T0).
struct SignalPaths {
    std::size_t n_paths = 0;
    std::size_t points = 0;
    std::vector<double> B;       // [path * points + k]
    std::vector<double> Y[2];    // zeros for uninformed players
    std::vector<double> YT0[2];

    const double* brownian(std::size_t path) const { return B.data() + path * points; }
    const double* signal(int player, std::size_t path) const {
        return Y[player - 1].data() + path * points;
    }
    double terminal(int player, std::size_t path) const { return YT0[player - 1][path]; }
};

namespace detail {
inline void check_signal_grid(const InsiderSignal& s, const NoiseBundle& noise) {
    if (std::abs(s.control_horizon_T() - noise.grid.horizon) > 1e-12 * noise.grid.horizon)
        throw ConfigError("signal control horizon differs from the time grid horizon");
    if (noise.tail_steps() == 0 ||
        std::abs(noise.extended_to - s.horizon_T0()) > 1e-12 * s.horizon_T0())
        throw ConfigError("noise bundle is not extended to the signal horizon T0");
}

// Y_{k+1} = Y_k + psi(t_k) dB_k on the grid and through the tail.
inline void accumulate_signal(const InsiderSignal& s, const NoiseBundle& noise, std::size_t p, double* Y,
                              double& YT0) {
    const std::size_t N = noise.steps();
    const double* dB = noise.increments(p);
    Y[0] = 0.0;
    for (std::size_t k = 0; k < N; ++k) Y[k + 1] = Y[k] + s.psi(noise.grid.time(k)) * dB[k];
    double y = Y[N];
    double t = noise.grid.horizon;
    const double* tail = noise.tail(p);
    for (std::size_t j = 0; j < noise.tail_steps(); ++j) {
        y += s.psi(t) * tail[j];
        t += noise.tail_dt[j];
    }
    YT0 = y;
}
}  // namespace detail

inline SignalPaths simulate_signal(const InformationStructure& info, const NoiseBundle& noise) {
    SignalPaths sp;
    sp.n_paths = noise.n_paths;
    sp.points = noise.grid.points();
    const std::size_t P = sp.points;
    sp.B.assign(sp.n_paths * P, 0.0);
    for (int i = 0; i < 2; ++i) {
        sp.Y[i].assign(sp.n_paths * P, 0.0);
        sp.YT0[i].assign(sp.n_paths, 0.0);
        if (info.informed(i + 1)) detail::check_signal_grid(*info.player(i + 1).signal, noise);
    }
    for (std::size_t p = 0; p < sp.n_paths; ++p) {
        const double* dB = noise.increments(p);
        for (std::size_t k = 0; k < noise.steps(); ++k) sp.B[p * P + k + 1] = sp.B[p * P + k] + dB[k];
        for (int i = 0; i < 2; ++i)
            if (info.informed(i + 1))
                detail::accumulate_signal(*info.player(i + 1).signal, noise, p, sp.Y[i].data() + p * P,
                                          sp.YT0[i][p]);
    }
    return sp;
}

// Single-signal convenience: Y on the grid for every path plus Y(T0).
inline SignalPaths simulate_signal(const InsiderSignal& s, const NoiseBundle& noise) {
    return simulate_signal(
        InformationStructure::independent(PlayerInformation::insider(s, YGrid::uniform(-1.0, 1.0, 2)), {}),
        noise);
}

// Arguments of the coefficient functions.
struct StatePoint {
    double t = 0.0;
    double x = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    double y1 = 0.0;
    double y2 = 0.0;
};

enum class Stepping { euler, geometric };

template <class M>
concept StateModel = requires(const M& m, const StatePoint& s, int player, std::size_t j, double x) {
    { m.drift(s) } -> std::convertible_to<double>;
    { m.diffusion(s) } -> std::convertible_to<double>;
    { m.jump(s, j) } -> std::convertible_to<double>;
    { m.initial_state(x, x) } -> std::convertible_to<double>;
    { m.jumps() } -> std::convertible_to<const JumpMeasure&>;
    { m.stepping() } -> std::convertible_to<Stepping>;
    { m.positive_state() } -> std::convertible_to<bool>;
    { m.running(player, s) } -> std::convertible_to<double>;
    { m.terminal(player, x, x, x) } -> std::convertible_to<double>;
    { m.terminal_slope(player, x, x, x) } -> std::convertible_to<double>;
};

inline std::string location(std::size_t path, double t, double y1, double y2) {
    std::ostringstream os;
    os << "path " << path << ", t = " << t << ", y = (" << y1 << ", " << y2 << ")";
    return os.str();
}

// One step from s.x over dt. Euler-Maruyama with compensated jumps, or the
// exact log-step of the frozen relative coefficients for geometric models.
template <StateModel M>
double advance(const M& m, const StatePoint& s, double dt, double dB, const std::uint32_t* dN) {
    const double b = m.drift(s);
    const double sig = m.diffusion(s);
    const auto& marks = m.jumps().marks;
    if (m.stepping() == Stepping::euler) {
        double x = s.x + b * dt + sig * dB;
        for (std::size_t j = 0; j < marks.size(); ++j)
            x += m.jump(s, j) * (static_cast<double>(dN[j]) - marks[j].lambda * dt);
        return x;
    }
    const double rb = b / s.x;
    const double rs = sig / s.x;
    double expo = (rb - 0.5 * rs * rs) * dt + rs * dB;
    for (std::size_t j = 0; j < marks.size(); ++j) {
        const double g = m.jump(s, j) / s.x;
        if (!(g > -1.0)) return std::numeric_limits<double>::quiet_NaN();
        expo += -marks[j].lambda * g * dt + static_cast<double>(dN[j]) * std::log1p(g);
    }
    return s.x * std::exp(expo);
}

template <StateModel M>
void check_state(const M& m, double x, std::size_t path, double t, double y1, double y2) {
    if (!std::isfinite(x)) throw SimulationError("non-finite state at " + location(path, t, y1, y2));
    if (m.positive_state() && !(x > 0.0))
        throw SimulationError("state left the positive half-line at " + location(path, t, y1, y2));
}

}  // namespace insider
