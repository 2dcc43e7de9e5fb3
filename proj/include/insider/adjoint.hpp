#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "donsker.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "hamiltonian.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "regression.hpp"
#include "sde.hpp"
#include "simulate.hpp"

namespace insider {

// (p, q, r) along every path of one y-node.
struct NodeAdjoint {
    std::size_t n_paths = 0;
    std::size_t steps = 0;
    std::size_t marks = 0;
    std::vector<double> p;  // [k * n + path], k = 0..N
    std::vector<double> q;  // [k * n + path], k = 0..N-1
    std::vector<double> r;  // [(k * n + path) * marks + j]

    NodeAdjoint() = default;
    NodeAdjoint(std::size_t n, std::size_t N, std::size_t M)
        : n_paths(n), steps(N), marks(M), p((N + 1) * n), q(N * n), r(N * n * M) {}

    double P(std::size_t k, std::size_t path) const { return p[k * n_paths + path]; }
    double Q(std::size_t k, std::size_t path) const { return q[k * n_paths + path]; }
    const double* R(std::size_t k, std::size_t path) const { return r.data() + (k * n_paths + path) * marks; }
};

// Path averages of an adjoint on a (time, node) grid.
struct AdjointTriple {
    std::size_t steps = 0;
    std::size_t nodes = 0;
    std::size_t marks = 0;
    std::vector<double> p, q, r;  // [k * nodes + n], r: [(k * nodes + n) * marks + j]

    AdjointTriple() = default;
    AdjointTriple(std::size_t N, std::size_t nodes_, std::size_t M)
        : steps(N), nodes(nodes_), marks(M), p((N + 1) * nodes_, 0.0), q((N + 1) * nodes_, 0.0),
          r((N + 1) * nodes_ * M, 0.0) {}

    void accumulate(std::size_t node, const NodeAdjoint& a) {
        const double inv = 1.0 / static_cast<double>(a.n_paths);
        for (std::size_t k = 0; k <= a.steps; ++k)
            for (std::size_t path = 0; path < a.n_paths; ++path) {
                p[k * nodes + node] += a.P(k, path) * inv;
                if (k == a.steps) continue;
                q[k * nodes + node] += a.Q(k, path) * inv;
                for (std::size_t j = 0; j < marks; ++j) r[(k * nodes + node) * marks + j] += a.R(k, path)[j] * inv;
            }
    }
};

struct LsmcOptions {
    std::size_t degree = 2;
    bool kernel_basis = true;
};

// Backward equation dp = F dt + q dB + sum_j r_j dN~_j with p(T) = xi on
// paths driven by `noise`. driver(k, path, p, q, r) returns F at step k.
struct LsmcProblem {
    const NoiseBundle* noise = nullptr;
    std::size_t n_features = 0;
    std::vector<double> features;  // [(k * n + path) * n_features + f], k = 0..N-1
    std::vector<double> kernel;    // [k * n + path], empty for a plain polynomial basis
    std::vector<double> terminal;  // [path]
    std::function<double(std::size_t, std::size_t, double, double, const double*)> driver;
};

// Regression Monte Carlo: at each step E_k[p_{k+1}] is the projection of
// p_{k+1} on the basis, q and r are projections of the martingale increment
// times dB / dt and dN~_j / (lambda_j dt), and p_k = E_k[p_{k+1}] - F dt.
inline NodeAdjoint solve_adjoint_lsmc(const LsmcProblem& pb, const LsmcOptions& opt = {}) {
    if (!pb.noise) throw ConfigError("lsmc problem has no noise bundle");
    const NoiseBundle& nz = *pb.noise;
    const std::size_t n = nz.n_paths, N = nz.steps(), M = nz.marks();
    const double dt = nz.grid.dt();
    if (pb.terminal.size() != n || pb.features.size() != N * n * pb.n_features)
        throw ConfigError("lsmc problem arrays do not match the noise bundle");
    const bool use_kernel = opt.kernel_basis && !pb.kernel.empty();
    const PolynomialBasis basis(pb.n_features, opt.degree);
    NodeAdjoint out(n, N, M);
    std::copy(pb.terminal.begin(), pb.terminal.end(), out.p.begin() + static_cast<std::ptrdiff_t>(N * n));
    std::vector<double> E(n), rhs(n), fitted(n), dM(n);
    std::vector<double> rj(M);
    for (std::size_t k = N; k-- > 0;) {
        const CrossSectionRegression reg(pb.features.data() + k * n * pb.n_features, n, basis,
                                         use_kernel ? pb.kernel.data() + k * n : nullptr);
        const double* next = out.p.data() + (k + 1) * n;
        reg.fit(next, E.data());
        for (std::size_t p = 0; p < n; ++p) dM[p] = next[p] - E[p];
        for (std::size_t p = 0; p < n; ++p) rhs[p] = dM[p] * nz.increments(p)[k] / dt;
        reg.fit(rhs.data(), out.q.data() + k * n);
        for (std::size_t j = 0; j < M; ++j) {
            const double lam = nz.jumps.marks[j].lambda;
            if (lam <= 0.0) continue;
            for (std::size_t p = 0; p < n; ++p)
                rhs[p] = dM[p] * (static_cast<double>(nz.counts(p, k)[j]) - lam * dt) / (lam * dt);
            reg.fit(rhs.data(), fitted.data());
            for (std::size_t p = 0; p < n; ++p) out.r[(k * n + p) * M + j] = fitted[p];
        }
        for (std::size_t p = 0; p < n; ++p) {
            const double F = pb.driver(k, p, E[p], out.q[k * n + p], out.R(k, p));
            out.p[k * n + p] = E[p] - F * dt;
            if (!std::isfinite(out.p[k * n + p]))
                throw SolverError("non-finite adjoint at step " + std::to_string(k) + ", path " + std::to_string(p));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Consumption: h = p x through the auxiliary exponential martingale k.

enum class AdjointMethod { exact, lsmc };

// k, u = h k, v, w and h = u / k along every path of one node.
struct ConsumptionNodeState {
    std::size_t n_paths = 0;
    std::size_t steps = 0;
    std::size_t marks = 0;
    std::vector<double> k, u, h;  // [k * n + path], k = 0..N
    std::vector<double> v;        // [k * n + path], k = 0..N-1
    std::vector<double> w;        // [(k * n + path) * marks + j]
};

using TransformedConsumptionState = std::vector<ConsumptionNodeState>;

// dk = k [-beta dB + sum_j c_j dN~_j], c_j = -g_j / (1 + g_j), stepped exactly.
inline std::vector<double> simulate_consumption_k(const ConsumptionModel& m, const Experiment& ex, std::size_t node) {
    const std::size_t n = ex.n_paths(), N = ex.steps(), M = m.jumps().size();
    const double dt = ex.grid.dt();
    const double y1 = ex.info.nodes()[node].y1;
    const double beta = m.beta(y1);
    std::vector<double> c(M), logc(M);
    double comp = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double g = m.relative_jump(y1, j);
        if (!(g > -1.0)) throw SolverError("relative jump must exceed -1 for the auxiliary process");
        c[j] = -g / (1.0 + g);
        logc[j] = std::log1p(c[j]);
        comp += m.jumps().marks[j].lambda * c[j];
    }
    std::vector<double> kk((N + 1) * n);
    for (std::size_t p = 0; p < n; ++p) {
        double lk = 0.0;
        kk[p] = 1.0;
        const double* dB = ex.noise.increments(p);
        for (std::size_t s = 0; s < N; ++s) {
            lk += -beta * dB[s] - 0.5 * beta * beta * dt - comp * dt;
            const std::uint32_t* dN = ex.noise.counts(p, s);
            for (std::size_t j = 0; j < M; ++j) lk += static_cast<double>(dN[j]) * logc[j];
            const double val = std::exp(lk);
            if (!(val > 0.0) || !std::isfinite(val))
                throw SolverError("auxiliary process k is not positive at " +
                                  location(p, ex.grid.time(s + 1), y1, ex.info.nodes()[node].y2));
            kk[(s + 1) * n + p] = val;
        }
    }
    return kk;
}

// du = (-k K - u [sum_j lambda_j g_j^2 / (1 + g_j) + beta^2] - beta v
//       - sum_j lambda_j g_j w_j) dt + v dB + sum_j w_j dN~_j,
// u(T) = theta k(T) K(T). The exact solution is u = (theta + T - t) K k.
inline ConsumptionNodeState solve_consumption_bsde(const ConsumptionModel& m, const Experiment& ex, std::size_t node,
                                                   AdjointMethod method = AdjointMethod::exact,
                                                   const LsmcOptions& opt = {}) {
    const std::size_t n = ex.n_paths(), N = ex.steps(), M = m.jumps().size();
    const double T = ex.grid.horizon, theta = m.theta();
    const Node& nd = ex.info.nodes()[node];
    const double beta = m.beta(nd.y1);
    ConsumptionNodeState st;
    st.n_paths = n;
    st.steps = N;
    st.marks = M;
    st.k = simulate_consumption_k(m, ex, node);
    std::vector<double> K((N + 1) * n), D((N + 1) * n);
    for (std::size_t s = 0; s <= N; ++s)
        for (std::size_t p = 0; p < n; ++p) K[s * n + p] = ex.node_kernel(p, s, node, &D[s * n + p]);
    std::vector<double> g(M);
    double jump_rate = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        g[j] = m.relative_jump(nd.y1, j);
        jump_rate += m.jumps().marks[j].lambda * g[j] * g[j] / (1.0 + g[j]);
    }
    st.u.resize((N + 1) * n);
    st.h.resize((N + 1) * n);
    st.v.resize(N * n);
    st.w.resize(N * n * M);
    if (method == AdjointMethod::exact) {
        for (std::size_t s = 0; s <= N; ++s) {
            const double tau = theta + T - ex.grid.time(s);
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t i = s * n + p;
                st.h[i] = tau * K[i];
                st.u[i] = st.h[i] * st.k[i];
                if (s == N) continue;
                st.v[i] = st.k[i] * (tau * D[i] - st.h[i] * beta);
                for (std::size_t j = 0; j < M; ++j) st.w[i * M + j] = -st.k[i] * st.h[i] * g[j] / (1.0 + g[j]);
            }
        }
        return st;
    }
    LsmcProblem pb;
    pb.noise = &ex.noise;
    const bool inf1 = ex.info.informed(1);
    const bool inf2 = ex.info.informed(2) && ex.info.coupling() == Coupling::independent;
    pb.n_features = 1 + (inf1 ? 1 : 0) + (inf2 ? 1 : 0);
    pb.features.resize(N * n * pb.n_features);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t p = 0; p < n; ++p) {
            double* f = pb.features.data() + (s * n + p) * pb.n_features;
            std::size_t c = 0;
            f[c++] = st.k[s * n + p];
            if (inf1) f[c++] = ex.signals.signal(1, p)[s];
            if (inf2) f[c++] = ex.signals.signal(2, p)[s];
        }
    if (ex.info.any_informed()) pb.kernel.assign(K.begin(), K.begin() + static_cast<std::ptrdiff_t>(N * n));
    pb.terminal.resize(n);
    for (std::size_t p = 0; p < n; ++p) pb.terminal[p] = theta * st.k[N * n + p] * K[N * n + p];
    const auto& marks = m.jumps().marks;
    pb.driver = [&](std::size_t s, std::size_t p, double u, double v, const double* w) {
        double F = -st.k[s * n + p] * K[s * n + p] - u * (jump_rate + beta * beta) - beta * v;
        for (std::size_t j = 0; j < M; ++j) F -= marks[j].lambda * g[j] * w[j];
        return F;
    };
    const NodeAdjoint sol = solve_adjoint_lsmc(pb, opt);
    st.u = sol.p;
    st.v = sol.q;
    st.w = sol.r;
    for (std::size_t i = 0; i < st.u.size(); ++i) st.h[i] = st.u[i] / st.k[i];
    return st;
}

inline TransformedConsumptionState solve_consumption_bsde(const ConsumptionModel& m, const Experiment& ex,
                                                          AdjointMethod method = AdjointMethod::exact,
                                                          const LsmcOptions& opt = {}) {
    TransformedConsumptionState all(ex.nodes());
    parallel_for(ex.nodes(), [&](std::size_t node) { all[node] = solve_consumption_bsde(m, ex, node, method, opt); });
    return all;
}

// Adjoint of the consumption game along (x, kernels): p = h / x,
// q = ((theta + T - t) D - h beta) / x, r_j = -p g_j / (1 + g_j), with
// h = (theta + T - t) K. Player 2 carries the negated triple.
inline void consumption_adjoint(const ConsumptionModel& m, double T, int player, double t, double x, double y1,
                                double K, double D, double& p, double& q, double* r) {
    const double tau = m.theta() + T - t;
    const double h = tau * K;
    const double sign = player == 1 ? 1.0 : -1.0;
    p = sign * h / x;
    q = sign * (tau * D - h * m.beta(y1)) / x;
    for (std::size_t j = 0; j < m.jumps().size(); ++j) {
        const double g = m.relative_jump(y1, j);
        r[j] = -p * g / (1.0 + g);
    }
}

// h(t, y) = theta E[delta_Y(y) | F_t]
inline double explicit_portfolio_adjoint(const InsiderSignal& s, double theta, double t, double Yt, double y) {
    return theta * cond_delta(s, t, Yt, y);
}

// Portfolio adjoint from h = theta K: p = theta K / x, q = theta (D - K pi beta) / x.
inline void portfolio_adjoint(const PortfolioModel& m, int player, double x, double y, double pi, double K, double D,
                              double& p, double& q) {
    const double sign = player == 1 ? 1.0 : -1.0;
    p = sign * m.theta() * K / x;
    q = sign * m.theta() * (D - K * pi * m.beta(y)) / x;
}

// ---------------------------------------------------------------------------
// General adjoint: dp_i = -dH_i/dx dt + q_i dB + r_i dN~, p_i(T) = g_i'(x(T)) K(T),
// along a fixed control pair at one node.

template <StateModel M>
NodeAdjoint solve_model_adjoint_lsmc(const M& m, const Experiment& ex, int player, std::size_t node,
                                     const std::vector<double>& x,   // [path * (N + 1) + k]
                                     const std::vector<double>& u1,  // [path * N + k]
                                     const std::vector<double>& u2, const LsmcOptions& opt = {}) {
    const std::size_t n = ex.n_paths(), N = ex.steps();
    const Node& nd = ex.info.nodes()[node];
    std::vector<double> K((N + 1) * n);
    for (std::size_t s = 0; s <= N; ++s)
        for (std::size_t p = 0; p < n; ++p) K[s * n + p] = ex.node_kernel(p, s, node);
    LsmcProblem pb;
    pb.noise = &ex.noise;
    const bool inf1 = ex.info.informed(1);
    const bool inf2 = ex.info.informed(2) && ex.info.coupling() == Coupling::independent;
    pb.n_features = 1 + (inf1 ? 1 : 0) + (inf2 ? 1 : 0);
    pb.features.resize(N * n * pb.n_features);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t p = 0; p < n; ++p) {
            double* f = pb.features.data() + (s * n + p) * pb.n_features;
            std::size_t c = 0;
            f[c++] = x[p * (N + 1) + s];
            if (inf1) f[c++] = ex.signals.signal(1, p)[s];
            if (inf2) f[c++] = ex.signals.signal(2, p)[s];
        }
    if (ex.info.any_informed()) pb.kernel.assign(K.begin(), K.begin() + static_cast<std::ptrdiff_t>(N * n));
    pb.terminal.resize(n);
    for (std::size_t p = 0; p < n; ++p)
        pb.terminal[p] = m.terminal_slope(player, x[p * (N + 1) + N], nd.y1, nd.y2) * K[N * n + p];
    pb.driver = [&](std::size_t s, std::size_t p, double pv, double qv, const double* rv) {
        const StatePoint sp{ex.grid.time(s), x[p * (N + 1) + s], u1[p * N + s], u2[p * N + s], nd.y1, nd.y2};
        return -hamiltonian_partials(m, player, sp, pv, qv, rv, K[s * n + p]).dx;
    };
    return solve_adjoint_lsmc(pb, opt);
}

}  // namespace insider
