#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adjoint.hpp"
#include "control.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "simulate.hpp"

namespace insider {

struct EquilibriumSolution {
    ControlField u1;
    ControlField u2;
    std::vector<double> u1_mean;  // path averages, [k * own1 + i], k = 0..N-1
    std::vector<double> u2_mean;  // [k * own2 + i]
    std::vector<double> h_mean;   // [k * own1 + i], opponent parameter integrated out
    std::size_t iterations = 0;
    std::vector<std::pair<std::string, double>> diagnostics;
};

// ---------------------------------------------------------------------------
// Consumption

// c*(t, y1) = E[int K dy2] / E[int h dy2],  mu*(t, y2) = -E[int h dy1] / E[int K dy1]
inline EquilibriumSolution consumption_equilibrium(const ConsumptionModel& m, const Experiment& ex,
                                                   AdjointMethod method = AdjointMethod::exact,
                                                   const LsmcOptions& opt = {}, ControlBox box1 = {},
                                                   ControlBox box2 = {}) {
    const std::size_t n = ex.n_paths(), N = ex.steps(), nodes = ex.nodes();
    std::vector<double> EK(nodes * N), EH(nodes * N);
    parallel_for(nodes, [&](std::size_t node) {
        const ConsumptionNodeState st = solve_consumption_bsde(m, ex, node, method, opt);
        for (std::size_t k = 0; k < N; ++k) {
            double sk = 0.0, sh = 0.0;
            for (std::size_t p = 0; p < n; ++p) {
                sk += ex.node_kernel(p, k, node);
                sh += st.h[k * n + p];
            }
            EK[node * N + k] = sk / static_cast<double>(n);
            EH[node * N + k] = sh / static_cast<double>(n);
        }
    });
    const std::size_t m1 = ex.info.own_size(1), m2 = ex.info.own_size(2);
    std::vector<double> k1(N * m1, 0.0), h1(N * m1, 0.0), k2(N * m2, 0.0), h2(N * m2, 0.0);
    for (std::size_t node = 0; node < nodes; ++node) {
        const Node& nd = ex.info.nodes()[node];
        for (std::size_t k = 0; k < N; ++k) {
            k1[k * m1 + nd.i1] += nd.opponent_weight[0] * EK[node * N + k];
            h1[k * m1 + nd.i1] += nd.opponent_weight[0] * EH[node * N + k];
            k2[k * m2 + nd.i2] += nd.opponent_weight[1] * EK[node * N + k];
            h2[k * m2 + nd.i2] += nd.opponent_weight[1] * EH[node * N + k];
        }
    }
    EquilibriumSolution sol;
    sol.u1_mean.resize(N * m1);
    sol.u2_mean.resize(N * m2);
    double min_den = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t i = 0; i < m1; ++i) {
            const double den = h1[k * m1 + i];
            min_den = std::min(min_den, den);
            if (!(den > 0.0))
                throw EquilibriumError("consumption denominator int h dy2 is not positive at t = " +
                                       std::to_string(ex.grid.time(k)) +
                                       ", y1 = " + std::to_string(ex.info.own_grid(1).nodes[i]));
            sol.u1_mean[k * m1 + i] = k1[k * m1 + i] / den;
        }
        for (std::size_t i = 0; i < m2; ++i) {
            const double den = k2[k * m2 + i];
            if (!(den > 0.0))
                throw EquilibriumError("consumption denominator int K dy1 is not positive at t = " +
                                       std::to_string(ex.grid.time(k)) +
                                       ", y2 = " + std::to_string(ex.info.own_grid(2).nodes[i]));
            sol.u2_mean[k * m2 + i] = -h2[k * m2 + i] / den;
        }
    }
    sol.h_mean = h1;
    const auto tag = [&](int i) { return ex.info.informed(i) ? Adaptedness::insider : Adaptedness::uninformed; };
    sol.u1 = ControlField::table(1, tag(1), ex.info.own_grid(1), sol.u1_mean).with_box(box1);
    sol.u2 = ControlField::table(2, tag(2), ex.info.own_grid(2), sol.u2_mean).with_box(box2);
    sol.diagnostics.emplace_back("min_consumption_denominator", min_den);
    return sol;
}

// ---------------------------------------------------------------------------
// Portfolio

// Which first-order equation fixes mu* given pi*:
//   foc:               mu int K dy + theta int pi K dy = 0
//   theorem:           mu int K dy + int pi K dy = 0
//   corollary_literal: mu + theta int pi K dy = 0
enum class MuForm { foc, theorem, corollary_literal };
enum class PortfolioSolve { linear, fixed_point };

struct PortfolioOptions {
    MuForm form = MuForm::foc;
    PortfolioSolve solve = PortfolioSolve::linear;
    double damping = 0.5;
    double tolerance = 1e-10;
    std::size_t max_iterations = 200;
    double beta_min = 1e-6;
};

// pi*(t, y) = (alpha + mu*) / beta^2 + (y - Y(t)) psi(t) / (beta v(t)) and the
// scalar mu*(t) solved per path and time step.
class PortfolioPolicy {
public:
    PortfolioPolicy(const PortfolioModel& m, const InformationStructure& info, const TimeGrid& grid,
                    PortfolioOptions opt = {})
        : m_(m), grid_(info.own_grid(1)), opt_(opt) {
        if (info.informed(2)) throw ConfigError("portfolio environment player must be uninformed");
        if (info.informed(1)) signal_ = *info.player(1).signal;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double b = m.beta(grid_.nodes[i]);
            if (!(std::abs(b) >= opt.beta_min))
                throw ConfigError("portfolio |beta| falls below beta_min at y = " + std::to_string(grid_.nodes[i]));
        }
        if (opt.damping <= 0.0 || opt.damping > 1.0) throw ConfigError("solver damping must lie in (0, 1]");
        (void)grid;
    }

    struct StepSolution {
        double mu = 0.0;
        std::size_t iterations = 0;
    };

    // (y - Y(t)) psi(t) / v(t), the Malliavin-to-kernel ratio.
    double malliavin_ratio(const PathState& ps, double y) const {
        if (!signal_) return 0.0;
        return (y - ps.Y1) * signal_->psi(ps.t) / signal_->kernel_variance(ps.t);
    }

    StepSolution mu(const PathState& ps) const {
        double SK = 0.0, Sa = 0.0, Sb = 0.0, Sd = 0.0;
        const double v = signal_ ? signal_->kernel_variance(ps.t) : 1.0;
        const double psi = signal_ ? signal_->psi(ps.t) : 0.0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            const double y = grid_.nodes[i];
            const double K = signal_ ? ps.kernels->own_kernel(1, ps.step, i) : 1.0;
            const double wK = grid_.weights[i] * K;
            const double b = m_.beta(y);
            SK += wK;
            Sa += wK * m_.alpha(y) / (b * b);
            Sb += wK / (b * b);
            Sd += wK * (signal_ ? (y - ps.Y1) * psi / v : 0.0) / b;
        }
        double A = SK, c = m_.theta();
        if (opt_.form == MuForm::theorem) c = 1.0;
        if (opt_.form == MuForm::corollary_literal) A = 1.0;
        if (opt_.solve == PortfolioSolve::linear) {
            const double den = A + c * Sb;
            if (!(std::abs(den) > 0.0)) throw EquilibriumError("singular linear equation for mu*");
            return {-c * (Sa + Sd) / den, 0};
        }
        // mu <- (1 - w) mu + w G(mu),  G(mu) = -c (Sa + mu Sb + Sd) / A
        double mu = 0.0, change = 0.0;
        for (std::size_t it = 1; it <= opt_.max_iterations; ++it) {
            const double next = (1.0 - opt_.damping) * mu + opt_.damping * (-c * (Sa + mu * Sb + Sd) / A);
            change = std::abs(next - mu);
            mu = next;
            if (!std::isfinite(mu)) break;
            if (change <= opt_.tolerance * std::max(1.0, std::abs(mu))) return {mu, it};
        }
        throw EquilibriumError("mu* fixed point did not converge at t = " + std::to_string(ps.t) + ", path " +
                               std::to_string(ps.path) + " (last change " + std::to_string(change) + ")");
    }

    double pi(const PathState& ps, double mu, double y) const {
        const double b = m_.beta(y);
        return (m_.alpha(y) + mu) / (b * b) + malliavin_ratio(ps, y) / b;
    }

    ControlField pi_field(ControlBox box = {}) const {
        const PortfolioPolicy self = *this;
        auto fill = [self](const PathState& ps, std::span<double> out) {
            const double mu = self.mu(ps).mu;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = self.pi(ps, mu, self.grid_.nodes[i]);
        };
        auto at = [self](const PathState& ps, double y) { return self.pi(ps, self.mu(ps).mu, y); };
        const Adaptedness a = signal_ ? Adaptedness::insider : Adaptedness::uninformed;
        return ControlField::policy(1, a, std::move(fill), std::move(at)).with_box(box);
    }

    ControlField mu_field(ControlBox box = {}) const {
        const PortfolioPolicy self = *this;
        auto fill = [self](const PathState& ps, std::span<double> out) {
            std::fill(out.begin(), out.end(), self.mu(ps).mu);
        };
        auto at = [self](const PathState& ps, double) { return self.mu(ps).mu; };
        return ControlField::policy(2, Adaptedness::uninformed, std::move(fill), std::move(at)).with_box(box);
    }

    const PortfolioOptions& options() const { return opt_; }

private:
    PortfolioModel m_;
    YGrid grid_;
    std::optional<InsiderSignal> signal_;
    PortfolioOptions opt_;
};

inline EquilibriumSolution portfolio_equilibrium(const PortfolioModel& m, const Experiment& ex,
                                                 const PortfolioOptions& opt = {}, ControlBox box1 = {},
                                                 ControlBox box2 = {}) {
    const PortfolioPolicy policy(m, ex.info, ex.grid, opt);
    const std::size_t n = ex.n_paths(), N = ex.steps(), m1 = ex.info.own_size(1);
    const std::size_t blocks = std::min<std::size_t>(n, 64);
    std::vector<std::vector<double>> pi_sum(blocks, std::vector<double>(N * m1, 0.0));
    std::vector<std::vector<double>> k_sum(blocks, std::vector<double>(N * m1, 0.0));
    std::vector<std::vector<double>> mu_sum(blocks, std::vector<double>(N, 0.0));
    std::vector<std::size_t> iters(blocks, 0);
    const YGrid& g = ex.info.own_grid(1);
    parallel_for(blocks, [&](std::size_t b) {
        PathKernels kern;
        for (std::size_t p = b * n / blocks; p < (b + 1) * n / blocks; ++p) {
            ex.kernels(p, kern);
            for (std::size_t k = 0; k < N; ++k) {
                const PathState ps = ex.state(p, k, &kern);
                const auto s = policy.mu(ps);
                iters[b] = std::max(iters[b], s.iterations);
                mu_sum[b][k] += s.mu;
                for (std::size_t i = 0; i < m1; ++i) {
                    pi_sum[b][k * m1 + i] += policy.pi(ps, s.mu, g.nodes[i]);
                    k_sum[b][k * m1 + i] += kern.own_kernel(1, k, i);
                }
            }
        }
    });
    EquilibriumSolution sol;
    sol.u1_mean.assign(N * m1, 0.0);
    sol.u2_mean.assign(N, 0.0);
    sol.h_mean.assign(N * m1, 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < N * m1; ++i) {
            sol.u1_mean[i] += pi_sum[b][i];
            sol.h_mean[i] += k_sum[b][i];
        }
        for (std::size_t k = 0; k < N; ++k) sol.u2_mean[k] += mu_sum[b][k];
        sol.iterations = std::max(sol.iterations, iters[b]);
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : sol.u1_mean) v *= inv;
    for (auto& v : sol.h_mean) v *= inv * m.theta();
    for (auto& v : sol.u2_mean) v *= inv;
    sol.u1 = policy.pi_field(box1);
    sol.u2 = policy.mu_field(box2);
    sol.diagnostics.emplace_back("fixed_point_iterations", static_cast<double>(sol.iterations));
    return sol;
}

}  // namespace insider
