#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "sde.hpp"

namespace insider {

// c0 + c1 y
struct AffineCoefficient {
    double c0 = 0.0;
    double c1 = 0.0;
    double operator()(double y) const { return c0 + c1 * y; }
    bool operator==(const AffineCoefficient&) const = default;
};

// First derivatives of H_i at one point.
struct HamiltonianPartials {
    double dx = 0.0;
    double du1 = 0.0;
    double du2 = 0.0;
};

// dX = (alpha + mu - c) X dt + beta X dB + int gamma zeta X N~(dt, dzeta),
// J = E[int log(c X) + mu^2 / 2 dt + theta log X(T)]. Player 1 picks c and
// maximizes J, player 2 picks mu and minimizes it (J2 = -J). Coefficients
// are affine in y1.
class ConsumptionModel {
public:
    ConsumptionModel(AffineCoefficient alpha, AffineCoefficient beta, AffineCoefficient gamma, double x0,
                     double theta, JumpMeasure jumps = {})
        : alpha_(alpha), beta_(beta), gamma_(gamma), x0_(x0), theta_(theta), jumps_(std::move(jumps)) {
        if (!(x0 > 0.0)) throw ConfigError("consumption x0 must be positive");
        if (!(theta > 0.0)) throw ConfigError("consumption theta must be positive");
    }

    double alpha(double y1) const { return alpha_(y1); }
    double beta(double y1) const { return beta_(y1); }
    // relative jump size for mark j
    double relative_jump(double y1, std::size_t j) const { return gamma_(y1) * jumps_.marks[j].zeta; }
    double theta() const { return theta_; }

    double drift(const StatePoint& s) const { return (alpha_(s.y1) + s.u2 - s.u1) * s.x; }
    double diffusion(const StatePoint& s) const { return beta_(s.y1) * s.x; }
    double jump(const StatePoint& s, std::size_t j) const { return relative_jump(s.y1, j) * s.x; }
    double initial_state(double, double) const { return x0_; }
    const JumpMeasure& jumps() const { return jumps_; }
    Stepping stepping() const { return Stepping::geometric; }
    bool positive_state() const { return true; }

    double running(int player, const StatePoint& s) const {
        const double f = std::log(s.u1 * s.x) + 0.5 * s.u2 * s.u2;
        return player == 1 ? f : -f;
    }
    double terminal(int player, double x, double, double) const {
        return (player == 1 ? theta_ : -theta_) * std::log(x);
    }
    double terminal_slope(int player, double x, double, double) const {
        return (player == 1 ? theta_ : -theta_) / x;
    }

    HamiltonianPartials hamiltonian_partials(int player, const StatePoint& s, double p, double q, const double* r,
                                             double K) const {
        const double sign = player == 1 ? 1.0 : -1.0;
        const double a = alpha_(s.y1) + s.u2 - s.u1;
        double jumps = 0.0;
        for (std::size_t j = 0; j < jumps_.size(); ++j) jumps += relative_jump(s.y1, j) * r[j] * jumps_.marks[j].lambda;
        HamiltonianPartials h;
        h.dx = sign * K / s.x + a * p + beta_(s.y1) * q + jumps;
        h.du1 = sign * K / s.u1 - s.x * p;
        h.du2 = sign * s.u2 * K + s.x * p;
        return h;
    }

private:
    AffineCoefficient alpha_, beta_, gamma_;
    double x0_;
    double theta_;
    JumpMeasure jumps_;
};

// dX = pi X [(alpha + mu) dt + beta dB], J = E[int mu^2 / 2 dt + theta log X(T)].
// Player 1 picks pi (insider), player 2 picks mu (uninformed).
class PortfolioModel {
public:
    PortfolioModel(AffineCoefficient alpha, AffineCoefficient beta, double x0, double theta)
        : alpha_(alpha), beta_(beta), x0_(x0), theta_(theta) {
        if (!(x0 > 0.0)) throw ConfigError("portfolio x0 must be positive");
        if (!(theta > 0.0)) throw ConfigError("portfolio theta must be positive");
    }

    double alpha(double y) const { return alpha_(y); }
    double beta(double y) const { return beta_(y); }
    double theta() const { return theta_; }

    double drift(const StatePoint& s) const { return s.u1 * s.x * (alpha_(s.y1) + s.u2); }
    double diffusion(const StatePoint& s) const { return s.u1 * s.x * beta_(s.y1); }
    double jump(const StatePoint&, std::size_t) const { return 0.0; }
    double initial_state(double, double) const { return x0_; }
    const JumpMeasure& jumps() const { return jumps_; }
    Stepping stepping() const { return Stepping::geometric; }
    bool positive_state() const { return true; }

    double running(int player, const StatePoint& s) const {
        const double f = 0.5 * s.u2 * s.u2;
        return player == 1 ? f : -f;
    }
    double terminal(int player, double x, double, double) const {
        return (player == 1 ? theta_ : -theta_) * std::log(x);
    }
    double terminal_slope(int player, double x, double, double) const {
        return (player == 1 ? theta_ : -theta_) / x;
    }

    HamiltonianPartials hamiltonian_partials(int player, const StatePoint& s, double p, double q, const double*,
                                             double K) const {
        const double sign = player == 1 ? 1.0 : -1.0;
        const double a = alpha_(s.y1) + s.u2;
        const double b = beta_(s.y1);
        HamiltonianPartials h;
        h.dx = s.u1 * (a * p + b * q);
        h.du1 = s.x * (a * p + b * q);
        h.du2 = sign * s.u2 * K + s.u1 * s.x * p;
        return h;
    }

private:
    AffineCoefficient alpha_, beta_;
    double x0_;
    double theta_;
    JumpMeasure jumps_;
};

// Linear-quadratic game with
//   dX = (a X + b1 u1 + b2 u2) dt + sigma dB + sum_j g zeta_j N~_j,
//   f_i = -qx_i X^2 / 2 + l_i X - r_i u_i^2 / 2 + m_i u_i,
//   g_i = -s_i X^2 / 2 + kappa_i X.
// In zero-sum mode player 2's parameters enter J1 with reversed sign and
// J2 = -J1.
struct LqPlayer {
    double qx = 0.0;
    double l = 0.0;
    double r = 1.0;
    double m = 0.0;
    double s = 0.0;
    double kappa = 0.0;
    bool operator==(const LqPlayer&) const = default;
};

class LinearQuadraticModel {
public:
    LinearQuadraticModel(double a, double b1, double b2, double sigma, double jump_size, double x0, LqPlayer p1,
                         LqPlayer p2, bool zero_sum, JumpMeasure jumps = {})
        : a_(a), b1_(b1), b2_(b2), sigma_(sigma), g_(jump_size), x0_(x0), p_{p1, p2}, zero_sum_(zero_sum),
          jumps_(std::move(jumps)) {
        if (p1.r <= 0.0 || p2.r <= 0.0) throw ConfigError("lq control penalties r must be positive");
    }

    bool zero_sum() const { return zero_sum_; }
    double a() const { return a_; }
    double b(int player) const { return player == 1 ? b1_ : b2_; }
    const LqPlayer& params(int player) const { return p_[player - 1]; }

    double drift(const StatePoint& s) const { return a_ * s.x + b1_ * s.u1 + b2_ * s.u2; }
    double diffusion(const StatePoint&) const { return sigma_; }
    double jump(const StatePoint&, std::size_t j) const { return g_ * jumps_.marks[j].zeta; }
    double initial_state(double, double) const { return x0_; }
    const JumpMeasure& jumps() const { return jumps_; }
    Stepping stepping() const { return Stepping::euler; }
    bool positive_state() const { return false; }

    double running(int player, const StatePoint& s) const {
        if (zero_sum_) {
            const LqPlayer& a = p_[0];
            const LqPlayer& b = p_[1];
            const double f = -0.5 * a.qx * s.x * s.x + a.l * s.x - 0.5 * a.r * s.u1 * s.u1 + a.m * s.u1 +
                             0.5 * b.r * s.u2 * s.u2 - b.m * s.u2;
            return player == 1 ? f : -f;
        }
        const LqPlayer& q = p_[player - 1];
        const double u = player == 1 ? s.u1 : s.u2;
        return -0.5 * q.qx * s.x * s.x + q.l * s.x - 0.5 * q.r * u * u + q.m * u;
    }
    double terminal(int player, double x, double, double) const {
        const LqPlayer& q = zero_sum_ ? p_[0] : p_[player - 1];
        const double g = -0.5 * q.s * x * x + q.kappa * x;
        return (zero_sum_ && player == 2) ? -g : g;
    }
    double terminal_slope(int player, double x, double, double) const {
        const LqPlayer& q = zero_sum_ ? p_[0] : p_[player - 1];
        const double g = -q.s * x + q.kappa;
        return (zero_sum_ && player == 2) ? -g : g;
    }

private:
    double a_, b1_, b2_, sigma_, g_, x0_;
    LqPlayer p_[2];
    bool zero_sum_;
    JumpMeasure jumps_;
};

// Coefficients given as callables; convenient for small experiments.
struct FunctionalModel {
    std::function<double(const StatePoint&)> b = [](const StatePoint&) { return 0.0; };
    std::function<double(const StatePoint&)> sigma = [](const StatePoint&) { return 0.0; };
    std::function<double(const StatePoint&, std::size_t)> gamma = [](const StatePoint&, std::size_t) {
        return 0.0;
    };
    std::function<double(double, double)> x0 = [](double, double) { return 1.0; };
    std::function<double(int, const StatePoint&)> f = [](int, const StatePoint&) { return 0.0; };
    std::function<double(int, double, double, double)> g = [](int, double, double, double) { return 0.0; };
    std::function<double(int, double, double, double)> g_slope = [](int, double, double, double) {
        return 0.0;
    };
    JumpMeasure measure;
    Stepping scheme = Stepping::euler;
    bool positive = false;

    double drift(const StatePoint& s) const { return b(s); }
    double diffusion(const StatePoint& s) const { return sigma(s); }
    double jump(const StatePoint& s, std::size_t j) const { return gamma(s, j); }
    double initial_state(double y1, double y2) const { return x0(y1, y2); }
    const JumpMeasure& jumps() const { return measure; }
    Stepping stepping() const { return scheme; }
    bool positive_state() const { return positive; }
    double running(int player, const StatePoint& s) const { return f(player, s); }
    double terminal(int player, double x, double y1, double y2) const { return g(player, x, y1, y2); }
    double terminal_slope(int player, double x, double y1, double y2) const { return g_slope(player, x, y1, y2); }
};

}  // namespace insider
