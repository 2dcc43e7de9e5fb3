#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace insider {

// Y(t) = int_0^t psi(s) dB(s) on [0, T0], with psi sampled on a uniform grid
// and linearly interpolated between samples.
class InsiderSignal {
public:
    static constexpr std::size_t default_samples = 1001;

    static InsiderSignal constant(double c, double T0, double T, std::size_t samples = default_samples) {
        return linear(c, 0.0, T0, T, samples);
    }

    // psi(s) = a + b s
    static InsiderSignal linear(double a, double b, double T0, double T,
                                std::size_t samples = default_samples) {
        if (samples < 2) throw ConfigError("signal needs at least two psi samples");
        std::vector<double> v(samples);
        for (std::size_t i = 0; i < samples; ++i)
            v[i] = a + b * (T0 * static_cast<double>(i) / static_cast<double>(samples - 1));
        return InsiderSignal(std::move(v), T0, T);
    }

    // Samples at s_i = i T0 / (n - 1).
    static InsiderSignal table(std::vector<double> values, double T0, double T) {
        return InsiderSignal(std::move(values), T0, T);
    }

    InsiderSignal(std::vector<double> samples, double T0, double T)
        : T0_(T0), T_(T), samples_(std::move(samples)) {
        if (!(T0 > T)) throw ConfigError("signal horizon_T0 must exceed the control horizon T");
        if (!(T > 0.0)) throw ConfigError("control horizon T must be positive");
        if (samples_.size() < 2) throw ConfigError("signal needs at least two psi samples");
        for (double s : samples_)
            if (!std::isfinite(s)) throw ConfigError("signal psi must be finite");
        h_ = T0_ / static_cast<double>(samples_.size() - 1);
        tail_.assign(samples_.size(), 0.0);
        for (std::size_t i = samples_.size() - 1; i-- > 0;) {
            const double a = samples_[i], b = samples_[i + 1];
            tail_[i] = tail_[i + 1] + h_ / 3.0 * (a * a + a * b + b * b);
        }
    }

    // Remaining variance stays positive on [0, T]. Kernel evaluations at a
    // non-informative signal raise DomainError.
    bool informative() const { return variance_remaining(T_) > 0.0; }

    double horizon_T0() const { return T0_; }
    double control_horizon_T() const { return T_; }
    const std::vector<double>& samples() const { return samples_; }

    double psi(double t) const {
        check_time(t);
        const auto [i, f] = locate(t);
        if (i + 1 >= samples_.size()) return samples_.back();
        return samples_[i] + f * (samples_[i + 1] - samples_[i]);
    }

    // int_t^T0 psi^2 ds, exact for the interpolated psi.
    double variance_remaining(double t) const {
        check_time(t);
        const auto [i, f] = locate(t);
        if (i + 1 >= samples_.size()) return 0.0;
        const double a = samples_[i] + f * (samples_[i + 1] - samples_[i]);
        const double b = samples_[i + 1];
        const double len = (1.0 - f) * h_;
        return tail_[i + 1] + len / 3.0 * (a * a + a * b + b * b);
    }

    // v(t) with the degeneracy guard applied.
    double kernel_variance(double t) const {
        const double v = variance_remaining(t);
        if (!(v >= 1e-12 * tail_[0]) || v <= 0.0)
            throw DomainError("remaining signal variance is degenerate at t = " + std::to_string(t));
        return v;
    }

    bool operator==(const InsiderSignal& o) const {
        return T0_ == o.T0_ && T_ == o.T_ && samples_ == o.samples_;
    }

private:
    void check_time(double t) const {
        if (!(t >= 0.0 && t <= T0_)) throw DomainError("time outside [0, T0]: " + std::to_string(t));
    }

    std::pair<std::size_t, double> locate(double t) const {
        const double u = t / h_;
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= samples_.size() - 1) return {samples_.size() - 1, 0.0};
        return {i, u - static_cast<double>(i)};
    }

    double T0_;
    double T_;
    std::vector<double> samples_;
    double h_ = 0.0;
    std::vector<double> tail_;
};

inline double variance_remaining(const InsiderSignal& s, double t) { return s.variance_remaining(t); }

// Gaussian density of y given Y(t) with remaining variance v.
inline double gaussian_kernel(double v, double Yt, double y) {
    const double d = Yt - y;
    return std::exp(-d * d / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
}

inline double cond_delta(const InsiderSignal& s, double t, double Yt, double y) {
    return gaussian_kernel(s.kernel_variance(t), Yt, y);
}

inline double cond_malliavin_delta(const InsiderSignal& s, double t, double Yt, double y) {
    const double v = s.kernel_variance(t);
    return -gaussian_kernel(v, Yt, y) * (Yt - y) / v * s.psi(t);
}

// Two signals driven by the same Brownian motion. The product of their
// kernels is the joint conditional density only when the conditional
// covariance int_t^T0 psi1 psi2 ds vanishes for every t in [0, T].
class IndependentPair {
public:
    static constexpr double correlation_tolerance = 1e-9;

    IndependentPair(InsiderSignal a, InsiderSignal b) : first_(std::move(a)), second_(std::move(b)) {
        if (first_.horizon_T0() != second_.horizon_T0() ||
            first_.control_horizon_T() != second_.control_horizon_T())
            throw ConfigError("paired signals must share T0 and T");
        const double worst = max_conditional_correlation(first_, second_);
        if (worst > correlation_tolerance)
            throw ConfigError("paired signals are correlated (max conditional correlation " +
                              std::to_string(worst) + "); only independent pairs are supported");
    }

    const InsiderSignal& first() const { return first_; }
    const InsiderSignal& second() const { return second_; }

    // max over t in [0, T] of |int_t^T0 psi1 psi2| / sqrt(v1(t) v2(t))
    static double max_conditional_correlation(const InsiderSignal& a, const InsiderSignal& b) {
        const double T0 = a.horizon_T0();
        const double T = a.control_horizon_T();
        std::vector<double> cuts;
        const auto add_cuts = [&](const InsiderSignal& s) {
            const std::size_t n = s.samples().size();
            for (std::size_t i = 0; i < n; ++i)
                cuts.push_back(T0 * static_cast<double>(i) / static_cast<double>(n - 1));
        };
        add_cuts(a);
        add_cuts(b);
        cuts.push_back(T);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        // Product of two linear pieces is quadratic on each merged cell: Simpson is exact.
        std::vector<double> tail(cuts.size(), 0.0);
        for (std::size_t i = cuts.size() - 1; i-- > 0;) {
            const double l = cuts[i], r = cuts[i + 1], m = 0.5 * (l + r);
            const double prod = (a.psi(l) * b.psi(l) + 4.0 * a.psi(m) * b.psi(m) + a.psi(r) * b.psi(r));
            tail[i] = tail[i + 1] + (r - l) / 6.0 * prod;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < cuts.size() && cuts[i] <= T; ++i) {
            const double den = std::sqrt(a.variance_remaining(cuts[i]) * b.variance_remaining(cuts[i]));
            worst = std::max(worst, std::abs(tail[i]) / den);
        }
        return worst;
    }

private:
    InsiderSignal first_;
    InsiderSignal second_;
};

inline double pair_cond_delta(const IndependentPair& pair, double t, double Y1t, double Y2t, double y1,
                              double y2) {
    return cond_delta(pair.first(), t, Y1t, y1) * cond_delta(pair.second(), t, Y2t, y2);
}

}  // namespace insider
