#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "errors.hpp"
#include "models.hpp"
#include "sde.hpp"

namespace insider {

struct HamiltonianEval {
    int player = 1;
    double value = 0.0;
    double dx = 0.0;
    double du1 = 0.0;
    double du2 = 0.0;
};

template <class M>
concept AnalyticHamiltonian = requires(const M& m, int i, const StatePoint& s, const double* r) {
    { m.hamiltonian_partials(i, s, 0.0, 0.0, r, 0.0) } -> std::convertible_to<HamiltonianPartials>;
};

// H_i = K f_i + b p + sigma q + sum_j gamma_j r_j lambda_j
template <StateModel M>
double hamiltonian_value(const M& m, int player, const StatePoint& s, double p, double q, const double* r,
                         double K) {
    double h = K * m.running(player, s) + m.drift(s) * p + m.diffusion(s) * q;
    const auto& marks = m.jumps().marks;
    for (std::size_t j = 0; j < marks.size(); ++j) h += m.jump(s, j) * r[j] * marks[j].lambda;
    if (!std::isfinite(h))
        throw EvaluationError("non-finite Hamiltonian at t = " + std::to_string(s.t) + ", x = " + std::to_string(s.x));
    return h;
}

inline double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

// Central differences of H_i in x, u1 and u2.
template <StateModel M>
HamiltonianPartials fd_partials(const M& m, int player, const StatePoint& s, double p, double q, const double* r,
                                double K) {
    auto diff = [&](double StatePoint::*field) {
        const double h = fd_step(s.*field);
        StatePoint a = s, b = s;
        a.*field += h;
        b.*field -= h;
        return (hamiltonian_value(m, player, a, p, q, r, K) - hamiltonian_value(m, player, b, p, q, r, K)) /
               (2.0 * h);
    };
    return {diff(&StatePoint::x), diff(&StatePoint::u1), diff(&StatePoint::u2)};
}

template <StateModel M>
HamiltonianPartials hamiltonian_partials(const M& m, int player, const StatePoint& s, double p, double q,
                                         const double* r, double K) {
    if constexpr (AnalyticHamiltonian<M>) {
        const HamiltonianPartials h = m.hamiltonian_partials(player, s, p, q, r, K);
        if (!std::isfinite(h.dx) || !std::isfinite(h.du1) || !std::isfinite(h.du2))
            throw EvaluationError("non-finite Hamiltonian partial at t = " + std::to_string(s.t));
        return h;
    } else {
        return fd_partials(m, player, s, p, q, r, K);
    }
}

template <StateModel M>
HamiltonianEval eval_hamiltonian(const M& m, int player, const StatePoint& s, double p, double q, const double* r,
                                 double K) {
    const double v = hamiltonian_value(m, player, s, p, q, r, K);
    const HamiltonianPartials d = hamiltonian_partials(m, player, s, p, q, r, K);
    return {player, v, d.dx, d.du1, d.du2};
}

// ---------------------------------------------------------------------------
// Concavity scans

enum class Envelope { sup, inf };
enum class Shape { concave, convex, affine };

struct ConcavityRow {
    double x = 0.0;
    double second_difference = 0.0;
    bool holds = true;
};

struct ConcavityReport {
    std::string name;
    std::vector<ConcavityRow> rows;
    double worst = -std::numeric_limits<double>::infinity();  // largest signed violation
    double worst_x = 0.0;
    bool holds = true;
};

inline constexpr double concavity_tolerance = 1e-9;
inline constexpr std::size_t scan_control_points = 201;

// sup or inf over v in [lo, hi] of h(v): grid search refined by Brent.
inline double envelope_value(const std::function<double(double)>& h, double lo, double hi, Envelope env,
                             std::size_t points = scan_control_points) {
    const double sign = env == Envelope::sup ? -1.0 : 1.0;  // minimize sign * h
    auto obj = [&](double v) { return sign * h(v); };
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        const double v = lo + step * static_cast<double>(i);
        const double f = obj(v);
        if (f < best_val) {
            best_val = f;
            best = i;
        }
    }
    const double a = lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double b = std::min(hi, lo + step * static_cast<double>(best + 1));
    const auto r = boost::math::tools::brent_find_minima(obj, a, b, std::numeric_limits<double>::digits);
    return sign * std::min(best_val, r.second);
}

// Second differences of a map on an x-grid, checked for the requested shape.
inline ConcavityReport shape_scan(std::string name, const std::function<double(double)>& F,
                                  const std::vector<double>& xs, Shape shape) {
    ConcavityReport rep;
    rep.name = std::move(name);
    if (xs.size() < 3) return rep;
    std::vector<double> vals(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = F(xs[i]);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double hl = xs[i] - xs[i - 1], hr = xs[i + 1] - xs[i];
        const double d2 = 2.0 * (hl * vals[i + 1] - (hl + hr) * vals[i] + hr * vals[i - 1]) / (hl * hr * (hl + hr));
        double violation = 0.0;
        if (shape == Shape::concave) violation = d2 - concavity_tolerance;
        if (shape == Shape::convex) violation = -d2 - concavity_tolerance;
        if (shape == Shape::affine) violation = std::abs(d2) - concavity_tolerance;
        ConcavityRow row{xs[i], d2, violation <= 0.0};
        if (violation > rep.worst) {
            rep.worst = violation;
            rep.worst_x = xs[i];
        }
        rep.holds = rep.holds && row.holds;
        rep.rows.push_back(row);
    }
    return rep;
}

// Envelope x -> sup_v H(x, v) (or inf) over the control box, then a shape scan.
inline ConcavityReport concavity_scan(std::string name, const std::function<double(double, double)>& H, double lo,
                                      double hi, Envelope env, Shape shape, const std::vector<double>& xs) {
    auto F = [&](double x) { return envelope_value([&](double v) { return H(x, v); }, lo, hi, env); };
    return shape_scan(std::move(name), F, xs, shape);
}

}  // namespace insider
