#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace insider {

// Uniform grid t_k = k * dt on [0, T].
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    TimeGrid() = default;
    TimeGrid(double T, std::size_t n) : horizon(T), steps(n) {
        if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("time grid horizon must be positive");
        if (n < 1) throw ConfigError("time grid needs at least one step");
    }

    double dt() const { return horizon / static_cast<double>(steps); }
    double time(std::size_t k) const {
        return k == steps ? horizon : static_cast<double>(k) * dt();
    }
    std::size_t points() const { return steps + 1; }
};

// Quadrature nodes for one information parameter. A degenerate grid has a
// single node of weight one and stands for an uninformed player.
struct YGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    static YGrid uniform(double lo, double hi, std::size_t n) {
        if (n < 2) throw ConfigError("y-grid needs at least two nodes");
        if (!(hi > lo)) throw ConfigError("y-grid needs y_max > y_min");
        YGrid g;
        g.nodes.resize(n);
        g.weights.resize(n);
        const double h = (hi - lo) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes[i] = i + 1 == n ? hi : lo + static_cast<double>(i) * h;
            g.weights[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        }
        return g;
    }

    static YGrid degenerate() {
        YGrid g;
        g.nodes = {0.0};
        g.weights = {1.0};
        return g;
    }

    std::size_t size() const { return nodes.size(); }
    bool is_degenerate() const { return nodes.size() == 1; }

    // Trapezoid quadrature of sampled values on this grid.
    template <class Values>
    double integrate(const Values& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f[i];
        return s;
    }
};

}  // namespace insider
