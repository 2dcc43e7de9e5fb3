#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "donsker.hpp"
#include "errors.hpp"
#include "grid.hpp"

namespace insider {

// What one player knows beyond F_t: nothing, or a Gaussian signal whose
// value is resolved on a quadrature grid.
struct PlayerInformation {
    std::optional<InsiderSignal> signal;
    YGrid grid = YGrid::degenerate();

    static PlayerInformation uninformed() { return {}; }
    static PlayerInformation insider(InsiderSignal s, YGrid g) {
        if (g.is_degenerate()) throw ConfigError("insider grid needs at least two nodes");
        return {std::move(s), std::move(g)};
    }
    bool informed() const { return signal.has_value(); }
};

enum class Coupling { independent, shared };

// One quadrature node of the (y1, y2) parameter space. opponent_weight[i] is
// the weight applied when integrating out the other player's parameter in
// player i's first-order condition.
struct Node {
    double y1 = 0.0;
    double y2 = 0.0;
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    double weight = 1.0;
    double opponent_weight[2] = {1.0, 1.0};
};

// Conditional kernels along one path, per time index and node.
struct PathKernels {
    std::size_t points = 0;
    std::size_t nodes = 0;
    std::size_t own[2] = {1, 1};
    std::vector<double> K, D;        // [k * nodes + n]
    std::vector<double> Kown[2];     // [k * own + i]
    std::vector<double> Down[2];

    double kernel(std::size_t k, std::size_t n) const { return K[k * nodes + n]; }
    double malliavin(std::size_t k, std::size_t n) const { return D[k * nodes + n]; }
    double own_kernel(int player, std::size_t k, std::size_t i) const {
        return Kown[player - 1][k * own[player - 1] + i];
    }
    double own_malliavin(int player, std::size_t k, std::size_t i) const {
        return Down[player - 1][k * own[player - 1] + i];
    }
};

class InformationStructure {
public:
    // Nobody informed: a single node of weight one.
    InformationStructure() { nodes_.push_back(Node{}); }

    static InformationStructure independent(PlayerInformation p1, PlayerInformation p2) {
        if (p1.informed() && p2.informed()) IndependentPair check(*p1.signal, *p2.signal);
        InformationStructure s;
        s.nodes_.clear();
        s.coupling_ = Coupling::independent;
        s.players_[0] = std::move(p1);
        s.players_[1] = std::move(p2);
        const YGrid& g1 = s.players_[0].grid;
        const YGrid& g2 = s.players_[1].grid;
        for (std::size_t a = 0; a < g1.size(); ++a)
            for (std::size_t b = 0; b < g2.size(); ++b) {
                Node n;
                n.y1 = g1.nodes[a];
                n.y2 = g2.nodes[b];
                n.i1 = a;
                n.i2 = b;
                n.weight = g1.weights[a] * g2.weights[b];
                n.opponent_weight[0] = g2.weights[b];
                n.opponent_weight[1] = g1.weights[a];
                s.nodes_.push_back(n);
            }
        return s;
    }

    // Both players observe the same signal: Y1 = Y2 = Y.
    static InformationStructure shared(InsiderSignal sig, YGrid g) {
        InformationStructure s;
        s.nodes_.clear();
        s.coupling_ = Coupling::shared;
        s.players_[0] = PlayerInformation::insider(sig, g);
        s.players_[1] = PlayerInformation::insider(std::move(sig), std::move(g));
        const YGrid& grid = s.players_[0].grid;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            Node n;
            n.y1 = n.y2 = grid.nodes[i];
            n.i1 = n.i2 = i;
            n.weight = grid.weights[i];
            s.nodes_.push_back(n);
        }
        return s;
    }

    Coupling coupling() const { return coupling_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const PlayerInformation& player(int i) const { return players_[i - 1]; }
    bool informed(int i) const { return players_[i - 1].informed(); }
    const YGrid& own_grid(int i) const { return players_[i - 1].grid; }
    std::size_t own_size(int i) const { return players_[i - 1].grid.size(); }
    std::size_t own_index(int i, const Node& n) const { return i == 1 ? n.i1 : n.i2; }
    bool any_informed() const { return informed(1) || informed(2); }

    // Signal horizon shared by all informed players; 0 when nobody is informed.
    double signal_horizon() const {
        if (informed(1)) return players_[0].signal->horizon_T0();
        if (informed(2)) return players_[1].signal->horizon_T0();
        return 0.0;
    }

    // Y1 and Y2 hold the signal paths on the time grid (ignored for
    // uninformed players).
    void fill_kernels(const TimeGrid& grid, const double* Y1, const double* Y2, PathKernels& out) const {
        const std::size_t P = grid.points();
        out.points = P;
        out.nodes = nodes_.size();
        const double* Y[2] = {Y1, Y2};
        for (int p = 0; p < 2; ++p) {
            const PlayerInformation& info = players_[p];
            const std::size_t m = info.grid.size();
            out.own[p] = m;
            out.Kown[p].assign(P * m, 1.0);
            out.Down[p].assign(P * m, 0.0);
            if (!info.informed()) continue;
            for (std::size_t k = 0; k < P; ++k) {
                const double t = grid.time(k);
                const double v = info.signal->kernel_variance(t);
                const double psi = info.signal->psi(t);
                for (std::size_t i = 0; i < m; ++i) {
                    const double y = info.grid.nodes[i];
                    const double K = gaussian_kernel(v, Y[p][k], y);
                    out.Kown[p][k * m + i] = K;
                    out.Down[p][k * m + i] = -K * (Y[p][k] - y) / v * psi;
                }
            }
        }
        out.K.resize(P * nodes_.size());
        out.D.resize(P * nodes_.size());
        for (std::size_t k = 0; k < P; ++k)
            for (std::size_t n = 0; n < nodes_.size(); ++n) {
                const Node& nd = nodes_[n];
                const double K1 = out.Kown[0][k * out.own[0] + nd.i1];
                const double D1 = out.Down[0][k * out.own[0] + nd.i1];
                if (coupling_ == Coupling::shared) {
                    out.K[k * out.nodes + n] = K1;
                    out.D[k * out.nodes + n] = D1;
                } else {
                    const double K2 = out.Kown[1][k * out.own[1] + nd.i2];
                    const double D2 = out.Down[1][k * out.own[1] + nd.i2];
                    out.K[k * out.nodes + n] = K1 * K2;
                    out.D[k * out.nodes + n] = D1 * K2 + K1 * D2;
                }
            }
    }

private:
    Coupling coupling_ = Coupling::independent;
    PlayerInformation players_[2];
    std::vector<Node> nodes_;
};

}  // namespace insider
