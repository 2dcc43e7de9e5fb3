#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "information.hpp"

namespace insider {

// F_t-information available to a control at step k of one path.
struct PathState {
    std::size_t path = 0;
    std::size_t step = 0;
    double t = 0.0;
    double Y1 = 0.0;
    double Y2 = 0.0;
    double B = 0.0;
    const PathKernels* kernels = nullptr;
};

enum class Adaptedness { insider, uninformed };

struct ControlBox {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool operator==(const ControlBox&) const = default;
};

// u_i(t, y_i) for one player, possibly also depending on the F_t path data.
// fill() writes the values on the player's own y-grid; at() evaluates one
// arbitrary y, used for realized substitution y = Y.
class ControlField {
public:
    using Fill = std::function<void(const PathState&, std::span<double>)>;
    using Pointwise = std::function<double(const PathState&, double)>;

    ControlField() = default;

    static ControlField rule(int player, Adaptedness a, const YGrid& own, Pointwise at) {
        auto fill = [nodes = own.nodes, at](const PathState& ps, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(ps, nodes[i]);
        };
        return policy(player, a, std::move(fill), std::move(at));
    }

    static ControlField policy(int player, Adaptedness a, Fill fill, Pointwise at) {
        ControlField c;
        c.player_ = player;
        c.adapted_ = a;
        auto impl = std::make_shared<Impl>();
        impl->fill = std::move(fill);
        impl->at = std::move(at);
        c.impl_ = std::move(impl);
        return c;
    }

    static ControlField constant(int player, double value) {
        return policy(
            player, Adaptedness::uninformed,
            [value](const PathState&, std::span<double> out) { std::fill(out.begin(), out.end(), value); },
            [value](const PathState&, double) { return value; });
    }

    // u = k0 + kt t + ky y
    static ControlField affine(int player, double k0, double kt, double ky, const YGrid& own) {
        const Adaptedness a = ky == 0.0 ? Adaptedness::uninformed : Adaptedness::insider;
        return rule(player, a, own, [=](const PathState& ps, double y) { return k0 + kt * ps.t + ky * y; });
    }

    // values[k * own.size() + i] on steps k = 0..N-1, linear in y between
    // nodes and flat beyond the ends.
    static ControlField table(int player, Adaptedness a, const YGrid& own, std::vector<double> values) {
        const std::size_t m = own.size();
        if (m == 0 || values.size() % m != 0) throw ConfigError("control table shape mismatch");
        auto vals = std::make_shared<const std::vector<double>>(std::move(values));
        auto nodes = own.nodes;
        auto fill = [vals, m](const PathState& ps, std::span<double> out) {
            std::copy_n(vals->begin() + static_cast<std::ptrdiff_t>(ps.step * m), m, out.begin());
        };
        auto at = [vals, m, nodes](const PathState& ps, double y) {
            const double* row = vals->data() + ps.step * m;
            if (m == 1 || y <= nodes.front()) return row[0];
            if (y >= nodes.back()) return row[m - 1];
            const double h = (nodes.back() - nodes.front()) / static_cast<double>(m - 1);
            auto i = std::min(m - 2, static_cast<std::size_t>((y - nodes.front()) / h));
            const double f = (y - nodes[i]) / h;
            return row[i] + f * (row[i + 1] - row[i]);
        };
        return policy(player, a, std::move(fill), std::move(at));
    }

    // u + a * direction
    ControlField perturbed(const ControlField& direction, double a) const {
        if (direction.player_ != player_) throw PreconditionError("direction belongs to the other player");
        if (adapted_ == Adaptedness::uninformed && direction.adapted_ == Adaptedness::insider)
            throw PreconditionError("insider direction cannot perturb an uninformed control");
        ControlField c = *this;
        auto impl = std::make_shared<Impl>();
        impl->base = impl_;
        impl->direction = direction.impl_;
        impl->scale = a;
        c.impl_ = std::move(impl);
        return c;
    }

    ControlField shifted(double offset) const {
        return perturbed(constant(player_, 1.0), offset);
    }

    ControlField with_box(ControlBox box) const {
        ControlField c = *this;
        c.box_ = box;
        return c;
    }

    int player() const { return player_; }
    Adaptedness adaptedness() const { return adapted_; }
    const ControlBox& box() const { return box_; }
    const void* identity() const { return impl_.get(); }
    bool valid() const { return static_cast<bool>(impl_); }

    void fill(const PathState& ps, std::span<double> out) const { fill_impl(*impl_, ps, out); }
    double at(const PathState& ps, double y) const { return at_impl(*impl_, ps, y); }

    struct Impl {
        Fill fill;
        Pointwise at;
        std::shared_ptr<const Impl> base;
        std::shared_ptr<const Impl> direction;
        double scale = 0.0;
    };
    const std::shared_ptr<const Impl>& impl() const { return impl_; }

private:
    static void fill_impl(const Impl& im, const PathState& ps, std::span<double> out) {
        if (!im.base) {
            im.fill(ps, out);
            return;
        }
        fill_impl(*im.base, ps, out);
        std::vector<double> d(out.size());
        fill_impl(*im.direction, ps, d);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += im.scale * d[i];
    }
    static double at_impl(const Impl& im, const PathState& ps, double y) {
        if (!im.base) return im.at(ps, y);
        return at_impl(*im.base, ps, y) + im.scale * at_impl(*im.direction, ps, y);
    }

    int player_ = 1;
    Adaptedness adapted_ = Adaptedness::uninformed;
    ControlBox box_;
    std::shared_ptr<const Impl> impl_;
};

}  // namespace insider
