#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "insider.hpp"

namespace insider {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2, exit_runtime_error = 3 };

struct RunOptions {
    std::string command = "all";  // donsker | simulate | solve | verify | all
    std::filesystem::path out = ".";
    bool quiet = false;
};

struct Failure {
    std::string check;
    std::string detail;
};

struct RunResult {
    int exit_code = exit_ok;
    std::vector<Failure> failures;
};

inline std::string failure_summary(const RunResult& r) {
    nlohmann::json j;
    j["status"] = r.exit_code == exit_ok ? "pass" : "fail";
    j["exit_code"] = r.exit_code;
    j["failures"] = nlohmann::json::array();
    for (const auto& f : r.failures) j["failures"].push_back({{"check", f.check}, {"detail", f.detail}});
    return j.dump();
}

// ---------------------------------------------------------------------------
// Scenario assembly

using GameModel = std::variant<ConsumptionModel, PortfolioModel, LinearQuadraticModel>;

struct Scenario {
    ScenarioConfig config;
    TimeGrid grid;
    InformationStructure info;
    JumpMeasure jumps;
    GameModel model;

    bool zero_sum() const { return config.kind != "custom-nash"; }
    bool custom() const { return config.kind.starts_with("custom"); }
};

inline YGrid default_ygrid(const ScenarioConfig& c, const InsiderSignal& s) {
    if (c.y_min && c.y_max) return YGrid::uniform(*c.y_min, *c.y_max, c.y_nodes);
    const double w = 8.0 * std::sqrt(s.variance_remaining(0.0));
    return YGrid::uniform(-w, w, c.y_nodes);
}

inline Scenario build_scenario(const ScenarioConfig& c) {
    const auto problems = validate(c);
    if (!problems.empty()) {
        std::string msg = "invalid scenario configuration:";
        for (const auto& e : problems) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    Scenario s{c, TimeGrid(c.horizon, c.steps), {}, JumpMeasure(c.marks), ConsumptionModel({}, {1, 0}, {}, 1, 1)};
    std::optional<InsiderSignal> sig1, sig2;
    if (c.signal1.kind == "gaussian") sig1 = make_signal(c.signal1, c.horizon);
    if (c.signal2.kind == "gaussian") sig2 = make_signal(c.signal2, c.horizon);
    for (const auto* sig : {&sig1, &sig2})
        if (*sig && !(*sig)->informative())
            throw ConfigError("signal has zero remaining variance at the control horizon");
    if (c.signal2.kind == "shared") {
        s.info = InformationStructure::shared(*sig1, default_ygrid(c, *sig1));
    } else {
        auto p1 = sig1 ? PlayerInformation::insider(*sig1, default_ygrid(c, *sig1)) : PlayerInformation::uninformed();
        auto p2 = sig2 ? PlayerInformation::insider(*sig2, default_ygrid(c, *sig2)) : PlayerInformation::uninformed();
        s.info = InformationStructure::independent(std::move(p1), std::move(p2));
    }
    if (c.kind == "consumption") {
        s.model = ConsumptionModel(make_coefficient(c.alpha), make_coefficient(c.beta), make_coefficient(c.gamma), c.x0,
                                   c.theta, s.jumps);
    } else if (c.kind == "portfolio") {
        s.model = PortfolioModel(make_coefficient(c.alpha), make_coefficient(c.beta), c.x0, c.theta);
    } else {
        const auto& k = c.custom;
        s.model = LinearQuadraticModel(k.a, k.b1, k.b2, k.sigma, k.jump_size, k.x0, k.p1, k.p2,
                                       c.kind == "custom-zero-sum", s.jumps);
    }
    return s;
}

inline PortfolioOptions portfolio_options(const ScenarioConfig& c) {
    PortfolioOptions o;
    o.form = c.corollary_literal       ? MuForm::corollary_literal
             : c.mu_form == "theorem"  ? MuForm::theorem
             : c.mu_form == "foc"      ? MuForm::foc
                                       : MuForm::corollary_literal;
    o.solve = c.portfolio_solve == "fixed_point" ? PortfolioSolve::fixed_point : PortfolioSolve::linear;
    o.damping = c.damping;
    o.tolerance = c.tolerance;
    o.max_iterations = c.max_iterations;
    o.beta_min = c.beta_min;
    return o;
}

namespace detail {

// Value of a per-player (k, own index) table on the row index i of the
// wider of the two player grids.
inline double pick(const std::vector<double>& v, std::size_t m, std::size_t k, std::size_t i, std::size_t M) {
    if (m == M) return v[k * m + i];
    if (m == 1) return v[k];
    return std::numeric_limits<double>::quiet_NaN();
}

inline std::size_t center_index(const YGrid& g) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (std::abs(g.nodes[i]) < std::abs(g.nodes[best])) best = i;
    return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pipeline

class Runner {
public:
    Runner(const ScenarioConfig& c, RunOptions opt, std::ostream& log)
        : sc_(build_scenario(c)), opt_(std::move(opt)), log_(log) {
        if (c.threads > 0) set_worker_count(c.threads);
    }

    RunResult run() {
        const std::string& cmd = opt_.command;
        if (cmd != "donsker" && cmd != "simulate" && cmd != "solve" && cmd != "verify" && cmd != "all")
            throw ConfigError("unknown subcommand '" + cmd + "'");
        std::filesystem::create_directories(opt_.out);
        ex_ = Experiment::create(sc_.grid, sc_.info, sc_.jumps, sc_.config.n_paths, sc_.config.seed);
        diag("n_paths", static_cast<double>(ex_.n_paths()));
        diag("steps", static_cast<double>(ex_.steps()));
        diag("nodes", static_cast<double>(ex_.nodes()));
        if (cmd == "donsker" || cmd == "all") donsker();
        if (cmd == "simulate" || cmd == "all") simulate();
        if (cmd == "solve" || cmd == "all") solve();
        if (cmd == "verify" || cmd == "all") verify();
        write_diagnostics();
        result_.exit_code = result_.failures.empty() ? exit_ok : exit_check_failed;
        return result_;
    }

private:
    void say(const std::string& s) {
        if (!opt_.quiet) log_ << s << '\n';
    }
    void diag(std::string key, double v) { diagnostics_.emplace_back(std::move(key), v); }
    void fail(std::string check, std::string detail) {
        result_.failures.push_back({std::move(check), std::move(detail)});
    }
    std::ofstream file(const std::string& name) {
        std::ofstream f(opt_.out / name, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + (opt_.out / name).string() + "'");
        return f;
    }

    template <class F>
    decltype(auto) visit(F&& f) {
        return std::visit(std::forward<F>(f), sc_.model);
    }

    // -- donsker -------------------------------------------------------------

    static double mass_at(const InsiderSignal& sig, const YGrid& g, double t, double Y) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * cond_delta(sig, t, Y, g.nodes[i]);
        return s;
    }

    void donsker() {
        double worst = 0.0, worst_realized = 0.0, worst_z = 0.0;
        bool wrote = false;
        for (int i = 1; i <= 2; ++i) {
            if (!sc_.info.informed(i)) continue;
            if (i == 2 && sc_.info.coupling() == Coupling::shared) continue;
            const InsiderSignal& sig = *sc_.info.player(i).signal;
            const YGrid& g = sc_.info.own_grid(i);
            std::optional<std::ofstream> out;
            std::optional<CsvWriter> csv;
            if (!wrote) {
                out.emplace(file("kernel.csv"));
                csv.emplace(*out, std::initializer_list<std::string_view>{"t", "y", "cond_delta",
                                                                           "cond_malliavin_delta"});
                wrote = true;
            }
            const std::size_t sample = std::min<std::size_t>(ex_.n_paths(), 200);
            for (std::size_t k = 0; k <= sc_.grid.steps; ++k) {
                const double t = sc_.grid.time(k);
                const double mass = mass_at(sig, g, t, 0.0);
                worst = std::max(worst, std::abs(mass - 1.0));
                for (std::size_t p = 0; p < sample; ++p) {
                    const double Y = ex_.signals.signal(i, p)[k];
                    const double m = mass_at(sig, g, t, Y);
                    worst_realized = std::max(worst_realized, std::abs(m - 1.0));
                }
                if (csv)
                    for (double y : g.nodes)
                        csv->row(t, y, cond_delta(sig, t, 0.0, y), cond_malliavin_delta(sig, t, 0.0, y));
            }
            // E[K(t, Y(t), y)] = K(0, 0, y) at the grid centre
            const double yc = g.nodes[detail::center_index(g)];
            const double K0 = cond_delta(sig, 0.0, 0.0, yc);
            for (std::size_t k = 1; k <= sc_.grid.steps; ++k) {
                std::vector<double> v(ex_.n_paths());
                for (std::size_t p = 0; p < ex_.n_paths(); ++p)
                    v[p] = cond_delta(sig, sc_.grid.time(k), ex_.signals.signal(i, p)[k], yc);
                const auto e = summarize(v);
                if (e.std_error > 0.0) worst_z = std::max(worst_z, std::abs(e.mean - K0) / e.std_error);
            }
        }
        diag("donsker_normalization_max_error", worst);
        diag("donsker_normalization_realized_max_error", worst_realized);
        diag("donsker_martingale_max_z", worst_z);
        if (worst > 1e-6 || worst_realized > 1e-6)
            fail("donsker_normalization", "kernel mass deviates from 1 by " +
                                              format_number(std::max(worst, worst_realized)));
        say("donsker: normalization error " + format_number(std::max(worst, worst_realized)));
    }

    // -- simulate ------------------------------------------------------------

    void simulate() {
        const auto& [u1, u2] = candidate();
        const std::size_t P = sc_.grid.points();
        const std::vector<double> X = visit([&](const auto& m) { return simulate_realized(m, ex_, u1, u2); });
        std::vector<double> xT(ex_.n_paths());
        for (std::size_t p = 0; p < ex_.n_paths(); ++p) xT[p] = X[p * P + P - 1];
        const auto e = summarize(xT);
        double ss = 0.0;
        for (double v : xT) ss += (v - e.mean) * (v - e.mean);
        diag("terminal_state_mean", e.mean);
        diag("terminal_state_std_error", e.std_error);
        diag("terminal_state_sd", xT.size() > 1 ? std::sqrt(ss / static_cast<double>(xT.size() - 1)) : 0.0);
        for (int i = 1; i <= 2; ++i) {
            if (!sc_.info.informed(i)) continue;
            std::vector<double> sq(ex_.n_paths());
            for (std::size_t p = 0; p < ex_.n_paths(); ++p) sq[p] = std::pow(ex_.signals.terminal(i, p), 2);
            const auto v = summarize(sq);
            diag("signal" + std::to_string(i) + "_terminal_variance", v.mean);
            diag("signal" + std::to_string(i) + "_terminal_variance_exact",
                 sc_.info.player(i).signal->variance_remaining(0.0));
        }
        if (sc_.config.dump_paths) {
            auto out = file("paths.csv");
            CsvWriter csv(out, {"path", "t", "y1", "y2", "x"});
            const std::size_t n = std::min(ex_.n_paths(), sc_.config.dump_paths_max);
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t k = 0; k < P; ++k)
                    csv.row(p, sc_.grid.time(k), ex_.signals.terminal(1, p), ex_.signals.terminal(2, p), X[p * P + k]);
        }
        say("simulate: E[X(T)] = " + format_number(e.mean) + " +- " + format_number(e.std_error));
    }

    // -- solve ---------------------------------------------------------------

    const std::pair<ControlField, ControlField>& candidate() {
        if (candidate_) return *candidate_;
        const auto& c = sc_.config;
        if (sc_.custom()) {
            const Preset a = Preset::parse(c.custom.u1), b = Preset::parse(c.custom.u2);
            auto u1 = ControlField::affine(1, a.args[0], a.args[1], a.args[2], sc_.info.own_grid(1)).with_box(c.box1);
            auto u2 = ControlField::affine(2, b.args[0], b.args[1], b.args[2], sc_.info.own_grid(2)).with_box(c.box2);
            if (c.candidate_offset != 0.0) u1 = u1.shifted(c.candidate_offset);
            candidate_.emplace(std::move(u1), std::move(u2));
            return *candidate_;
        }
        if (const auto* m = std::get_if<ConsumptionModel>(&sc_.model)) {
            const LsmcOptions lo{c.basis_degree, true};
            solution_ = consumption_equilibrium(*m, ex_, c.adjoint == "lsmc" ? AdjointMethod::lsmc : AdjointMethod::exact,
                                                lo, c.box1, c.box2);
        } else {
            solution_ = portfolio_equilibrium(std::get<PortfolioModel>(sc_.model), ex_, portfolio_options(c), c.box1,
                                              c.box2);
        }
        ControlField u1 = solution_->u1;
        if (c.candidate_offset != 0.0) u1 = u1.shifted(c.candidate_offset).with_box(c.box1);
        candidate_.emplace(std::move(u1), solution_->u2);
        return *candidate_;
    }

    void solve() {
        candidate();
        const auto& c = sc_.config;
        const std::size_t N = sc_.grid.steps, m1 = sc_.info.own_size(1), m2 = sc_.info.own_size(2);
        const std::size_t M = std::max(m1, m2);
        const YGrid& g = m1 >= m2 ? sc_.info.own_grid(1) : sc_.info.own_grid(2);
        auto out = file("equilibrium.csv");
        if (!solution_) {
            const auto& [u1, u2] = *candidate_;
            CsvWriter csv(out, {"t", "y", "u1_star", "u2_star"});
            std::vector<double> a(m1), b(m2);
            for (std::size_t k = 0; k < N; ++k) {
                PathState ps;
                ps.step = k;
                ps.t = sc_.grid.time(k);
                u1.fill(ps, a);
                u2.fill(ps, b);
                for (std::size_t i = 0; i < M; ++i)
                    csv.row(ps.t, g.nodes[i], detail::pick(a, m1, 0, i, M), detail::pick(b, m2, 0, i, M));
            }
            diag("candidate_from_config", 1.0);
            say("solve: candidate taken from the configuration");
            return;
        }
        const bool consumption = std::holds_alternative<ConsumptionModel>(sc_.model);
        CsvWriter csv(out, {"t", "y", consumption ? "c_star" : "pi_star", "mu_star", "h"});
        const auto& s = *solution_;
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t i = 0; i < M; ++i)
                csv.row(sc_.grid.time(k), g.nodes[i], detail::pick(s.u1_mean, m1, k, i, M),
                        detail::pick(s.u2_mean, m2, k, i, M), detail::pick(s.h_mean, m1, k, i, M));
        for (const auto& [key, v] : s.diagnostics) diag(key, v);
        if (consumption) {
            double worst = 0.0;
            for (std::size_t k = 0; k < N; ++k)
                for (std::size_t i = 0; i < m1; ++i)
                    worst = std::max(worst,
                                     std::abs(s.u1_mean[k * m1 + i] * (c.theta + c.horizon - sc_.grid.time(k)) - 1.0));
            diag("consumption_closed_form_max_relative_error", worst);
        } else {
            const auto [lo, hi] = std::minmax_element(s.u2_mean.begin(), s.u2_mean.end());
            diag("mu_star_min", *lo);
            diag("mu_star_max", *hi);
        }
        say("solve: equilibrium written");
    }

    // -- verify --------------------------------------------------------------

    void verify() {
        const auto& [u1, u2] = candidate();
        const auto& c = sc_.config;
        const FocReport foc = visit([&](const auto& m) { return foc_report(m, u1, u2); });
        write_foc(foc);
        for (int i = 1; i <= 2; ++i) {
            const std::string p = "_p" + std::to_string(i);
            diag("foc_rms" + p, foc.rms(i));
            diag("foc_scale_rms" + p, foc.scale_rms(i));
            diag("foc_relative" + p, foc.relative(i));
            if (!foc.pass(i, c.foc_relative_tolerance))
                fail("foc", "player " + std::to_string(i) + " relative residual " + format_number(foc.relative(i)) +
                                " exceeds " + format_number(c.foc_relative_tolerance));
        }
        say("verify: FOC relative residuals " + format_number(foc.relative(1)) + ", " + format_number(foc.relative(2)));
        visit([&](const auto& m) { concavity(m, foc, u1, u2); });

        auto out = file("verify.csv");
        CsvWriter csv(out, {"check", "player", "direction_id", "a", "J_mean", "J_stderr", "verdict"});
        const double T = sc_.grid.horizon;
        for (int i = 1; i <= 2; ++i) {
            const ControlField& u = i == 1 ? u1 : u2;
            const auto dirs =
                random_directions(i, u.adaptedness(), sc_.info.own_grid(i), T, c.directions, c.direction_bound, c.seed);
            const auto res =
                visit([&](const auto& m) { return gateaux_derivatives(m, ex_, i, u1, u2, dirs, c.gateaux_a); });
            std::size_t failed = 0;
            for (const auto& r : res) {
                csv.row("gateaux", i, r.direction, r.a, r.derivative, r.std_error, r.pass ? "pass" : "fail");
                if (!r.pass) ++failed;
            }
            diag("gateaux_failures_p" + std::to_string(i), static_cast<double>(failed));
            if (failed)
                fail("gateaux", "player " + std::to_string(i) + ": " + std::to_string(failed) + " of " +
                                    std::to_string(res.size()) + " directions have a nonzero derivative");
        }
        std::vector<ControlField> dirs[2];
        for (int i = 1; i <= 2; ++i) {
            const ControlField& u = i == 1 ? u1 : u2;
            dirs[i - 1] = random_directions(i, u.adaptedness(), sc_.info.own_grid(i), T, c.saddle_directions,
                                            c.direction_bound, c.seed);
        }
        const bool saddle = sc_.zero_sum();
        const OrderingReport ord = visit([&](const auto& m) {
            return ordering_check(m, ex_, u1, u2, dirs[0], dirs[1], c.magnitudes, saddle);
        });
        const char* name = saddle ? "saddle" : "nash";
        std::size_t violated = 0;
        for (const auto& r : ord.rows) {
            csv.row(name, r.player, r.direction, r.a, r.J, r.J_stderr, r.holds ? "pass" : "fail");
            if (!r.holds) ++violated;
        }
        diag(std::string(name) + "_J", ord.J);
        diag(std::string(name) + "_J_stderr", ord.J_stderr);
        diag(std::string(name) + "_worst_margin", ord.worst_margin);
        if (!ord.holds)
            fail(name, std::to_string(violated) + " deviations improve on the candidate, worst margin " +
                           format_number(ord.worst_margin) + " standard errors");
        say(std::string("verify: ") + name + " worst margin " + format_number(ord.worst_margin));
    }

    template <class M>
    FocReport foc_report(const M& m, const ControlField& u1, const ControlField& u2) {
        const auto& c = sc_.config;
        if constexpr (std::is_same_v<M, ConsumptionModel>) {
            if (c.foc_adjoint == "explicit") {
                const double T = sc_.grid.horizon;
                return foc_residuals(m, ex_, u1, u2,
                                     [&](int i, const PathState& ps, const Node& nd, double x, double K, double D,
                                         double, double, double& p, double& q, double* r) {
                                         consumption_adjoint(m, T, i, ps.t, x, nd.y1, K, D, p, q, r);
                                     });
            }
        } else if constexpr (std::is_same_v<M, PortfolioModel>) {
            if (c.foc_adjoint == "explicit")
                return foc_residuals(m, ex_, u1, u2,
                                     [&](int i, const PathState&, const Node& nd, double x, double K, double D,
                                         double a, double, double& p, double& q, double*) {
                                         portfolio_adjoint(m, i, x, nd.y1, a, K, D, p, q);
                                     });
        }
        return foc_residuals_lsmc(m, ex_, u1, u2, LsmcOptions{c.basis_degree, true});
    }

    void write_foc(const FocReport& foc) {
        const std::size_t N = foc.steps, m1 = foc.own[0], m2 = foc.own[1], M = std::max(m1, m2);
        const YGrid& g = m1 >= m2 ? sc_.info.own_grid(1) : sc_.info.own_grid(2);
        {
            auto out = file("foc.csv");
            CsvWriter csv(out, {"t", "y", "residual_p1", "residual_p2"});
            for (std::size_t k = 0; k < N; ++k)
                for (std::size_t i = 0; i < M; ++i)
                    csv.row(sc_.grid.time(k), g.nodes[i], detail::pick(foc.residual[0], m1, k, i, M),
                            detail::pick(foc.residual[1], m2, k, i, M));
        }
        const AdjointTriple& a = foc.adjoint[0];
        std::vector<std::string> header{"t", "y1", "y2", "p", "q"};
        for (std::size_t j = 0; j < a.marks; ++j) header.push_back("r_" + std::to_string(j));
        auto out = file("adjoint.csv");
        CsvWriter csv(out, header);
        for (std::size_t k = 0; k <= N; ++k)
            for (std::size_t n = 0; n < a.nodes; ++n) {
                const Node& nd = sc_.info.nodes()[n];
                std::vector<std::string> row{format_number(sc_.grid.time(k)), format_number(nd.y1),
                                             format_number(nd.y2), format_number(a.p[k * a.nodes + n]),
                                             format_number(a.q[k * a.nodes + n])};
                for (std::size_t j = 0; j < a.marks; ++j) row.push_back(format_number(a.r[(k * a.nodes + n) * a.marks + j]));
                csv.row(row);
            }
    }

    // Envelope shape scans in x at t = 0 and the grid centre, with the
    // adjoint frozen at its path average there. Reported, not gated.
    template <class M>
    void concavity(const M& m, const FocReport& foc, const ControlField& u1, const ControlField& u2) {
        const auto& c = sc_.config;
        const std::size_t i1 = detail::center_index(sc_.info.own_grid(1));
        const std::size_t i2 = detail::center_index(sc_.info.own_grid(2));
        std::size_t node = 0;
        for (std::size_t n = 0; n < ex_.nodes(); ++n) {
            const Node& nd = sc_.info.nodes()[n];
            if (nd.i1 == i1 && nd.i2 == i2) node = n;
        }
        const Node& nd = sc_.info.nodes()[node];
        PathState ps;
        ps.step = 0;
        ps.t = 0.0;
        ps.path = 0;
        PathKernels kern;
        ex_.kernels(0, kern);
        ps.kernels = &kern;
        const double K = ex_.node_kernel(0, 0, node);
        const double v1 = u1.at(ps, nd.y1), v2 = u2.at(ps, nd.y2);
        const double x0 = m.initial_state(nd.y1, nd.y2);
        std::vector<double> xs(c.scan_points);
        const bool positive = m.positive_state();
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double f = static_cast<double>(j) / static_cast<double>(xs.size() - 1);
            xs[j] = positive ? x0 * std::pow(10.0, 2.0 * f - 1.0) : x0 - 5.0 + 10.0 * f;
        }
        const auto range = [&](double u, const ControlBox& box, bool log_domain) {
            double lo = log_domain ? 0.1 * u : u - std::max(1.0, 2.0 * std::abs(u));
            double hi = log_domain ? 10.0 * u : u + std::max(1.0, 2.0 * std::abs(u));
            return std::pair{std::max(lo, box.lo), std::min(hi, box.hi)};
        };
        const bool consumption = std::is_same_v<M, ConsumptionModel>;
        const auto [a1, b1] = range(v1, c.box1, consumption && v1 > 0.0);
        const auto [a2, b2] = range(v2, c.box2, false);
        const auto H = [&](int i, double x, double w1, double w2) {
            const AdjointTriple& adj = foc.adjoint[i - 1];
            const double* r = adj.marks ? adj.r.data() + node * adj.marks : nullptr;
            const StatePoint s{0.0, x, w1, w2, nd.y1, nd.y2};
            return hamiltonian_value(m, i, s, adj.p[node], adj.q[node], r, K);
        };
        std::vector<ConcavityReport> reps;
        reps.push_back(concavity_scan("H1_sup", [&](double x, double w) { return H(1, x, w, v2); }, a1, b1,
                                      Envelope::sup, Shape::concave, xs));
        if (sc_.zero_sum())
            reps.push_back(concavity_scan("H1_inf", [&](double x, double w) { return H(1, x, v1, w); }, a2, b2,
                                          Envelope::inf, Shape::convex, xs));
        else
            reps.push_back(concavity_scan("H2_sup", [&](double x, double w) { return H(2, x, v1, w); }, a2, b2,
                                          Envelope::sup, Shape::concave, xs));
        for (int i = 1; i <= (sc_.zero_sum() ? 1 : 2); ++i) {
            const auto g = [&, i](double x) { return m.terminal(i, x, nd.y1, nd.y2); };
            const std::string name = "g" + std::to_string(i);
            reps.push_back(shape_scan(name, g, xs, Shape::concave));
            reps.push_back(shape_scan(name + "_affine", g, xs, Shape::affine));
        }
        for (const auto& rep : reps) {
            auto out = file("concavity_" + rep.name + ".csv");
            CsvWriter csv(out, {"x", "second_difference", "verdict"});
            for (const auto& r : rep.rows) csv.row(r.x, r.second_difference, r.holds ? "pass" : "fail");
            diag("concavity_" + rep.name + "_holds", rep.holds ? 1.0 : 0.0);
        }
    }

    void write_diagnostics() {
        auto out = file("diagnostics.csv");
        CsvWriter csv(out, {"metric", "value"});
        for (const auto& [k, v] : diagnostics_) csv.row(k, v);
    }

    Scenario sc_;
    RunOptions opt_;
    std::ostream& log_;
    Experiment ex_;
    std::optional<EquilibriumSolution> solution_;
    std::optional<std::pair<ControlField, ControlField>> candidate_;
    std::vector<std::pair<std::string, double>> diagnostics_;
    RunResult result_;
};

// Runs one subcommand; errors become exit codes with a JSON summary on err.
inline int run(const ScenarioConfig& config, const RunOptions& opt, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
    RunResult r;
    try {
        Runner runner(config, opt, log);
        r = runner.run();
    } catch (const ConfigError& e) {
        r.exit_code = exit_config_error;
        r.failures.push_back({"config", e.what()});
    } catch (const std::exception& e) {
        r.exit_code = exit_runtime_error;
        r.failures.push_back({"runtime", e.what()});
    }
    if (r.exit_code != exit_ok) err << failure_summary(r) << '\n';
    return r.exit_code;
}

}  // namespace insider
