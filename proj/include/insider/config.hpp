#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "control.hpp"
#include "csv.hpp"
#include "donsker.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "sde.hpp"

namespace insider {

// name(arg, arg, ...) with numeric arguments.
struct Preset {
    std::string name;
    std::vector<double> args;

    static Preset parse(const std::string& text) {
        static const std::regex form(R"(^\s*([A-Za-z_]+)\s*\(([^)]*)\)\s*$)");
        std::smatch mt;
        if (!std::regex_match(text, mt, form)) throw ConfigError("malformed preset '" + text + "'");
        Preset p;
        p.name = mt[1];
        const std::string body = mt[2];
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(item, &used);
            } catch (...) {
                throw ConfigError("non-numeric argument in preset '" + text + "'");
            }
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw ConfigError("non-numeric argument in preset '" + text + "'");
            p.args.push_back(v);
        }
        return p;
    }

    std::string str() const {
        std::string s = name + "(";
        for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + format_number(args[i]);
        return s + ")";
    }
    bool operator==(const Preset&) const = default;
};

struct SignalSpec {
    std::string kind = "none";  // gaussian | none | shared (second signal only)
    std::string psi = "constant(1)";
    double horizon_T0 = 1.0;
    std::size_t samples = InsiderSignal::default_samples;
    bool operator==(const SignalSpec&) const = default;
};

struct CustomSpec {
    double a = 0.0, b1 = 1.0, b2 = 1.0, sigma = 0.2, jump_size = 0.0, x0 = 1.0;
    LqPlayer p1, p2;
    std::string u1 = "affine(0,0,0)";
    std::string u2 = "affine(0,0,0)";
    bool operator==(const CustomSpec&) const = default;
};

struct ScenarioConfig {
    std::string kind = "portfolio";
    std::size_t n_paths = 2000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;

    double horizon = 0.8;
    std::size_t steps = 40;

    SignalSpec signal1{"gaussian", "constant(1)", 1.0, InsiderSignal::default_samples};
    SignalSpec signal2;

    std::optional<double> y_min, y_max;
    std::size_t y_nodes = 101;

    std::string alpha = "constant(0)";
    std::string beta = "constant(1)";
    std::string gamma = "constant(0)";
    double x0 = 1.0;
    double theta = 1.0;

    std::vector<JumpMark> marks;

    ControlBox box1, box2;

    std::size_t basis_degree = 2;
    double damping = 0.5;
    double tolerance = 1e-10;
    std::size_t max_iterations = 200;
    std::string adjoint = "exact";  // exact | lsmc
    std::string mu_form = "foc";    // foc | theorem | corollary_literal
    bool corollary_literal = false;
    std::string portfolio_solve = "linear";  // linear | fixed_point
    double beta_min = 1e-6;

    std::size_t directions = 10;
    double direction_bound = 0.2;
    std::vector<double> gateaux_a = {0.05};
    std::size_t saddle_directions = 5;
    std::vector<double> magnitudes = {-0.2, -0.05, 0.05, 0.2};
    double candidate_offset = 0.0;
    double foc_relative_tolerance = 1e-3;
    std::string foc_adjoint = "explicit";  // explicit | lsmc
    std::size_t scan_points = 41;

    CustomSpec custom;

    bool dump_paths = false;
    std::size_t dump_paths_max = 20;

    bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    }
    return out;
}

inline std::string format_box(const ControlBox& b) {
    return format_number(b.lo) + "," + format_number(b.hi);
}

inline ControlBox parse_box(const std::string& s) {
    const auto v = parse_list(s);
    if (v.size() != 2) throw std::invalid_argument(s);
    return {v[0], v[1]};
}

inline std::string format_marks(const std::vector<JumpMark>& m) {
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i)
        s += (i ? ";" : "") + format_number(m[i].zeta) + ":" + format_number(m[i].lambda);
    return s;
}

inline std::vector<JumpMark> parse_marks(const std::string& s) {
    std::vector<JumpMark> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument(item);
        out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    }
    return out;
}

inline bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument(s);
}

// Reads keys from the tree and records every problem with its key path.
class Reader {
public:
    explicit Reader(const boost::property_tree::ptree& t) : tree_(t) {}

    template <class T, class Parse>
    void read(const std::string& path, T& target, Parse parse) {
        seen_.insert(path);
        const auto node = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '.'));
        if (!node) return;
        try {
            target = parse(trim(*node));
        } catch (...) {
            errors_.push_back(path + ": cannot parse '" + trim(*node) + "'");
        }
    }

    void number(const std::string& path, double& t) {
        read(path, t, [](const std::string& s) {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        });
    }
    void number(const std::string& path, std::optional<double>& t) {
        read(path, t, [](const std::string& s) {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return std::optional<double>(v);
        });
    }
    template <class Int>
    void count(const std::string& path, Int& t) {
        read(path, t, [](const std::string& s) {
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw std::invalid_argument(s);
            return static_cast<Int>(std::stoull(s));
        });
    }
    void text(const std::string& path, std::string& t) {
        read(path, t, [](const std::string& s) { return s; });
    }
    void flag(const std::string& path, bool& t) { read(path, t, parse_bool); }

    void unknown_keys() {
        for (const auto& [section, body] : tree_) {
            if (body.empty() && !body.data().empty()) {
                errors_.push_back(section + ": key outside any section");
                continue;
            }
            for (const auto& [key, value] : body) {
                (void)value;
                if (!seen_.contains(section + "." + key)) errors_.push_back(section + "." + key + ": unknown key");
            }
        }
    }

    std::vector<std::string>& errors() { return errors_; }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    const boost::property_tree::ptree& tree_;
    std::set<std::string> seen_;
    std::vector<std::string> errors_;
};

}  // namespace detail

// Every violated invariant, each prefixed by its key path.
inline std::vector<std::string> validate(const ScenarioConfig& c) {
    std::vector<std::string> v;
    const std::set<std::string> kinds{"consumption", "portfolio", "custom-zero-sum", "custom-nash"};
    if (!kinds.contains(c.kind)) v.push_back("scenario.kind: unknown kind '" + c.kind + "'");
    if (c.n_paths < 1) v.push_back("scenario.n_paths: must be at least 1");
    if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) v.push_back("time.horizon: must be positive");
    if (c.steps < 1) v.push_back("time.steps: must be at least 1");
    const auto check_signal = [&](const std::string& sec, const SignalSpec& s, bool second) {
        const std::set<std::string> sk = second ? std::set<std::string>{"gaussian", "none", "shared"}
                                                : std::set<std::string>{"gaussian", "none"};
        if (!sk.contains(s.kind)) v.push_back(sec + ".kind: unknown signal kind '" + s.kind + "'");
        if (s.kind != "gaussian") return;
        if (!(s.horizon_T0 > c.horizon)) v.push_back(sec + ".horizon_T0: must exceed time.horizon");
        if (s.samples < 2) v.push_back(sec + ".samples: must be at least 2");
        try {
            const Preset p = Preset::parse(s.psi);
            const bool ok = (p.name == "constant" && p.args.size() == 1) || (p.name == "linear" && p.args.size() == 2) ||
                            (p.name == "table" && p.args.size() >= 2);
            if (!ok) v.push_back(sec + ".psi: unknown preset '" + s.psi + "'");
            for (double a : p.args)
                if (!std::isfinite(a)) v.push_back(sec + ".psi: arguments must be finite");
        } catch (const ConfigError& e) {
            v.push_back(sec + ".psi: " + e.what());
        }
    };
    check_signal("signal1", c.signal1, false);
    check_signal("signal2", c.signal2, true);
    if (c.signal2.kind == "shared" && c.signal1.kind != "gaussian")
        v.push_back("signal2.kind: 'shared' requires a gaussian signal1");
    if (c.signal1.kind == "gaussian" && c.signal2.kind == "gaussian" &&
        c.signal1.horizon_T0 != c.signal2.horizon_T0)
        v.push_back("signal2.horizon_T0: both signals must share one T0");
    if (c.y_nodes < 2) v.push_back("ygrid.nodes: must be at least 2");
    if (c.y_min.has_value() != c.y_max.has_value()) v.push_back("ygrid.min: give both min and max or neither");
    if (c.y_min && c.y_max && !(*c.y_max > *c.y_min)) v.push_back("ygrid.max: must exceed ygrid.min");
    for (const auto& [key, val] : {std::pair{"coefficients.alpha", c.alpha}, std::pair{"coefficients.beta", c.beta},
                                   std::pair{"coefficients.gamma", c.gamma}}) {
        try {
            const Preset p = Preset::parse(val);
            const bool ok = (p.name == "constant" && p.args.size() == 1) || (p.name == "affine" && p.args.size() == 2);
            if (!ok) v.push_back(std::string(key) + ": unknown preset '" + val + "'");
        } catch (const ConfigError& e) {
            v.push_back(std::string(key) + ": " + e.what());
        }
    }
    if (!(c.x0 > 0.0) && (c.kind == "consumption" || c.kind == "portfolio"))
        v.push_back("coefficients.x0: must be positive");
    if (!(c.theta > 0.0)) v.push_back("coefficients.theta: must be positive");
    for (std::size_t j = 0; j < c.marks.size(); ++j)
        if (!(c.marks[j].lambda >= 0.0) || !std::isfinite(c.marks[j].zeta))
            v.push_back("jumps.marks: mark " + std::to_string(j) + " needs finite zeta and lambda >= 0");
    if (c.kind == "portfolio" && !c.marks.empty()) v.push_back("jumps.marks: the portfolio market has no jumps");
    if (c.kind == "portfolio" && c.signal2.kind != "none")
        v.push_back("signal2.kind: the portfolio environment player is uninformed");
    if (!(c.box1.hi >= c.box1.lo)) v.push_back("controls.box1: empty box");
    if (!(c.box2.hi >= c.box2.lo)) v.push_back("controls.box2: empty box");
    if (c.basis_degree < 1) v.push_back("solver.basis_degree: must be at least 1");
    if (!(c.damping > 0.0 && c.damping <= 1.0)) v.push_back("solver.damping: must lie in (0, 1]");
    if (!(c.tolerance > 0.0)) v.push_back("solver.tolerance: must be positive");
    if (c.max_iterations < 1) v.push_back("solver.max_iterations: must be at least 1");
    if (c.adjoint != "exact" && c.adjoint != "lsmc") v.push_back("solver.adjoint: expected exact or lsmc");
    if (c.mu_form != "foc" && c.mu_form != "theorem" && c.mu_form != "corollary_literal")
        v.push_back("solver.mu_form: expected foc, theorem or corollary_literal");
    if (c.portfolio_solve != "linear" && c.portfolio_solve != "fixed_point")
        v.push_back("solver.portfolio_solve: expected linear or fixed_point");
    if (!(c.beta_min > 0.0)) v.push_back("solver.beta_min: must be positive");
    if (!(c.direction_bound > 0.0)) v.push_back("verify.direction_bound: must be positive");
    if (c.gateaux_a.empty()) v.push_back("verify.gateaux_a: needs at least one magnitude");
    for (double a : c.gateaux_a)
        if (!(a > 0.0)) v.push_back("verify.gateaux_a: magnitudes must be positive");
    if (!(c.foc_relative_tolerance > 0.0)) v.push_back("verify.foc_relative_tolerance: must be positive");
    if (c.foc_adjoint != "explicit" && c.foc_adjoint != "lsmc")
        v.push_back("verify.foc_adjoint: expected explicit or lsmc");
    if (c.scan_points < 3) v.push_back("verify.scan_points: must be at least 3");
    for (const auto& [key, val] : {std::pair{"custom.u1", c.custom.u1}, std::pair{"custom.u2", c.custom.u2}}) {
        try {
            const Preset p = Preset::parse(val);
            if (p.name != "affine" || p.args.size() != 3) v.push_back(std::string(key) + ": expected affine(k0,kt,ky)");
        } catch (const ConfigError& e) {
            v.push_back(std::string(key) + ": " + e.what());
        }
    }
    if (c.custom.p1.r <= 0.0) v.push_back("custom.p1_r: must be positive");
    if (c.custom.p2.r <= 0.0) v.push_back("custom.p2_r: must be positive");
    return v;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    std::stringstream cleaned;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        cleaned << line << '\n';
    }
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(cleaned, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    ScenarioConfig c;
    detail::Reader r(tree);
    r.text("scenario.kind", c.kind);
    r.count("scenario.n_paths", c.n_paths);
    r.count("scenario.seed", c.seed);
    r.count("scenario.threads", c.threads);
    r.number("time.horizon", c.horizon);
    r.count("time.steps", c.steps);
    for (auto [sec, spec] : {std::pair{"signal1", &c.signal1}, std::pair{"signal2", &c.signal2}}) {
        const std::string s = sec;
        r.text(s + ".kind", spec->kind);
        r.text(s + ".psi", spec->psi);
        r.number(s + ".horizon_T0", spec->horizon_T0);
        r.count(s + ".samples", spec->samples);
    }
    r.number("ygrid.min", c.y_min);
    r.number("ygrid.max", c.y_max);
    r.count("ygrid.nodes", c.y_nodes);
    r.text("coefficients.alpha", c.alpha);
    r.text("coefficients.beta", c.beta);
    r.text("coefficients.gamma", c.gamma);
    r.number("coefficients.x0", c.x0);
    r.number("coefficients.theta", c.theta);
    r.read("jumps.marks", c.marks, detail::parse_marks);
    r.read("controls.box1", c.box1, detail::parse_box);
    r.read("controls.box2", c.box2, detail::parse_box);
    r.count("solver.basis_degree", c.basis_degree);
    r.number("solver.damping", c.damping);
    r.number("solver.tolerance", c.tolerance);
    r.count("solver.max_iterations", c.max_iterations);
    r.text("solver.adjoint", c.adjoint);
    r.text("solver.mu_form", c.mu_form);
    r.flag("solver.corollary_literal", c.corollary_literal);
    r.text("solver.portfolio_solve", c.portfolio_solve);
    r.number("solver.beta_min", c.beta_min);
    r.count("verify.directions", c.directions);
    r.number("verify.direction_bound", c.direction_bound);
    r.read("verify.gateaux_a", c.gateaux_a, detail::parse_list);
    r.count("verify.saddle_directions", c.saddle_directions);
    r.read("verify.magnitudes", c.magnitudes, detail::parse_list);
    r.number("verify.candidate_offset", c.candidate_offset);
    r.number("verify.foc_relative_tolerance", c.foc_relative_tolerance);
    r.text("verify.foc_adjoint", c.foc_adjoint);
    r.count("verify.scan_points", c.scan_points);
    r.number("custom.a", c.custom.a);
    r.number("custom.b1", c.custom.b1);
    r.number("custom.b2", c.custom.b2);
    r.number("custom.sigma", c.custom.sigma);
    r.number("custom.jump_size", c.custom.jump_size);
    r.number("custom.x0", c.custom.x0);
    for (auto [pre, pl] : {std::pair{"custom.p1_", &c.custom.p1}, std::pair{"custom.p2_", &c.custom.p2}}) {
        const std::string p = pre;
        r.number(p + "qx", pl->qx);
        r.number(p + "l", pl->l);
        r.number(p + "r", pl->r);
        r.number(p + "m", pl->m);
        r.number(p + "s", pl->s);
        r.number(p + "kappa", pl->kappa);
    }
    r.text("custom.u1", c.custom.u1);
    r.text("custom.u2", c.custom.u2);
    r.flag("output.dump_paths", c.dump_paths);
    r.count("output.dump_paths_max", c.dump_paths_max);
    r.unknown_keys();
    auto errors = r.errors();
    for (auto& e : validate(c)) errors.push_back(e);
    if (!errors.empty()) {
        std::string msg = "invalid scenario configuration:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline std::string serialize(const ScenarioConfig& c) {
    using detail::format_box;
    using detail::format_list;
    std::ostringstream o;
    const auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
    const auto num = [&](const std::string& k, double v) { kv(k, format_number(v)); };
    const auto cnt = [&](const std::string& k, std::uint64_t v) { kv(k, std::to_string(v)); };
    const auto flag = [&](const std::string& k, bool v) { kv(k, v ? "true" : "false"); };
    o << "[scenario]\n";
    kv("kind", c.kind);
    cnt("n_paths", c.n_paths);
    cnt("seed", c.seed);
    cnt("threads", c.threads);
    o << "\n[time]\n";
    num("horizon", c.horizon);
    cnt("steps", c.steps);
    for (auto [sec, s] : {std::pair{"signal1", &c.signal1}, std::pair{"signal2", &c.signal2}}) {
        o << "\n[" << sec << "]\n";
        kv("kind", s->kind);
        kv("psi", s->psi);
        num("horizon_T0", s->horizon_T0);
        cnt("samples", s->samples);
    }
    o << "\n[ygrid]\n";
    if (c.y_min) num("min", *c.y_min);
    if (c.y_max) num("max", *c.y_max);
    cnt("nodes", c.y_nodes);
    o << "\n[coefficients]\n";
    kv("alpha", c.alpha);
    kv("beta", c.beta);
    kv("gamma", c.gamma);
    num("x0", c.x0);
    num("theta", c.theta);
    o << "\n[jumps]\n";
    kv("marks", detail::format_marks(c.marks));
    o << "\n[controls]\n";
    kv("box1", format_box(c.box1));
    kv("box2", format_box(c.box2));
    o << "\n[solver]\n";
    cnt("basis_degree", c.basis_degree);
    num("damping", c.damping);
    num("tolerance", c.tolerance);
    cnt("max_iterations", c.max_iterations);
    kv("adjoint", c.adjoint);
    kv("mu_form", c.mu_form);
    flag("corollary_literal", c.corollary_literal);
    kv("portfolio_solve", c.portfolio_solve);
    num("beta_min", c.beta_min);
    o << "\n[verify]\n";
    cnt("directions", c.directions);
    num("direction_bound", c.direction_bound);
    kv("gateaux_a", format_list(c.gateaux_a));
    cnt("saddle_directions", c.saddle_directions);
    kv("magnitudes", format_list(c.magnitudes));
    num("candidate_offset", c.candidate_offset);
    num("foc_relative_tolerance", c.foc_relative_tolerance);
    kv("foc_adjoint", c.foc_adjoint);
    cnt("scan_points", c.scan_points);
    o << "\n[custom]\n";
    num("a", c.custom.a);
    num("b1", c.custom.b1);
    num("b2", c.custom.b2);
    num("sigma", c.custom.sigma);
    num("jump_size", c.custom.jump_size);
    num("x0", c.custom.x0);
    for (auto [pre, pl] : {std::pair{"p1_", &c.custom.p1}, std::pair{"p2_", &c.custom.p2}}) {
        const std::string p = pre;
        num(p + "qx", pl->qx);
        num(p + "l", pl->l);
        num(p + "r", pl->r);
        num(p + "m", pl->m);
        num(p + "s", pl->s);
        num(p + "kappa", pl->kappa);
    }
    kv("u1", c.custom.u1);
    kv("u2", c.custom.u2);
    o << "\n[output]\n";
    flag("dump_paths", c.dump_paths);
    cnt("dump_paths_max", c.dump_paths_max);
    return o.str();
}

// ---------------------------------------------------------------------------
// Builders

inline InsiderSignal make_signal(const SignalSpec& s, double T) {
    const Preset p = Preset::parse(s.psi);
    if (p.name == "constant") return InsiderSignal::constant(p.args.at(0), s.horizon_T0, T, s.samples);
    if (p.name == "linear") return InsiderSignal::linear(p.args.at(0), p.args.at(1), s.horizon_T0, T, s.samples);
    if (p.name == "table") return InsiderSignal::table(p.args, s.horizon_T0, T);
    throw ConfigError("unknown psi preset '" + s.psi + "'");
}

inline AffineCoefficient make_coefficient(const std::string& text) {
    const Preset p = Preset::parse(text);
    if (p.name == "constant") return {p.args.at(0), 0.0};
    if (p.name == "affine") return {p.args.at(0), p.args.at(1)};
    throw ConfigError("unknown coefficient preset '" + text + "'");
}

}  // namespace insider
