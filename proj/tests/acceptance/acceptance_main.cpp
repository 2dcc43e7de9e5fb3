// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "insider/app.hpp"

namespace fs = std::filesystem;
using namespace insider;

namespace {

const fs::path scenario_dir{INSIDER_SCENARIO_DIR};
const std::string cli{INSIDER_CLI_PATH};

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("insider_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, double> read_diagnostics(const fs::path& dir) {
    std::map<std::string, double> out;
    std::ifstream in(dir / "diagnostics.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    return out;
}

struct AppRun {
    RunResult result;
    std::map<std::string, double> diagnostics;
    bool failed(const std::string& check) const {
        for (const auto& f : result.failures)
            if (f.check == check) return true;
        return false;
    }
};

AppRun run_app(const std::string& file, const std::string& command, const std::function<void(ScenarioConfig&)>& edit) {
    ScenarioConfig c = load_config((scenario_dir / file).string());
    edit(c);
    RunOptions opt;
    opt.command = command;
    opt.out = scratch(fs::path(file).stem().string() + "_" + command);
    opt.quiet = true;
    std::ostringstream log;
    Runner runner(c, opt, log);
    AppRun r;
    r.result = runner.run();
    r.diagnostics = read_diagnostics(opt.out);
    return r;
}

// -- 1 --------------------------------------------------------------------

Outcome donsker_normalization() {
    Outcome o;
    const double T = 0.8;
    const auto sig = InsiderSignal::constant(1.0, 1.0, T);
    const YGrid g = YGrid::uniform(-8, 8, 201);
    auto info = InformationStructure::independent(PlayerInformation::insider(sig, g), {});
    const auto ex = Experiment::create(TimeGrid(T, 40), info, {}, 10000, 101);
    double worst = 0.0;
    for (std::size_t k = 0; k <= ex.steps(); ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) mass += g.weights[i] * cond_delta(sig, ex.grid.time(k), 0.0, g.nodes[i]);
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    double worst_z = 0.0;
    for (double y : {0.0, 0.75}) {
        const double K0 = cond_delta(sig, 0.0, 0.0, y);
        for (std::size_t k = 1; k <= ex.steps(); ++k) {
            std::vector<double> v(ex.n_paths());
            for (std::size_t p = 0; p < ex.n_paths(); ++p)
                v[p] = cond_delta(sig, ex.grid.time(k), ex.signals.signal(1, p)[k], y);
            const auto e = summarize(v);
            worst_z = std::max(worst_z, std::abs(e.mean - K0) / e.std_error);
        }
    }
    o.pass = worst <= 1e-6 && worst_z <= 3.0;
    o.detail = "max |mass - 1| = " + num(worst) + ", max martingale z = " + num(worst_z);
    return o;
}

// -- 2 --------------------------------------------------------------------

Outcome sifting() {
    Outcome o;
    const double T = 0.8;
    const auto sig = InsiderSignal::constant(1.0, 1.0, T);
    const YGrid g = YGrid::uniform(-8, 8, 201);
    auto info = InformationStructure::independent(PlayerInformation::insider(sig, g), {});
    const auto ex = Experiment::create(TimeGrid(T, 40), info, {}, 10000, 202);
    const std::size_t n = ex.n_paths();
    double worst_z = 0.0;
    // F_t states taken from realized paths; continuations from the
    // independent increments Y(T0) - Y(t) of all simulated paths.
    for (std::size_t k : {0u, 10u, 20u, 30u, 40u})
        for (std::size_t path : {0u, 1u, 2u}) {
            const double t = ex.grid.time(k), Yt = ex.signals.signal(1, path)[k];
            for (int power : {1, 2}) {
                double quad = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i)
                    quad += g.weights[i] * std::pow(g.nodes[i], power) * cond_delta(sig, t, Yt, g.nodes[i]);
                std::vector<double> v(n);
                for (std::size_t p = 0; p < n; ++p)
                    v[p] = std::pow(Yt + ex.signals.terminal(1, p) - ex.signals.signal(1, p)[k], power);
                const auto e = summarize(v);
                worst_z = std::max(worst_z, std::abs(quad - e.mean) / e.std_error);
            }
        }
    o.pass = worst_z <= 3.0;
    o.detail = "max z over 15 conditioning states x {y, y^2} = " + num(worst_z);
    return o;
}

// -- 3 --------------------------------------------------------------------

Outcome consumption_reduction() {
    Outcome o;
    const ConsumptionModel m({0, 0}, {0, 0}, {0, 0}, 1.0, 1.0);
    const auto ex = Experiment::create(TimeGrid(1.0, 50), {}, {}, 10000, 303);
    const auto exact = consumption_equilibrium(m, ex);
    const auto lsmc = consumption_equilibrium(m, ex, AdjointMethod::lsmc, {2, true});
    double worst = 0.0, num2 = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ex.steps(); ++k) {
        const double want = 1.0 / (2.0 - ex.grid.time(k));
        worst = std::max(worst, std::abs(exact.u1_mean[k] - want));
        num2 += std::pow(lsmc.u1_mean[k] - want, 2);
        den += want * want;
    }
    const double rms = std::sqrt(num2 / den);
    o.pass = worst <= 1e-6 && rms <= 0.02;
    o.detail = "exact max error = " + num(worst) + ", lsmc relative rms = " + num(rms);
    return o;
}

// -- 4 --------------------------------------------------------------------

Outcome portfolio_closed_form() {
    Outcome o;
    const double T = 0.8, T0 = 1.0;
    const auto sig = InsiderSignal::constant(1.0, T0, T);
    auto info = InformationStructure::independent(PlayerInformation::insider(sig, YGrid::uniform(-8, 8, 201)), {});
    const auto ex = Experiment::create(TimeGrid(T, 40), info, {}, 10000, 404);
    const PortfolioModel m({1, 0}, {1, 0}, 1.0, 1.0);
    const PortfolioPolicy pol(m, ex.info, ex.grid);
    double worst_mu = 0.0, worst_pi = 0.0;
    PathKernels kern;
    for (std::size_t p = 0; p < ex.n_paths(); ++p) {
        ex.kernels(p, kern);
        const double BT0 = ex.signals.terminal(1, p);
        for (std::size_t k = 0; k < ex.steps(); ++k) {
            const PathState ps = ex.state(p, k, &kern);
            const double mu = pol.mu(ps).mu;
            worst_mu = std::max(worst_mu, std::abs(mu + 0.5));
            const double want = 0.5 + (BT0 - ps.B) / (T0 - ps.t);
            worst_pi = std::max(worst_pi, std::abs(pol.pi(ps, mu, BT0) - want));
        }
    }
    o.pass = worst_mu <= 1e-9 && worst_pi <= 1e-9;
    o.detail = "max |mu + 0.5| = " + num(worst_mu) + ", max realized pi error = " + num(worst_pi) + " over " +
               std::to_string(ex.n_paths()) + " paths";
    return o;
}

// -- 5 --------------------------------------------------------------------

Outcome maximum_principle() {
    Outcome o;
    for (const char* file : {"consumption_insider.ini", "portfolio_bt0.ini"}) {
        const auto r = run_app(file, "verify", [](ScenarioConfig& c) {
            c.n_paths = 10000;
            c.directions = 10;
            c.saddle_directions = 0;
        });
        const bool ok = !r.failed("foc") && !r.failed("gateaux");
        o.pass = o.pass && ok && r.result.exit_code == exit_ok;
        const auto d = r.diagnostics;
        o.detail += std::string(o.detail.empty() ? "" : "; ") + fs::path(file).stem().string() + ": foc " +
                    num(d.at("foc_relative_p1")) + "/" + num(d.at("foc_relative_p2")) + ", gateaux failures " +
                    num(d.at("gateaux_failures_p1")) + "/" + num(d.at("gateaux_failures_p2"));
    }
    return o;
}

// -- 6 --------------------------------------------------------------------

Outcome saddle_ordering() {
    Outcome o;
    const auto edit = [](ScenarioConfig& c) {
        c.n_paths = 10000;
        c.directions = 0;
        c.saddle_directions = 5;
        c.magnitudes = {-0.2, -0.05, 0.05, 0.2};
    };
    const auto good = run_app("portfolio_bt0.ini", "verify", edit);
    const auto bad = run_app("portfolio_wrong_candidate.ini", "verify", edit);
    o.pass = !good.failed("saddle") && bad.failed("saddle");
    o.detail = "candidate worst margin " + num(good.diagnostics.at("saddle_worst_margin")) +
               " sigma, negative control worst margin " + num(bad.diagnostics.at("saddle_worst_margin")) + " sigma";
    return o;
}

// -- 7 --------------------------------------------------------------------

double linear_bsde_error(std::size_t n, std::uint64_t seed) {
    const double a = 0.3, b = 0.5, c = 1.0, T = 1.0;
    const std::size_t N = 200;
    const TimeGrid g(T, N);
    const auto nz = sample_noise(g, n, {}, seed);
    std::vector<double> B((N + 1) * n, 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t k = 0; k < N; ++k) B[(k + 1) * n + p] = B[k * n + p] + nz.increments(p)[k];
    LsmcProblem pb;
    pb.noise = &nz;
    pb.n_features = 1;
    pb.features.assign(B.begin(), B.begin() + static_cast<std::ptrdiff_t>(N * n));
    pb.terminal.resize(n);
    for (std::size_t p = 0; p < n; ++p) pb.terminal[p] = B[N * n + p] * B[N * n + p];
    pb.driver = [&](std::size_t, std::size_t, double pv, double qv, const double*) { return -(a * pv + b * qv + c); };
    const auto sol = solve_adjoint_lsmc(pb, {2, false});
    double num2 = 0.0, den = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
        const double tau = T - g.time(k), e = std::exp(a * tau);
        for (std::size_t p = 0; p < n; ++p) {
            const double Bt = B[k * n + p];
            const double want = e * ((Bt + b * tau) * (Bt + b * tau) + tau) + c * (e - 1.0) / a;
            num2 += std::pow(sol.P(k, p) - want, 2);
            den += want * want;
        }
    }
    return std::sqrt(num2 / den);
}

Outcome bsde_calibration() {
    Outcome o;
    const std::size_t sizes[3] = {1000, 10000, 100000};
    double mean[3] = {0, 0, 0}, worst_at_1e4 = 0.0;
    bool monotone = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double e[3];
        for (int j = 0; j < 3; ++j) {
            e[j] = linear_bsde_error(sizes[j], 700 + seed);
            mean[j] += e[j] / 5.0;
        }
        worst_at_1e4 = std::max(worst_at_1e4, e[1]);
        monotone = monotone && e[0] > e[1] && e[1] > e[2];
    }
    o.pass = worst_at_1e4 <= 0.02 && monotone;
    o.detail = "mean relative rms " + num(mean[0]) + " / " + num(mean[1]) + " / " + num(mean[2]) +
               " at 1e3/1e4/1e5 paths, worst seed at 1e4 " + num(worst_at_1e4) +
               (monotone ? ", monotone for every seed" : ", not monotone for every seed");
    return o;
}

// -- 8 --------------------------------------------------------------------

Outcome determinism() {
    Outcome o;
    std::size_t scenarios = 0, files = 0;
    std::vector<fs::path> inis;
    for (const auto& entry : fs::directory_iterator(scenario_dir))
        if (entry.path().extension() == ".ini") inis.push_back(entry.path());
    std::sort(inis.begin(), inis.end());
    for (const auto& ini : inis) {
        const std::string stem = ini.stem().string();
        std::string outs[2];
        for (int r = 0; r < 2; ++r) {
            const fs::path out = scratch("det_" + stem + "_" + std::to_string(r));
            const int status = std::system(
                (cli + " all --quiet --config " + ini.string() + " --out " + out.string() + " > /dev/null 2>&1").c_str());
            if (status == -1) throw std::runtime_error("cannot launch " + cli);
            std::vector<fs::path> produced;
            for (const auto& f : fs::directory_iterator(out)) produced.push_back(f.path());
            std::sort(produced.begin(), produced.end());
            for (const auto& f : produced) outs[r] += f.filename().string() + "\n" + slurp(f);
            if (r == 0) files += produced.size();
        }
        if (outs[0].empty() || outs[0] != outs[1]) {
            o.pass = false;
            o.detail += "differs: " + stem + "; ";
        }
        ++scenarios;
    }
    o.detail += std::to_string(scenarios) + " scenarios, " + std::to_string(files) + " files compared";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_seconds;
        Outcome (*fn)();
    };
    const Criterion criteria[] = {
        {1, "donsker normalization and martingale", 10, donsker_normalization},
        {2, "sifting property", 30, sifting},
        {3, "consumption reduction", 60, consumption_reduction},
        {4, "portfolio closed form", 30, portfolio_closed_form},
        {5, "maximum principle residuals", 300, maximum_principle},
        {6, "saddle ordering", 300, saddle_ordering},
        {7, "bsde solver calibration", 300, bsde_calibration},
        {8, "determinism", 600, determinism},
    };
    bool all = true;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        all = all && pass;
        std::cout << "criterion " << c.id << ' ' << (pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail
                  << " [" << num(secs) << " s of " << c.budget_seconds << " s" << (in_time ? "" : ", over budget")
                  << "]" << std::endl;
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "total " << num(total) << " s" << std::endl;
    return all ? 0 : 1;
}
