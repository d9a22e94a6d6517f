// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: sample event-driven trajectories, march the
// expected-frequency equation, sweep the conversion fraction, or run the
// built-in acceptance checks.  All numeric output goes to CSV files in the
// configured output directory; exit code 2 flags configuration or usage
// errors, exit code 1 a failed validation.

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "raremut/acceptance.hpp"
#include "raremut/config.hpp"
#include "raremut/csv.hpp"
#include "raremut/gamma_sweep.hpp"
#include "raremut/jump_process.hpp"
#include "raremut/kolmogorov.hpp"

namespace fs = std::filesystem;
using namespace raremut;

namespace {

constexpr std::uint64_t kDefaultSeed = 12345;

// RAREMUT_SEED is consulted only when neither --seed nor the config file
// provides one; a set-but-malformed value is a configuration error.
std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("RAREMUT_SEED");
    if (!raw) return std::nullopt;
    const std::string text(raw);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (text.empty() || text[0] == '-' || end != text.c_str() + text.size() ||
        errno == ERANGE)
        throw ConfigError("RAREMUT_SEED must be a nonnegative integer, got '" +
                          text + "'");
    return static_cast<std::uint64_t>(v);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const ExperimentConfig& cfg) {
    if (flag) return *flag;
    if (cfg.seed) return *cfg.seed;
    if (auto env = env_seed()) return *env;
    return kDefaultSeed;
}

fs::path prepare_output(const std::string& dir) {
    fs::path out = dir.empty() ? fs::path(".") : fs::path(dir);
    fs::create_directories(out);
    return out;
}

void write_text(const fs::path& file, const char* text) {
    std::ofstream out(file);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::vector<std::string> path_columns(std::size_t d) {
    std::vector<std::string> c{"time", "mark_i", "mark_k"};
    for (std::size_t k = 0; k <= d; ++k) c.push_back("x_" + std::to_string(k));
    return c;
}

std::vector<std::string> mc_columns(std::size_t d) {
    std::vector<std::string> c{"time"};
    for (std::size_t k = 0; k <= d; ++k) c.push_back("mean_" + std::to_string(k));
    for (std::size_t k = 0; k <= d; ++k) c.push_back("se_" + std::to_string(k));
    return c;
}

std::vector<std::string> u_columns(std::size_t d) {
    std::vector<std::string> c{"t"};
    for (std::size_t k = 1; k <= d; ++k) c.push_back("x_" + std::to_string(k));
    c.push_back("u");
    return c;
}

const char* kPlotPath = R"PY(#!/usr/bin/env python3
"""Plot the logged trajectory (path.csv) and Monte Carlo means (mc.csv)."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

base = Path(__file__).resolve().parent


def read(name):
    with open(base / name, newline="") as f:
        return list(csv.DictReader(f))


fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 8), sharex=True)

rows = read("path.csv")
names = [c for c in rows[0] if c.startswith("x_")]
times = [float(r["time"]) for r in rows]
for name in names:
    top.step(times, [float(r[name]) for r in rows], where="post", marker="o",
             label=name)
top.set_ylabel("frequency")
top.set_title("states at jump times (one sampled trajectory)")
top.legend()

rows = read("mc.csv")
times = [float(r["time"]) for r in rows]
for name in [c for c in rows[0] if c.startswith("mean_")]:
    k = name.split("_")[1]
    bottom.errorbar(times, [float(r[name]) for r in rows],
                    yerr=[float(r["se_" + k]) for r in rows],
                    marker="o", capsize=3, label="E[x_%s]" % k)
bottom.set_xlabel("time")
bottom.set_ylabel("mean frequency")
bottom.legend()

fig.tight_layout()
fig.savefig(base / "path.png", dpi=150)
print("wrote", base / "path.png")
)PY";

const char* kPlotU = R"PY(#!/usr/bin/env python3
"""Plot the expected-frequency profiles stored in u.csv."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

base = Path(__file__).resolve().parent
with open(base / "u.csv", newline="") as f:
    rows = list(csv.DictReader(f))

fig, ax = plt.subplots(figsize=(7, 5))
if "x_2" not in rows[0]:
    groups = defaultdict(list)
    for r in rows:
        groups[float(r["t"])].append((float(r["x_1"]), float(r["u"])))
    for t in sorted(groups):
        pts = sorted(groups[t])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], label="t = %g" % t)
    ax.set_xlabel("x_1")
    ax.set_ylabel("expected frequency")
    ax.legend()
else:
    last = max(float(r["t"]) for r in rows)
    pts = [r for r in rows if float(r["t"]) == last]
    sc = ax.scatter([float(r["x_1"]) for r in pts],
                    [float(r["x_2"]) for r in pts],
                    c=[float(r["u"]) for r in pts], s=12)
    fig.colorbar(sc, ax=ax, label="expected frequency")
    ax.set_xlabel("x_1")
    ax.set_ylabel("x_2")
    ax.set_title("t = %g" % last)

fig.tight_layout()
fig.savefig(base / "u.png", dpi=150)
print("wrote", base / "u.png")
)PY";

const char* kPlotSweep = R"PY(#!/usr/bin/env python3
"""Plot the conversion-fraction sweep (sweep.csv, equilibrium.csv)."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

base = Path(__file__).resolve().parent


def read(name):
    with open(base / name, newline="") as f:
        return list(csv.DictReader(f))


fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.5))

rows = read("sweep.csv")
g = [float(r["gamma"]) for r in rows]
left.plot(g, [float(r["u_gamma"]) for r in rows], marker="o", label="u at probe")
left.axhline(float(rows[0]["z_ref"]), ls="--", color="tab:green",
             label="fraction-one closed form")
left.axhline(float(rows[0]["x_ref"]), ls=":", color="tab:red",
             label="averaged ODE")
left.set_xlabel("conversion fraction")
left.set_ylabel("expected frequency at probe")
left.legend()

try:
    rows = read("equilibrium.csv")
except FileNotFoundError:
    rows = []
if rows:
    g = [float(r["gamma"]) for r in rows]
    right.plot(g, [float(r["ubar"]) for r in rows], marker="s",
               label="large-time plateau")
    right.axhline(float(rows[0]["xbar"]), ls=":", color="tab:red",
                  label="averaged rest point")
    right.axvline(float(rows[0]["gamma_star"]), ls="--", color="gray",
                  label="threshold fraction")
    right.set_xlabel("conversion fraction")
    right.set_ylabel("plateau level")
    right.legend()

fig.tight_layout()
fig.savefig(base / "sweep.png", dpi=150)
print("wrote", base / "sweep.png")
)PY";

int run_simulate(const std::string& config, const std::string& out_flag,
                 const std::optional<std::uint64_t>& seed_flag,
                 const std::optional<std::size_t>& n_paths_flag,
                 const std::optional<double>& t_end_flag, unsigned threads) {
    ExperimentConfig cfg = load_config(config);
    if (t_end_flag) cfg.solver.t_end = *t_end_flag;
    if (n_paths_flag) cfg.n_paths = *n_paths_flag;
    const std::uint64_t seed = resolve_seed(seed_flag, cfg);
    const double horizon = cfg.solver.t_end;
    if (cfg.times.back() > horizon * (1.0 + 1e-12))
        throw ConfigError("[monte_carlo] times reach " +
                          format_g17(cfg.times.back()) + " but t_end is " +
                          format_g17(horizon));

    const SimplexState x0 = SimplexState::normalized(cfg.x0);
    const FlowConfig flow = default_flow_config(cfg.fitness);
    const fs::path out =
        prepare_output(out_flag.empty() ? cfg.output_dir : out_flag);

    std::printf("simulate: seed %llu, %zu paths, horizon %g\n",
                static_cast<unsigned long long>(seed), cfg.n_paths, horizon);

    // Event log for the first random stream (the same trajectory the Monte
    // Carlo average sees as path 0).
    PathRng rng(seed, 0);
    const PathSample path =
        simulate_path(cfg.fitness, cfg.channels, x0, horizon, rng, flow);
    {
        CsvWriter csv(out / "path.csv", path_columns(cfg.d));
        std::vector<double> row(3 + x0.size());
        row[0] = 0.0;
        row[1] = -1.0;
        row[2] = -1.0;
        for (std::size_t k = 0; k < x0.size(); ++k) row[3 + k] = x0[k];
        csv.row(row);
        for (const auto& ev : path.events) {
            row[0] = ev.time;
            row[1] = static_cast<double>(ev.ancestor);
            row[2] = static_cast<double>(ev.descendant);
            for (std::size_t k = 0; k < x0.size(); ++k) row[3 + k] = ev.state[k];
            csv.row(row);
        }
        csv.close();
    }
    std::printf("path 0: %zu events\n", path.events.size());

    const MonteCarloEstimate est =
        monte_carlo_expectation(cfg.fitness, cfg.channels, x0, cfg.times,
                                cfg.n_paths, seed, flow, threads);
    {
        CsvWriter csv(out / "mc.csv", mc_columns(cfg.d));
        std::vector<double> row(1 + 2 * x0.size());
        for (std::size_t ti = 0; ti < est.times.size(); ++ti) {
            row[0] = est.times[ti];
            for (std::size_t k = 0; k < x0.size(); ++k) {
                row[1 + k] = est.mean[ti][k];
                row[1 + x0.size() + k] = est.std_error[ti][k];
            }
            csv.row(row);
        }
        csv.close();
    }
    const std::size_t last = est.times.size() - 1;
    for (std::size_t k = 0; k < x0.size(); ++k)
        std::printf("E[x_%zu](t = %g) = %.6f +- %.6f\n", k, est.times[last],
                    est.mean[last][k], est.std_error[last][k]);
    std::printf("audit: min entry %.3e, max |sum - 1| %.3e over %lld states\n",
                est.audit.min_entry(), est.audit.max_sum_deviation(),
                static_cast<long long>(est.audit.states()));

    write_text(out / "plot_path.py", kPlotPath);
    std::printf("wrote %s, %s, %s\n", (out / "path.csv").c_str(),
                (out / "mc.csv").c_str(), (out / "plot_path.py").c_str());
    return 0;
}

int run_solve(const std::string& config, const std::string& out_flag,
              const std::optional<double>& t_end_flag, std::size_t component) {
    ExperimentConfig cfg = load_config(config);
    if (t_end_flag) cfg.solver.t_end = *t_end_flag;
    if (component < 1 || component > cfg.d)
        throw ConfigError("--component must be in 1.." + std::to_string(cfg.d));

    auto mesh = std::make_shared<const Mesh>(
        cfg.d == 1 ? Mesh::line(cfg.nodes) : Mesh::triangle(cfg.nodes));
    std::vector<double> snaps;
    for (double t : cfg.times)
        if (t <= cfg.solver.t_end * (1.0 + 1e-12)) snaps.push_back(t);
    if (snaps.empty()) snaps.push_back(cfg.solver.t_end);

    SolverConfig scfg = cfg.solver;
    scfg.flow = default_flow_config(cfg.fitness);

    std::printf("solve: %zu nodes (d = %zu), dt %g, %zu snapshot(s) up to t = %g\n",
                mesh->node_count(), cfg.d, scfg.dt, snaps.size(), scfg.t_end);

    const auto sol =
        solve_kolmogorov(mesh, component, cfg.fitness, cfg.channels, scfg, snaps);

    const fs::path out =
        prepare_output(out_flag.empty() ? cfg.output_dir : out_flag);
    CsvWriter csv(out / "u.csv", u_columns(cfg.d));
    std::vector<double> row(2 + cfg.d);
    for (const auto& g : sol) {
        double lo = g.values.front(), hi = lo;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const auto node = mesh->node(i);
            row[0] = g.time;
            for (std::size_t k = 0; k < cfg.d; ++k) row[1 + k] = node[k];
            row[1 + cfg.d] = g.values[i];
            csv.row(row);
            lo = std::min(lo, g.values[i]);
            hi = std::max(hi, g.values[i]);
        }
        std::printf("t = %-8g min %.6f  max %.6f\n", g.time, lo, hi);
    }
    csv.close();

    write_text(out / "plot_u.py", kPlotU);
    std::printf("wrote %s, %s\n", (out / "u.csv").c_str(),
                (out / "plot_u.py").c_str());
    return 0;
}

int run_sweep(const std::string& config, const std::string& out_flag) {
    ExperimentConfig cfg = load_config(config);
    if (cfg.d != 1) throw ConfigError("sweep requires a two-type model (d = 1)");
    if (!cfg.fitness.is_constant())
        throw ConfigError("sweep requires constant fitness");
    if (cfg.channels.size() != 1)
        throw ConfigError("sweep requires exactly one mutation channel");
    const MutationChannel& ch = cfg.channels[0];
    if (ch.ancestor != 0 || ch.descendant != 1)
        throw ConfigError("sweep channel must convert type 0 into type 1");

    const double f0 = cfg.fitness.component_sup(0);
    const double f1 = cfg.fitness.component_sup(1);
    std::optional<TwoSpeciesParams> params;
    try {
        params.emplace(f0, f1, ch.rate, 0.0, ch.fraction, 1.0);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
    const TwoSpeciesParams& p = *params;
    const double mf = p.m0() * p.f0;
    const double gamma_star = threshold_fraction(p.s(), mf);

    std::printf("sweep: s = %g, effective rate m0 = %g, m0 f0 = %g\n", p.s(),
                p.m0(), mf);
    std::printf("threshold fraction %.12f in (1 - m0 f0 / s, 1) = (%.6f, 1)\n",
                gamma_star, 1.0 - mf / p.s());

    auto mesh = std::make_shared<const Mesh>(Mesh::line(cfg.nodes));
    SolverConfig scfg = cfg.solver;
    scfg.flow = default_flow_config(cfg.fitness);

    const auto rows = sweep_jump_fraction(p, cfg.sweep_gammas, cfg.x_probe,
                                          cfg.t_probe, mesh, scfg);
    const fs::path out =
        prepare_output(out_flag.empty() ? cfg.output_dir : out_flag);
    {
        CsvWriter csv(out / "sweep.csv",
                      {"gamma", "x_probe", "t_probe", "u_gamma", "z_ref", "x_ref"});
        for (const auto& r : rows) {
            csv.row({r.gamma, cfg.x_probe, cfg.t_probe, r.u_gamma, r.z_ref,
                     r.x_ref});
            std::printf("gamma %-6g u(%.3g, %.3g) = %.6f   [averaged %.6f, "
                        "fraction-one %.6f]\n",
                        r.gamma, cfg.x_probe, cfg.t_probe, r.u_gamma, r.x_ref,
                        r.z_ref);
        }
        csv.close();
    }

    PlateauOptions opts;
    opts.tolerance = cfg.plateau_tol;
    opts.horizon = cfg.plateau_horizon;
    const double xbar = quasispecies_equilibrium(p);
    {
        CsvWriter csv(out / "equilibrium.csv",
                      {"gamma", "ubar", "xbar", "gamma_star"});
        for (double g : cfg.ubar_gammas) {
            const PlateauResult res = large_time_plateau(p, g, mesh, scfg, opts);
            csv.row({g, res.value, xbar, gamma_star});
            std::printf("gamma %-6g plateau %.6f at t = %g%s\n", g, res.value,
                        res.reached_at,
                        res.near_threshold ? "  (threshold fraction)" : "");
        }
        csv.close();
    }

    write_text(out / "plot_sweep.py", kPlotSweep);
    std::printf("wrote %s, %s, %s\n", (out / "sweep.csv").c_str(),
                (out / "equilibrium.csv").c_str(),
                (out / "plot_sweep.py").c_str());
    return 0;
}

int run_validate(const std::string& config, const std::string& out_flag,
                 double tol_scale, unsigned threads) {
    std::string dir = ".";
    if (!config.empty()) {
        const ExperimentConfig cfg = load_config(config);
        dir = cfg.output_dir;
    }
    if (!out_flag.empty()) dir = out_flag;

    AcceptanceOptions opts;
    opts.tol_scale = tol_scale;
    opts.threads = threads;
    const auto results = run_acceptance(opts);

    int passed = 0;
    const fs::path out = prepare_output(dir);
    CsvWriter csv(out / "validate.csv", {"id", "name", "pass", "seconds"});
    for (const auto& r : results) {
        std::printf("[%s] %2d %-26s %s (%.2fs)\n", r.pass ? "PASS" : "FAIL",
                    r.id, r.name.c_str(), r.detail.c_str(), r.seconds);
        const std::vector<std::string> cells = {
            std::to_string(r.id), r.name, r.pass ? "1" : "0",
            format_g17(r.seconds)};
        csv.row_text(cells);
        passed += r.pass ? 1 : 0;
    }
    csv.close();
    std::printf("%d/%zu criteria passed; wrote %s\n", passed, results.size(),
                (out / "validate.csv").c_str());
    return passed == static_cast<int>(results.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"expected-frequency laboratory for selection dynamics with "
                 "rare conversion events"};
    app.require_subcommand(1);

    std::string sim_config, sim_out;
    std::uint64_t sim_seed = 0;
    std::size_t sim_n_paths = 0;
    double sim_t_end = 0.0;
    unsigned sim_threads = 1;
    auto* sim = app.add_subcommand(
        "simulate", "sample trajectories and Monte Carlo expectations");
    sim->add_option("-c,--config", sim_config, "experiment configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* sim_seed_opt =
        sim->add_option("--seed", sim_seed, "override the random seed");
    auto* sim_np_opt = sim->add_option("--n-paths", sim_n_paths,
                                       "override the number of sample paths")
                           ->check(CLI::PositiveNumber);
    auto* sim_te_opt = sim->add_option("--t-end", sim_t_end,
                                       "override the simulation horizon")
                           ->check(CLI::NonNegativeNumber);
    sim->add_option("--out", sim_out, "output directory (default: [output] dir)");
    sim->add_option("--threads", sim_threads, "worker threads (default 1)")
        ->check(CLI::PositiveNumber);

    std::string solve_config, solve_out;
    double solve_t_end = 0.0;
    std::size_t solve_component = 1;
    auto* solve = app.add_subcommand(
        "solve", "march the expected-frequency equation on a mesh");
    solve->add_option("-c,--config", solve_config, "experiment configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    auto* solve_te_opt = solve->add_option("--t-end", solve_t_end,
                                           "override the final time")
                             ->check(CLI::NonNegativeNumber);
    solve->add_option("--component", solve_component,
                      "type index whose frequency is tracked (default 1)");
    solve->add_option("--out", solve_out,
                      "output directory (default: [output] dir)");

    std::string sweep_config, sweep_out;
    auto* sweep = app.add_subcommand(
        "sweep", "study the conversion fraction at fixed effective rate");
    sweep->add_option("-c,--config", sweep_config, "experiment configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_out,
                      "output directory (default: [output] dir)");

    std::string val_config, val_out;
    double val_tol_scale = 1.0;
    unsigned val_threads = 1;
    auto* validate = app.add_subcommand(
        "validate", "run the built-in acceptance checks");
    validate
        ->add_option("-c,--config", val_config,
                     "optional configuration file (checked, and its output "
                     "directory used)")
        ->check(CLI::ExistingFile);
    validate
        ->add_option("--tol-scale", val_tol_scale,
                     "multiply the additive numeric tolerances (default 1)")
        ->check(CLI::NonNegativeNumber);
    validate->add_option("--threads", val_threads, "worker threads (default 1)")
        ->check(CLI::PositiveNumber);
    validate->add_option("--out", val_out, "output directory for validate.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sim)) {
            std::optional<std::uint64_t> seed;
            if (sim_seed_opt->count()) seed = sim_seed;
            std::optional<std::size_t> n_paths;
            if (sim_np_opt->count()) n_paths = sim_n_paths;
            std::optional<double> t_end;
            if (sim_te_opt->count()) t_end = sim_t_end;
            return run_simulate(sim_config, sim_out, seed, n_paths, t_end,
                                sim_threads);
        }
        if (app.got_subcommand(solve)) {
            std::optional<double> t_end;
            if (solve_te_opt->count()) t_end = solve_t_end;
            return run_solve(solve_config, solve_out, t_end, solve_component);
        }
        if (app.got_subcommand(sweep)) return run_sweep(sweep_config, sweep_out);
        return run_validate(val_config, val_out, val_tol_scale, val_threads);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
