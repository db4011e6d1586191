#include "irsopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace irsopt::harness {

double power_to_dbm(double power_watts) { return watt_to_dbm(power_watts); }
double power_from_dbm(double dbm) { return dbm_to_watt(dbm); }

SweepAxis ExperimentConfig::sweep_axis() const {
    if (!ns_sweep.empty()) return SweepAxis::irs_elements;
    if (!gamma_db_sweep.empty()) return SweepAxis::gamma_db;
    return SweepAxis::none;
}

std::vector<double> ExperimentConfig::sweep_values() const {
    switch (sweep_axis()) {
        case SweepAxis::irs_elements: {
            std::vector<double> v(ns_sweep.begin(), ns_sweep.end());
            return v;
        }
        case SweepAxis::gamma_db:
            return gamma_db_sweep;
        case SweepAxis::none:
            return {0.0};
    }
    return {};
}

void ExperimentConfig::validate() const {
    if (num_users < 1 || num_bs_antennas < 1) throw std::invalid_argument("counts must be >= 1");
    if (n_realizations < 1) throw std::invalid_argument("n_realizations must be >= 1");
    if (!ns_sweep.empty() && !gamma_db_sweep.empty())
        throw std::invalid_argument("configure at most one sweep axis");
    for (int ns : ns_sweep)
        if (ns < 1) throw std::invalid_argument("sweep values must be positive");
    if (ns_sweep.empty() && irs_elements < 1)
        throw std::invalid_argument("irs_elements must be >= 1");
    if (!run_sca && !run_ao) throw std::invalid_argument("select at least one algorithm");
    sca_settings.validate();
    sdr_settings.validate();
    geometry.validate(num_users);
    fading.validate();
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> tokens_of(const std::string& s) {
    std::istringstream iss(s);
    std::vector<std::string> out;
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) fail_line(line, "malformed number '" + tok + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        fail_line(line, "malformed number '" + tok + "'");
    }
}

int parse_int(const std::string& tok, int line) {
    const double v = parse_double(tok, line);
    const int i = static_cast<int>(std::lround(v));
    if (std::abs(v - i) > 1e-9) fail_line(line, "expected an integer, got '" + tok + "'");
    return i;
}

bool parse_bool(const std::string& tok, int line) {
    if (tok == "true" || tok == "1" || tok == "yes") return true;
    if (tok == "false" || tok == "0" || tok == "no") return false;
    fail_line(line, "expected a boolean, got '" + tok + "'");
}

Eigen::Vector3d parse_vec3(const std::vector<std::string>& toks, int line) {
    if (toks.size() != 3) fail_line(line, "expected three coordinates");
    return {parse_double(toks[0], line), parse_double(toks[1], line),
            parse_double(toks[2], line)};
}

} // namespace

ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig cfg;
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const auto eq = raw.find('=');
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos) fail_line(line, "expected 'key = value'");
        std::string key = raw.substr(0, eq);
        std::string value = raw.substr(eq + 1);
        const auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            s = (b == std::string::npos) ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.empty()) fail_line(line, "empty key");
        const auto toks = tokens_of(value);
        auto one = [&]() -> const std::string& {
            if (toks.size() != 1) fail_line(line, "key '" + key + "' expects one value");
            return toks[0];
        };

        if (key == "users") cfg.num_users = parse_int(one(), line);
        else if (key == "bs_antennas") cfg.num_bs_antennas = parse_int(one(), line);
        else if (key == "irs_elements") cfg.irs_elements = parse_int(one(), line);
        else if (key == "ns_sweep") {
            cfg.ns_sweep.clear();
            for (const auto& t : toks) cfg.ns_sweep.push_back(parse_int(t, line));
        } else if (key == "gamma_db") cfg.gamma_db = parse_double(one(), line);
        else if (key == "gamma_db_sweep") {
            cfg.gamma_db_sweep.clear();
            for (const auto& t : toks) cfg.gamma_db_sweep.push_back(parse_double(t, line));
        } else if (key == "realizations") cfg.n_realizations = parse_int(one(), line);
        else if (key == "master_seed") cfg.master_seed = static_cast<std::uint64_t>(parse_double(one(), line));
        else if (key == "workers") cfg.workers = parse_int(one(), line);
        else if (key == "out_dir") cfg.output_dir = one();
        else if (key == "run_sca") cfg.run_sca = parse_bool(one(), line);
        else if (key == "run_ao") cfg.run_ao = parse_bool(one(), line);
        else if (key == "xi") cfg.sca_settings.xi = parse_double(one(), line);
        else if (key == "sca_rel_tol") cfg.sca_settings.rel_obj_tol = parse_double(one(), line);
        else if (key == "sca_max_iters") cfg.sca_settings.max_iters = parse_int(one(), line);
        else if (key == "sdr_randomizations") cfg.sdr_settings.n_randomizations = parse_int(one(), line);
        else if (key == "ao_rel_tol") cfg.sdr_settings.ao_rel_tol = parse_double(one(), line);
        else if (key == "ao_max_rounds") cfg.sdr_settings.ao_max_rounds = parse_int(one(), line);
        else if (key == "solver_tol") {
            cfg.sca_settings.solver.tol = parse_double(one(), line);
            cfg.sdr_settings.solver.tol = cfg.sca_settings.solver.tol;
        } else if (key == "psd_dim_cap") {
            cfg.sdr_settings.solver.psd_dim_cap = parse_int(one(), line);
        } else if (key == "bs_center") cfg.geometry.bs_center = parse_vec3(toks, line);
        else if (key == "irs_center") cfg.geometry.irs_center = parse_vec3(toks, line);
        else if (key == "user_disk_center") cfg.geometry.user_disk_center = parse_vec3(toks, line);
        else if (key == "user_disk_radius") cfg.geometry.user_disk_radius = parse_double(one(), line);
        else if (key == "carrier_freq_hz") cfg.geometry.carrier_freq_hz = parse_double(one(), line);
        else if (key == "bandwidth_hz") cfg.geometry.bandwidth_hz = parse_double(one(), line);
        else if (key == "noise_psd_dbm_per_hz") cfg.geometry.noise_psd_dbm_per_hz = parse_double(one(), line);
        else if (key == "bs_antenna_spacing_m") cfg.geometry.bs_antenna_spacing_m = parse_double(one(), line);
        else if (key == "irs_element_spacing_m") cfg.geometry.irs_element_spacing_m = parse_double(one(), line);
        else if (key == "min_user_separation_m") cfg.geometry.min_user_separation_m = parse_double(one(), line);
        else if (key == "rician_bs_irs") cfg.fading.rician_bs_irs = parse_double(one(), line);
        else if (key == "rician_irs_user") cfg.fading.rician_irs_user = parse_double(one(), line);
        else if (key == "rician_bs_user") cfg.fading.rician_bs_user = parse_double(one(), line);
        else if (key == "pathloss_exp_bs_irs") cfg.fading.pathloss_exp_bs_irs = parse_double(one(), line);
        else if (key == "pathloss_exp_irs_user") cfg.fading.pathloss_exp_irs_user = parse_double(one(), line);
        else if (key == "pathloss_exp_bs_user") cfg.fading.pathloss_exp_bs_user = parse_double(one(), line);
        else if (key == "reference_pathloss_db") cfg.fading.reference_pathloss_db = parse_double(one(), line);
        else fail_line(line, "unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    return parse_config(is);
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

std::uint64_t instance_hash(const channel::ProblemInstance& inst) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    mix(&inst.num_users, sizeof inst.num_users);
    mix(&inst.num_bs_antennas, sizeof inst.num_bs_antennas);
    mix(&inst.num_irs_elements, sizeof inst.num_irs_elements);
    mix(inst.bs_irs.data(), sizeof(cplx) * inst.bs_irs.size());
    mix(inst.bs_user.data(), sizeof(cplx) * inst.bs_user.size());
    mix(inst.irs_user.data(), sizeof(cplx) * inst.irs_user.size());
    mix(inst.sinr_targets.data(), sizeof(double) * inst.sinr_targets.size());
    return h;
}

const AggregateRow* ExperimentReport::aggregate(int sweep_index,
                                                const std::string& algorithm) const {
    for (const auto& a : aggregates)
        if (a.sweep_index == sweep_index && a.algorithm == algorithm) return &a;
    return nullptr;
}

namespace {

double solver_time_of(const sca::ScaTrace& trace) {
    double t = 0.0;
    for (const auto& r : trace.rows) t += r.solve_seconds;
    return t;
}

struct TaskResult {
    RealizationRow sca_row, ao_row;
    sca::ScaTrace sca_trace, ao_trace;
    bool have_traces = false;
};

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.axis = config.sweep_axis();
    report.sweep = config.sweep_values();

    const int n_sweep = static_cast<int>(report.sweep.size());
    const int n_real = config.n_realizations;
    std::vector<TaskResult> results(static_cast<std::size_t>(n_sweep) * n_real);

    struct Task {
        int si, r;
    };
    std::vector<Task> tasks;
    tasks.reserve(results.size());
    for (int si = 0; si < n_sweep; ++si)
        for (int r = 0; r < n_real; ++r) tasks.push_back({si, r});

    auto run_task = [&](const Task& task) {
        const int si = task.si;
        const int ns = (report.axis == SweepAxis::irs_elements)
                           ? static_cast<int>(report.sweep[si])
                           : config.irs_elements;
        const double gamma_db = (report.axis == SweepAxis::gamma_db) ? report.sweep[si]
                                                                     : config.gamma_db;
        const double gamma = db_to_linear(gamma_db);

        // channel seed depends on dimensions and realization only, so a
        // gamma sweep reuses identical fading realizations
        const std::uint64_t seed =
            splitmix64(config.master_seed ^ (0x9e3779b97f4a7c15ULL * (ns + 1))) +
            static_cast<std::uint64_t>(task.r);

        TaskResult& slot = results[static_cast<std::size_t>(si) * n_real + task.r];
        auto fill_common = [&](RealizationRow& row, const char* alg) {
            row.sweep_index = si;
            row.sweep_value = report.sweep[si];
            row.realization = task.r;
            row.algorithm = alg;
        };
        fill_common(slot.sca_row, "sca");
        fill_common(slot.ao_row, "sdr-ao");

        channel::ProblemInstance inst;
        try {
            inst = channel::generate_instance(config.geometry, config.fading, config.num_users,
                                              config.num_bs_antennas, ns,
                                              RVec::Constant(config.num_users, gamma), seed);
        } catch (const std::exception&) {
            slot.sca_row.failed = slot.ao_row.failed = true;
            return;
        }
        const std::uint64_t hash = instance_hash(inst);
        slot.sca_row.instance_hash = slot.ao_row.instance_hash = hash;

        if (config.run_sca) {
            try {
                const auto out = sca::run(inst, config.sca_settings, seed);
                slot.sca_row.failed = out.status != sca::RunStatus::ok;
                slot.sca_row.feasible = out.feasible;
                slot.sca_row.power = sysmodel::transmit_power(out.point);
                slot.sca_row.power_dbm = power_to_dbm(slot.sca_row.power);
                slot.sca_row.iterations = static_cast<int>(out.trace.rows.size()) - 1;
                slot.sca_row.solve_seconds = solver_time_of(out.trace);
                slot.sca_trace = out.trace;
                slot.have_traces = true;
            } catch (const std::exception&) {
                slot.sca_row.failed = true;
            }
        }
        if (config.run_ao) {
            try {
                const auto out = baselines::run_ao(inst, config.sdr_settings, seed);
                slot.ao_row.failed = out.status != sca::RunStatus::ok;
                slot.ao_row.feasible = out.feasible;
                slot.ao_row.power = sysmodel::transmit_power(out.point);
                slot.ao_row.power_dbm = power_to_dbm(slot.ao_row.power);
                slot.ao_row.iterations = static_cast<int>(out.trace.rows.size()) - 1;
                slot.ao_row.solve_seconds = solver_time_of(out.trace);
                slot.ao_trace = out.trace;
                slot.have_traces = true;
            } catch (const std::exception&) {
                slot.ao_row.failed = true;
            }
        }
    };

    int n_workers = config.workers > 0
                        ? config.workers
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(tasks.size())));
    if (n_workers == 1) {
        for (const auto& t : tasks) run_task(t);
    } else {
        std::mutex mtx;
        std::size_t next = 0;
        auto worker = [&] {
            for (;;) {
                std::size_t mine;
                {
                    std::lock_guard<std::mutex> lock(mtx);
                    if (next >= tasks.size()) return;
                    mine = next++;
                }
                run_task(tasks[mine]);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // collect rows in deterministic order and aggregate pairwise
    for (int si = 0; si < n_sweep; ++si) {
        struct Acc {
            std::vector<double> dbm;
            double iters = 0.0, secs = 0.0;
        } acc_sca, acc_ao;
        int excluded = 0;
        for (int r = 0; r < n_real; ++r) {
            const TaskResult& slot = results[static_cast<std::size_t>(si) * n_real + r];
            if (config.run_sca) report.rows.push_back(slot.sca_row);
            if (config.run_ao) report.rows.push_back(slot.ao_row);
            const bool ok = (!config.run_sca || (!slot.sca_row.failed && slot.sca_row.feasible)) &&
                            (!config.run_ao || (!slot.ao_row.failed && slot.ao_row.feasible));
            if (!ok) {
                ++excluded;
                continue;
            }
            if (config.run_sca) {
                acc_sca.dbm.push_back(slot.sca_row.power_dbm);
                acc_sca.iters += slot.sca_row.iterations;
                acc_sca.secs += slot.sca_row.solve_seconds;
            }
            if (config.run_ao) {
                acc_ao.dbm.push_back(slot.ao_row.power_dbm);
                acc_ao.iters += slot.ao_row.iterations;
                acc_ao.secs += slot.ao_row.solve_seconds;
            }
        }
        auto push_agg = [&](const Acc& acc, const char* alg) {
            AggregateRow a;
            a.sweep_index = si;
            a.sweep_value = report.sweep[si];
            a.algorithm = alg;
            a.n_included = static_cast<int>(acc.dbm.size());
            a.n_excluded = excluded;
            if (!acc.dbm.empty()) {
                double mean = 0.0;
                for (double v : acc.dbm) mean += v;
                mean /= acc.dbm.size();
                double var = 0.0;
                for (double v : acc.dbm) var += (v - mean) * (v - mean);
                a.mean_power_dbm = mean;
                a.std_power_dbm = acc.dbm.size() > 1
                                      ? std::sqrt(var / (acc.dbm.size() - 1))
                                      : 0.0;
                a.mean_iterations = acc.iters / acc.dbm.size();
                a.mean_solve_seconds = acc.secs / acc.dbm.size();
            }
            report.aggregates.push_back(a);
        };
        if (config.run_sca) push_agg(acc_sca, "sca");
        if (config.run_ao) push_agg(acc_ao, "sdr-ao");

        const double gamma_db = (report.axis == SweepAxis::gamma_db) ? report.sweep[si]
                                                                     : config.gamma_db;
        const TaskResult& first = results[static_cast<std::size_t>(si) * n_real];
        if (config.run_sca && !first.sca_row.failed)
            report.traces.push_back({si, gamma_db, "sca", first.sca_trace});
        if (config.run_ao && !first.ao_row.failed)
            report.traces.push_back({si, gamma_db, "sdr-ao", first.ao_trace});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Figure emission
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
    return os;
}

} // namespace

void emit_figures(const ExperimentReport& report, const std::string& out_dir) {
    if (report.rows.empty()) throw std::invalid_argument("empty report");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    char buf[256];

    {
        auto os = open_out(dir / "fig2_convergence.csv");
        os << "iter,algorithm,gamma_db,power_dbm\n";
        // for an IRS-size sweep, the largest size stands in for the paper's
        // convergence figure; a gamma sweep emits one family per target
        int chosen_si = 0;
        if (report.axis == SweepAxis::irs_elements)
            chosen_si = static_cast<int>(report.sweep.size()) - 1;
        for (const auto& entry : report.traces) {
            if (report.axis == SweepAxis::irs_elements && entry.sweep_index != chosen_si)
                continue;
            for (const auto& r : entry.trace.rows) {
                std::snprintf(buf, sizeof buf, "%d,%s,%.6g,%.10g\n", r.iter,
                              entry.algorithm.c_str(), entry.gamma_db,
                              power_to_dbm(r.power));
                os << buf;
            }
        }
    }
    {
        auto os = open_out(dir / "fig3_power_vs_ns.csv");
        os << "ns,algorithm,mean_power_dbm,std_power_dbm,n_included,n_excluded\n";
        for (const auto& a : report.aggregates) {
            const double ns = (report.axis == SweepAxis::irs_elements) ? a.sweep_value : 0.0;
            std::snprintf(buf, sizeof buf, "%.6g,%s,%.10g,%.10g,%d,%d\n", ns,
                          a.algorithm.c_str(), a.mean_power_dbm, a.std_power_dbm, a.n_included,
                          a.n_excluded);
            os << buf;
        }
    }
    {
        auto os = open_out(dir / "fig4_runtime_vs_ns.csv");
        os << "ns,algorithm,mean_solve_time_s,mean_iterations,n_included\n";
        for (const auto& a : report.aggregates) {
            const double ns = (report.axis == SweepAxis::irs_elements) ? a.sweep_value : 0.0;
            std::snprintf(buf, sizeof buf, "%.6g,%s,%.10g,%.10g,%d\n", ns, a.algorithm.c_str(),
                          a.mean_solve_seconds, a.mean_iterations, a.n_included);
            os << buf;
        }
    }
    {
        auto os = open_out(dir / "realizations.csv");
        os << "sweep_index,sweep_value,realization,algorithm,instance_hash,failed,feasible,"
              "power,power_dbm,iterations,solve_time_s\n";
        for (const auto& r : report.rows) {
            std::snprintf(buf, sizeof buf, "%d,%.6g,%d,%s,%016llx,%d,%d,%.10g,%.10g,%d,%.6g\n",
                          r.sweep_index, r.sweep_value, r.realization, r.algorithm.c_str(),
                          static_cast<unsigned long long>(r.instance_hash), r.failed ? 1 : 0,
                          r.feasible ? 1 : 0, r.power, r.power_dbm, r.iterations,
                          r.solve_seconds);
            os << buf;
        }
    }
    {
        auto os = open_out(dir / "plot_figures.py");
        os << R"PY(#!/usr/bin/env python3
"""Plots the benchmark CSVs emitted next to this script."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(here, name)) as f:
        return list(csv.DictReader(f))


def fig2():
    rows = read("fig2_convergence.csv")
    series = defaultdict(list)
    for r in rows:
        series[(r["algorithm"], r["gamma_db"])].append((int(r["iter"]), float(r["power_dbm"])))
    plt.figure()
    for (alg, gdb), pts in sorted(series.items()):
        pts.sort()
        plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                 label=f"{alg}, target {gdb} dB")
    plt.xlabel("iteration")
    plt.ylabel("transmit power (dBm)")
    plt.legend()
    plt.grid(True)
    plt.savefig(os.path.join(here, "fig2_convergence.png"), dpi=150)


def sweep_plot(name, ycol, ylabel, out, logy=False):
    rows = read(name)
    series = defaultdict(list)
    for r in rows:
        series[r["algorithm"]].append((float(r["ns"]), float(r[ycol])))
    plt.figure()
    for alg, pts in sorted(series.items()):
        pts.sort()
        plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label=alg)
    if logy:
        plt.yscale("log")
    plt.xlabel("IRS elements")
    plt.ylabel(ylabel)
    plt.legend()
    plt.grid(True)
    plt.savefig(os.path.join(here, out), dpi=150)


if __name__ == "__main__":
    fig2()
    sweep_plot("fig3_power_vs_ns.csv", "mean_power_dbm", "average transmit power (dBm)",
               "fig3_power_vs_ns.png")
    sweep_plot("fig4_runtime_vs_ns.csv", "mean_solve_time_s", "average solve time (s)",
               "fig4_runtime_vs_ns.png", logy=True)
    print("wrote figures to", here)
)PY";
    }
}

bool validate_counts(const channel::ProblemInstance& inst,
                     const conic::ConicProgram& subproblem) {
    const int k = inst.num_users, nt = inst.num_bs_antennas, ns = inst.num_irs_elements;
    const int want_vars = 2 * (k * nt + ns + k * (k - 1)) + 1;
    const int want_cones = k + 4 * k * (k - 1) + ns + 1;
    return subproblem.num_vars == want_vars &&
           static_cast<int>(subproblem.cones.size()) == want_cones;
}

} // namespace irsopt::harness
