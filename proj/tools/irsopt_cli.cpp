#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "irsopt/baselines.hpp"
#include "irsopt/harness.hpp"
#include "irsopt/sca.hpp"

using namespace irsopt;

namespace {

// exit codes per error category, mirrored in the stderr line
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kPlacementFailure = 3;
constexpr int kInitInfeasible = 4;
constexpr int kInfeasibleSolution = 5;
constexpr int kSolverFailure = 6;
constexpr int kIoError = 7;

int report_error(const char* category, const std::string& message, int code) {
    std::fprintf(stderr, "error: category=%s message=%s\n", category, message.c_str());
    return code;
}

void print_report(const channel::ProblemInstance& inst, const sysmodel::FeasibilityReport& rep,
                  double power) {
    std::printf("transmit power: %.6g (%.2f dBm)\n", power, harness::power_to_dbm(power));
    for (int k = 0; k < inst.num_users; ++k)
        std::printf("user %d: SINR %.4f dB (target %.4f dB, margin %+.3e)\n", k,
                    linear_to_db(rep.sinr(k)), linear_to_db(inst.sinr_targets(k)),
                    rep.sinr_margin(k));
    std::printf("max modulus violation: %.3e\n", rep.max_modulus_violation);
    std::printf("feasible: %s\n", rep.feasible ? "yes" : "no");
}

void apply_paper_scale(harness::ExperimentConfig& cfg) {
    cfg.n_realizations = 100;
    cfg.sdr_settings.n_randomizations = 1000;
    if (!cfg.ns_sweep.empty()) cfg.ns_sweep = {36, 49, 64, 81, 100};
    cfg.sdr_settings.solver.psd_dim_cap =
        std::max(cfg.sdr_settings.solver.psd_dim_cap, 2 * (101 + 1));
}

int cmd_generate(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed) {
    auto cfg = harness::load_config(config_path);
    if (has_seed) cfg.master_seed = seed_override;
    std::filesystem::create_directories(out_dir);
    const auto sweep = cfg.sweep_values();
    int written = 0;
    for (std::size_t si = 0; si < sweep.size(); ++si) {
        const int ns = (cfg.sweep_axis() == harness::SweepAxis::irs_elements)
                           ? static_cast<int>(sweep[si])
                           : cfg.irs_elements;
        const double gamma_db =
            (cfg.sweep_axis() == harness::SweepAxis::gamma_db) ? sweep[si] : cfg.gamma_db;
        for (int r = 0; r < cfg.n_realizations; ++r) {
            const std::uint64_t seed =
                splitmix64(cfg.master_seed ^ (0x9e3779b97f4a7c15ULL * (ns + 1))) +
                static_cast<std::uint64_t>(r);
            const auto inst = channel::generate_instance(
                cfg.geometry, cfg.fading, cfg.num_users, cfg.num_bs_antennas, ns,
                RVec::Constant(cfg.num_users, db_to_linear(gamma_db)), seed);
            char name[128];
            std::snprintf(name, sizeof name, "inst_s%02zu_r%03d.inst", si, r);
            channel::save_instance((std::filesystem::path(out_dir) / name).string(), inst);
            ++written;
        }
    }
    std::printf("wrote %d instances to %s\n", written, out_dir.c_str());
    return kOk;
}

int cmd_solve(const std::string& instance_path, const std::string& alg, std::uint64_t seed,
              const std::string& trace_path, const std::string& solution_path, double xi,
              int max_iters, int randomizations) {
    const auto inst = channel::load_instance(instance_path);
    sysmodel::DesignPoint point;
    sca::ScaTrace trace;
    bool ok = false;
    if (alg == "sca") {
        sca::ScaSettings st;
        st.xi = xi;
        st.max_iters = max_iters;
        const auto out = sca::run(inst, st, seed);
        if (out.status != sca::RunStatus::ok)
            return report_error("solver-failure", "subproblem solver failed", kSolverFailure);
        point = out.point;
        trace = out.trace;
        ok = out.feasible;
    } else if (alg == "ao") {
        baselines::SdrSettings st;
        st.n_randomizations = randomizations;
        st.ao_max_rounds = max_iters;
        const auto out = baselines::run_ao(inst, st, seed);
        if (out.status != sca::RunStatus::ok)
            return report_error("solver-failure", "phase or beamformer update failed",
                                kSolverFailure);
        point = out.point;
        trace = out.trace;
        ok = out.feasible;
    } else {
        return report_error("config-error", "unknown algorithm '" + alg + "'", kConfigError);
    }

    const auto rep = sysmodel::check_feasibility(inst, point);
    print_report(inst, rep, sysmodel::transmit_power(point));
    if (!trace_path.empty()) {
        std::ofstream os(trace_path);
        if (!os) return report_error("io-error", "cannot write " + trace_path, kIoError);
        trace.write_csv(os, alg == "ao" ? "sdr-ao" : "sca");
    }
    if (!solution_path.empty()) sysmodel::save_design(solution_path, point);
    if (!ok)
        return report_error("infeasible-solution", "returned point violates the constraints",
                            kInfeasibleSolution);
    return kOk;
}

int cmd_benchmark(const std::string& config_path, const std::string& out_dir, bool paper_scale) {
    auto cfg = harness::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (paper_scale) apply_paper_scale(cfg);
    const auto report = harness::run_experiment(cfg);
    harness::emit_figures(report, cfg.output_dir);
    std::printf("%-10s %-8s %12s %12s %10s %8s\n", "sweep", "alg", "mean dBm", "std dBm",
                "mean time", "n");
    for (const auto& a : report.aggregates)
        std::printf("%-10.4g %-8s %12.4f %12.4f %9.3fs %8d\n", a.sweep_value,
                    a.algorithm.c_str(), a.mean_power_dbm, a.std_power_dbm,
                    a.mean_solve_seconds, a.n_included);
    std::printf("figure data written to %s\n", cfg.output_dir.c_str());
    return kOk;
}

int cmd_verify(const std::string& instance_path, const std::string& solution_path) {
    const auto inst = channel::load_instance(instance_path);
    const auto point = sysmodel::load_design(solution_path);
    try {
        point.validate(inst);
    } catch (const std::invalid_argument& e) {
        return report_error("infeasible-solution", e.what(), kInfeasibleSolution);
    }
    const auto rep = sysmodel::check_feasibility(inst, point);
    print_report(inst, rep, sysmodel::transmit_power(point));
    if (!rep.feasible)
        return report_error("infeasible-solution", "solution violates the constraints",
                            kInfeasibleSolution);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IRS-assisted downlink beamforming: power minimization under SINR floors"};
    app.require_subcommand(1);

    std::string config_path, out_dir, instance_path, solution_path, trace_path;
    std::string alg = "sca";
    std::uint64_t seed = 1;
    bool paper_scale = false;
    double xi = 1e-3;
    int max_iters = 20;
    int randomizations = 1000;

    auto* gen = app.add_subcommand("generate", "write problem instances from a config");
    gen->add_option("--config", config_path, "experiment config file")->required();
    gen->add_option("--out", out_dir, "output directory")->required();
    auto* gen_seed = gen->add_option("--seed", seed, "master seed override");

    auto* solve = app.add_subcommand("solve", "run one algorithm on one instance");
    solve->add_option("--instance", instance_path, "instance file")->required();
    solve->add_option("--alg", alg, "sca | ao");
    solve->add_option("--seed", seed, "initialization seed");
    solve->add_option("--out", trace_path, "trace CSV path");
    solve->add_option("--solution", solution_path, "solution output path");
    solve->add_option("--xi", xi, "modulus penalty weight");
    solve->add_option("--max-iters", max_iters, "iteration cap");
    solve->add_option("--randomizations", randomizations, "Gaussian candidates per phase update");

    auto* bench = app.add_subcommand("benchmark", "run the configured experiment and emit figures");
    bench->add_option("--config", config_path, "experiment config file")->required();
    bench->add_option("--out", out_dir, "output directory override");
    bench->add_flag("--paper-scale", paper_scale,
                    "full-scale protocol: 100 realizations, 1000 randomizations, larger sweep");

    auto* verify = app.add_subcommand("verify", "check an instance/solution pair");
    verify->add_option("--instance", instance_path, "instance file")->required();
    verify->add_option("--solution", solution_path, "solution file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(config_path, out_dir, seed, !gen_seed->empty());
        if (solve->parsed())
            return cmd_solve(instance_path, alg, seed, trace_path, solution_path, xi, max_iters,
                             randomizations);
        if (bench->parsed()) return cmd_benchmark(config_path, out_dir, paper_scale);
        if (verify->parsed()) return cmd_verify(instance_path, solution_path);
    } catch (const placement_failure& e) {
        return report_error("placement-failure", e.what(), kPlacementFailure);
    } catch (const initialization_infeasible& e) {
        return report_error("initialization-infeasible", e.what(), kInitInfeasible);
    } catch (const std::invalid_argument& e) {
        return report_error("config-error", e.what(), kConfigError);
    } catch (const std::runtime_error& e) {
        return report_error("io-error", e.what(), kIoError);
    }
    return kOk;
}
