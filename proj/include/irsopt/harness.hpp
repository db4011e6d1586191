#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsopt/baselines.hpp"
#include "irsopt/channel.hpp"
#include "irsopt/conic.hpp"
#include "irsopt/sca.hpp"

namespace irsopt::harness {

/// dBm of a normalized power value. Channels are divided by the noise std
/// dev at generation time, so ||w||^2 is already in watts; only the
/// watt <-> dBm conversion remains.
double power_to_dbm(double power_watts);
double power_from_dbm(double dbm);

enum class SweepAxis { none, irs_elements, gamma_db };

struct ExperimentConfig {
    channel::ScenarioGeometry geometry;
    channel::FadingParams fading;
    int num_users = 4;
    int num_bs_antennas = 4;
    int irs_elements = 16;               // used when ns_sweep is empty
    std::vector<int> ns_sweep;           // sweep axis: IRS element counts
    double gamma_db = 10.0;              // used when gamma_db_sweep is empty
    std::vector<double> gamma_db_sweep;  // sweep axis: SINR targets
    bool run_sca = true;
    bool run_ao = true;
    sca::ScaSettings sca_settings;
    baselines::SdrSettings sdr_settings;
    int n_realizations = 25;
    std::uint64_t master_seed = 1;
    int workers = 0;  // 0 = hardware concurrency
    std::string output_dir = "out";

    SweepAxis sweep_axis() const;
    std::vector<double> sweep_values() const;
    void validate() const;
};

/// `key = value` lines, '#' comments; unknown keys and malformed values are
/// reported with their line number. Missing keys keep the defaults.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

struct RealizationRow {
    int sweep_index = 0;
    double sweep_value = 0.0;
    int realization = 0;
    std::string algorithm;
    std::uint64_t instance_hash = 0;
    bool failed = false;      // initialization or solver failure
    bool feasible = false;
    double power = 0.0;       // normalized watts
    double power_dbm = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;  // solver wall time only
};

struct AggregateRow {
    int sweep_index = 0;
    double sweep_value = 0.0;
    std::string algorithm;
    int n_included = 0;
    int n_excluded = 0;  // realizations dropped to keep comparisons paired
    double mean_power_dbm = 0.0;
    double std_power_dbm = 0.0;
    double mean_iterations = 0.0;
    double mean_solve_seconds = 0.0;
};

struct ExperimentReport {
    SweepAxis axis = SweepAxis::none;
    std::vector<double> sweep;
    std::vector<RealizationRow> rows;
    std::vector<AggregateRow> aggregates;
    /// Realization-0 traces per (sweep index, algorithm), for the
    /// convergence figure.
    struct TraceEntry {
        int sweep_index = 0;
        double gamma_db = 0.0;
        std::string algorithm;
        sca::ScaTrace trace;
    };
    std::vector<TraceEntry> traces;

    const AggregateRow* aggregate(int sweep_index, const std::string& algorithm) const;
};

/// Runs every selected algorithm on byte-identical instances per
/// realization, in a worker pool with per-realization RNG streams.
/// Realizations where any selected algorithm fails to initialize are
/// excluded from the aggregates (and counted), keeping comparisons paired.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes fig2_convergence.csv, fig3_power_vs_ns.csv, fig4_runtime_vs_ns.csv,
/// realizations.csv, and a plot script, all with deterministic names.
void emit_figures(const ExperimentReport& report, const std::string& out_dir);

/// True iff the compiled subproblem's variable and cone counts equal the
/// closed-form formulas for the instance dimensions.
bool validate_counts(const channel::ProblemInstance& inst, const conic::ConicProgram& subproblem);

/// FNV-1a over the instance's binary content; used for the pairing contract.
std::uint64_t instance_hash(const channel::ProblemInstance& inst);

} // namespace irsopt::harness
