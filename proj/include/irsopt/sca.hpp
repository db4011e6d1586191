#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsopt/bounds.hpp"
#include "irsopt/conic.hpp"
#include "irsopt/sysmodel.hpp"

namespace irsopt::sca {

using bounds::ExpansionPoint;
using channel::ProblemInstance;
using sysmodel::DesignPoint;

struct ScaSettings {
    double xi = 1e-3;            // unit-modulus penalty weight
    double rel_obj_tol = 1e-5;   // relative change of the penalized objective
    int max_iters = 20;
    bool scale_and_resolve = true;  // project phi and re-solve the fixed-phi SOCP on exit
    double tol_mod = 1e-3;
    int init_retries = 20;
    conic::SolverSettings solver;

    void validate() const;
};

struct ScaIterRow {
    int iter = 0;
    double power = 0.0;                // ||w||^2
    double penalized_objective = 0.0;  // ||w||^2 - xi ||phi||^2
    double min_sinr_margin = 0.0;
    double max_modulus_gap = 0.0;      // max_i | |phi_i| - 1 |
    double solve_seconds = 0.0;
    double cum_seconds = 0.0;
};

struct ScaTrace {
    std::vector<ScaIterRow> rows;
    bool converged = false;           // stopped on the relative-change rule
    bool projected = false;           // exit projection was applied
    bool resolve_infeasible = false;  // the post-projection re-solve failed
    bool solver_stop = false;         // a late update failed; incumbent kept

    /// One row per iteration; documented header. `algorithm` fills the
    /// second column so SCA and baseline traces share one schema.
    void write_csv(std::ostream& os, const std::string& algorithm) const;
};

enum class RunStatus { ok, solver_failure };

struct ScaResult {
    RunStatus status = RunStatus::ok;
    DesignPoint point;
    ScaTrace trace;
    bool feasible = false;
};

/// ||w||^2 - xi ||phi||^2, the penalized objective whose sequence the
/// algorithm drives downward; bounded below by -xi N_s when |phi_i| <= 1.
double penalized_objective(const DesignPoint& dp, double xi);

/// Compiles the convex subproblem at the expansion point to a standard-form
/// conic program over [Re w; Im w; Re phi; Im phi; t; tbar; tau]:
/// exactly 2(K N_t + N_s + K(K-1)) + 1 variables and
/// K + 4K(K-1) + N_s + 1 cones.
conic::ConicProgram assemble_subproblem(const ProblemInstance& inst, const ExpansionPoint& ep,
                                        double xi);

/// Unit-modulus phases drawn uniformly, beamformers from the fixed-phi power
/// minimization; redraws when that problem is infeasible. Throws
/// initialization_infeasible after the retry budget.
DesignPoint initialize(const ProblemInstance& inst, std::uint64_t rng_seed,
                       const ScaSettings& settings = {});

/// The full simultaneous-update loop: solve the subproblem, move, stop on
/// relative objective change or the iteration cap, then project/re-solve if
/// the relaxation left slack in the modulus constraint.
ScaResult run(const ProblemInstance& inst, const ScaSettings& settings, std::uint64_t rng_seed);

/// Auxiliary-variable indices of the compiled subproblem, shared with tests
/// and the structural-count checks.
struct SubproblemLayout {
    bounds::VariableLayout base;
    int num_pairs = 0;  // K(K-1)

    int t_index(int k, int l) const;     // t_{kl}, k != l
    int tbar_index(int k, int l) const;
    int tau_index() const { return base.base_dim() + 2 * num_pairs; }
    int dim() const { return base.base_dim() + 2 * num_pairs + 1; }

    static SubproblemLayout of(const ProblemInstance& inst);
};

} // namespace irsopt::sca
