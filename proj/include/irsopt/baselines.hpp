#pragma once

#include <cstdint>

#include "irsopt/conic.hpp"
#include "irsopt/sca.hpp"
#include "irsopt/sysmodel.hpp"

namespace irsopt::baselines {

using channel::ProblemInstance;
using sysmodel::DesignPoint;

struct SdrSettings {
    int n_randomizations = 1000;
    int ao_max_rounds = 20;
    double ao_rel_tol = 1e-5;
    conic::SolverSettings solver;

    void validate() const;
};

struct WUpdateResult {
    conic::SolveStatus status = conic::SolveStatus::numerical_failure;
    CVec beamformers;  // valid when status == optimal
    double power = 0.0;
};

/// Fixed-phi transmit power minimization as one SOCP per user, via the
/// phase-rotation reformulation Re{g_k w_k} >= sqrt(Gamma_k) ||[1; g_k w_l]||.
/// Infeasible is a valid outcome (targets unattainable at this phi).
WUpdateResult w_update(const ProblemInstance& inst, const CVec& irs_coeffs,
                       const conic::SolverSettings& solver = {});

/// Fixed-w phase update: semidefinite lift of the homogenized quadratic
/// forms, slack maximization, then Gaussian randomization. Returns the best
/// unit-modulus candidate by minimum SINR slack, never worse than the
/// incumbent.
CVec phi_update_sdr(const ProblemInstance& inst, const CVec& beamformers, const CVec& incumbent,
                    const SdrSettings& settings, std::uint64_t rng_seed);

struct AoResult {
    sca::RunStatus status = sca::RunStatus::ok;
    DesignPoint point;
    sca::ScaTrace trace;  // same schema as the SCA trace
    bool feasible = false;
};

/// Alternating rounds of w_update / phi_update_sdr from a random
/// unit-modulus start, stopping on relative power change or the round cap.
AoResult run_ao(const ProblemInstance& inst, const SdrSettings& settings, std::uint64_t rng_seed);

enum class Method { socp, sdr };

/// Per-iteration interior-point flop order: the full polynomial for the
/// simultaneous-update SOCP, N_s^7 for the semidefinite relaxation.
double complexity_estimate(Method method, int num_users, int num_bs_antennas,
                           int num_irs_elements);

} // namespace irsopt::baselines
