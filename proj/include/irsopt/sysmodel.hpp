#pragma once

#include <iosfwd>
#include <string>

#include "irsopt/channel.hpp"
#include "irsopt/types.hpp"

namespace irsopt::sysmodel {

using channel::ProblemInstance;

/// Candidate solution: stacked per-user beamformers and one IRS
/// reflection-coefficient vector. `unit_modulus` records which contract the
/// point claims: relaxed (|phi_i| <= 1) or unit-modulus (|phi_i| = 1 within
/// tolerance); validate() enforces the claimed one.
struct DesignPoint {
    CVec beamformers;  // K * N_t, user k occupies [k*N_t, (k+1)*N_t)
    CVec irs_coeffs;   // N_s
    bool unit_modulus = false;

    Eigen::VectorBlock<const CVec> user(int k, int num_bs_antennas) const {
        return beamformers.segment(static_cast<Eigen::Index>(k) * num_bs_antennas, num_bs_antennas);
    }

    void validate(const ProblemInstance& inst, double tol_mod = 1e-3) const;
};

struct FeasibilityReport {
    RVec sinr;               // linear, per user
    RVec sinr_margin;        // sinr_k - target_k
    double max_modulus_violation = 0.0;  // max_i | |phi_i| - 1 |
    bool feasible = false;
};

/// g_k = h_tk + h_sk diag(phi) H_ts, a 1 x N_t row.
CRowVec effective_channel(const ProblemInstance& inst, const CVec& irs_coeffs, int k);

/// |g_k w_k|^2 / (1 + sum_{l != k} |g_k w_l|^2), unit noise after normalization.
double sinr(const ProblemInstance& inst, const DesignPoint& dp, int k);

/// ||w||^2 (normalized transmit power, watts).
double transmit_power(const DesignPoint& dp);

/// SINR tolerance is relative to each user's target; modulus tolerance is
/// absolute on | |phi_i| - 1 |.
FeasibilityReport check_feasibility(const ProblemInstance& inst, const DesignPoint& dp,
                                    double tol_sinr = 1e-6, double tol_mod = 1e-3);

/// Same text format family as problem instances (complex "re,im" pairs).
void write_design(std::ostream& os, const DesignPoint& dp);
DesignPoint read_design(std::istream& is);
void save_design(const std::string& path, const DesignPoint& dp);
DesignPoint load_design(const std::string& path);

} // namespace irsopt::sysmodel
