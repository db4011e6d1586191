#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsopt/rng.hpp"
#include "irsopt/types.hpp"

namespace irsopt::channel {

/// Physical layout of one scenario: BS uniform linear array, IRS uniform
/// planar array, and a user disk. Distances in meters, frequencies in Hz.
struct ScenarioGeometry {
    Eigen::Vector3d bs_center{0.0, 20.0, 10.0};
    Eigen::Vector3d irs_center{30.0, 0.0, 5.0};
    Eigen::Vector3d user_disk_center{350.0, 10.0, 2.0};
    double user_disk_radius = 5.0;
    double carrier_freq_hz = 2e9;
    double bandwidth_hz = 20e6;
    double noise_psd_dbm_per_hz = -174.0;
    // 0 means "half wavelength", resolved from carrier_freq_hz.
    double bs_antenna_spacing_m = 0.0;
    double irs_element_spacing_m = 0.0;
    // 0 means "two wavelengths".
    double min_user_separation_m = 0.0;

    double wavelength() const;
    double bs_spacing() const;
    double irs_spacing() const;
    double user_separation() const;

    /// Throws std::invalid_argument if any dimension is non-positive or the
    /// disk obviously cannot host K users at the required separation.
    void validate(int num_users) const;
};

/// Rician K-factors (linear ratios) and distance path-loss parameters per
/// link class. Factor 0 is Rayleigh; factors are capped at kappa_cap.
struct FadingParams {
    static constexpr double kappa_cap = 1e12;

    double rician_bs_irs = 1.9952623149688795;  // 3 dB
    double rician_irs_user = 1.9952623149688795;
    double rician_bs_user = 0.0;                // heavily obstructed direct link
    double pathloss_exp_bs_irs = 2.2;
    double pathloss_exp_irs_user = 2.2;
    double pathloss_exp_bs_user = 3.6;
    double reference_pathloss_db = 30.0;        // at 1 m

    void validate() const;
    double capped(double kappa) const;
};

/// One optimization problem: channels with the noise normalization already
/// applied to the BS-side links, per-user SINR floors, and dimensions.
struct ProblemInstance {
    int num_users = 0;         // K
    int num_bs_antennas = 0;   // N_t
    int num_irs_elements = 0;  // N_s
    CMat bs_irs;               // N_s x N_t, divided by sigma
    CMat bs_user;              // K x N_t rows, divided by sigma
    CMat irs_user;             // K x N_s rows, unnormalized
    RVec sinr_targets;         // K, linear, > 0

    void validate() const;
};

/// K user positions uniform on the disk with pairwise separation enforced
/// by rejection sampling. Deterministic given the seed. Throws
/// placement_failure after bounded retries.
std::vector<Eigen::Vector3d> place_users(const ScenarioGeometry& geom, int num_users,
                                         std::uint64_t rng_seed);

/// ref_db + 10 * exponent * log10(d / 1 m). Throws on d <= 0.
double pathloss_db(double distance_m, double exponent, double ref_db);

/// Total noise power: psd + 10 log10(bandwidth).
double noise_power_dbm(double psd_dbm_per_hz, double bandwidth_hz);

/// Draws a full problem instance: LoS from array steering vectors, NLoS
/// i.i.d. CN(0,1), Rician-weighted, amplitude path loss applied, BS-side
/// links divided by the noise std dev. Deterministic given the seed.
ProblemInstance generate_instance(const ScenarioGeometry& geom, const FadingParams& fading,
                                  int num_users, int num_bs_antennas, int num_irs_elements,
                                  const RVec& sinr_targets, std::uint64_t rng_seed);

/// Text interchange format ("re,im" entries, row-major), documented in the
/// README so external solvers can consume identical instances.
void write_instance(std::ostream& os, const ProblemInstance& inst);
ProblemInstance read_instance(std::istream& is);
void save_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance(const std::string& path);

} // namespace irsopt::channel
