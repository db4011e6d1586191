#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace irsopt {

using cplx = std::complex<double>;

using CVec = Eigen::VectorXcd;
using CRowVec = Eigen::RowVectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Thrown when user placement cannot satisfy the minimum-separation
/// constraint inside the disk after bounded retries.
struct placement_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when no feasible beamformer exists for any of the sampled
/// initial phase vectors (SINR targets unattainable at the instance).
struct initialization_infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// dBm <-> watt conversions, used only at I/O boundaries.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

} // namespace irsopt
