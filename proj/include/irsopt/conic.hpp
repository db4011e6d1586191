#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "irsopt/types.hpp"

namespace irsopt::conic {

enum class ConeType { zero, nonneg, soc, rotated_soc, psd };

/// One cone block. `dim` counts rows of the constraint matrix it consumes;
/// for psd blocks dim = d(d+1)/2 (scaled lower triangle, column-major, with
/// off-diagonal entries multiplied by sqrt(2)).
struct Cone {
    ConeType type = ConeType::zero;
    int dim = 0;
};

/// Side length d of a psd block stored as a length-dim svec; throws if dim is
/// not a triangle number.
int psd_side(int dim);

/// Standard-form conic program
///     minimize    c'x
///     subject to  A x + s = b,   s in K,
/// with K the ordered product of `cones`. The rotated second-order cone uses
/// the convention {(u, v, z) : 2uv >= ||z||^2, u >= 0, v >= 0}.
struct ConicProgram {
    int num_vars = 0;
    RVec objective;                   // c
    double objective_offset = 0.0;    // added to reported objective values
    Eigen::SparseMatrix<double> constraints;  // A, m x n
    RVec rhs;                         // b
    std::vector<Cone> cones;
    std::vector<std::string> var_names;  // optional, for debugging

    int total_cone_dim() const;
    void validate() const;
};

enum class SolveStatus { optimal, primal_infeasible, dual_infeasible, max_iters, numerical_failure };

const char* to_string(SolveStatus s);

enum class KktMode { automatic, dense, structured };

struct SolverSettings {
    double tol = 1e-8;
    /// Accepted when the target tol cannot be reached before the KKT system
    /// becomes too ill-conditioned; the reported residuals always carry the
    /// actual values.
    double tol_inaccurate = 1e-6;
    int max_iters = 100;
    int psd_dim_cap = 200;      // largest allowed psd side length d
    KktMode kkt_mode = KktMode::automatic;
    int refine_steps = 2;
    bool verbose = false;
};

/// Outcome of one solve. On optimal, (x, y, s) satisfy the reported
/// residuals; on primal_infeasible, (y) carries the certificate ray
/// normalized to b'y = -1; on dual_infeasible, (x, s) carry the ray
/// normalized to c'x = -1.
struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    RVec x;            // primal
    RVec y;            // dual multiplier per constraint row
    RVec s;            // slack per constraint row
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double duality_gap = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;
};

/// Homogeneous self-dual interior-point solve with Nesterov-Todd scaling.
/// Dense factorizations; deterministic for fixed inputs.
SolveResult solve(const ConicProgram& prog, const SolverSettings& settings = {});

/// Recomputes residuals, cone membership, and the duality gap (or the
/// certificate identities for infeasible statuses) from scratch.
bool verify_certificate(const ConicProgram& prog, const SolveResult& result, double tol = 1e-6);

/// Versioned text interchange format for cross-validation against external
/// solvers.
void write_program(std::ostream& os, const ConicProgram& prog);
ConicProgram read_program(std::istream& is);
void save_program(const std::string& path, const ConicProgram& prog);
ConicProgram load_program(const std::string& path);

} // namespace irsopt::conic
