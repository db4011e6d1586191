#pragma once

// Reduced KKT solvers for the interior-point iterations:
//
//   [ 0    Ae'   G'  ] [dx]   [bx]
//   [ Ae   0     0   ] [dy] = [by]
//   [ G    0    -H   ] [dz]   [bz]
//
// eliminated through dz = H^{-1}(G dx - bz) and the Schur complement
// M = G' H^{-1} G, bordered by the equality rows. Two realizations: a dense
// M (default) and a Woodbury form that exploits psd blocks whose constraint
// rows form a signed column selection, as produced by the semidefinite-lift
// compiler. Both give identical results; the second never materializes M.

#include <memory>

#include <Eigen/SparseCore>

#include "conic/scaling.hpp"

namespace irsopt::conic::detail {

struct KktProblem {
    Eigen::SparseMatrix<double> eq;     // Ae, p x n
    Eigen::SparseMatrix<double> eq_t;   // Ae'
    Eigen::SparseMatrix<double> ineq;   // G, m x n
    Eigen::SparseMatrix<double> ineq_t; // G'
    std::vector<Block> blocks;
    int n = 0, p = 0, m = 0;
};

class KktSolver {
  public:
    explicit KktSolver(const KktProblem& prob) : prob_(prob) {}
    virtual ~KktSolver() = default;

    virtual void factor(const Scalings& scal) = 0;

    /// Solves the 3x3 system; `refine_steps` rounds of iterative refinement.
    void solve(const RVec& bx, const RVec& by, const RVec& bz, RVec& dx, RVec& dy, RVec& dz,
               int refine_steps);

  protected:
    virtual void solve_once(const RVec& bx, const RVec& by, const RVec& bz, RVec& dx, RVec& dy,
                            RVec& dz) = 0;

    const KktProblem& prob_;
    const Scalings* scal_ = nullptr;
};

/// Chooses a backend: structured when a large selection-structured psd block
/// is present (or when forced), dense otherwise.
std::unique_ptr<KktSolver> make_kkt_solver(const KktProblem& prob, KktMode mode);

} // namespace irsopt::conic::detail
