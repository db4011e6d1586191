#pragma once

#include "irsopt/sysmodel.hpp"
#include "irsopt/types.hpp"

namespace irsopt::bounds {

using channel::ProblemInstance;
using sysmodel::DesignPoint;

/// Real-variable stacking convention shared by the surrogate coefficient
/// extraction and the subproblem compiler:
///   x = [Re w; Im w; Re phi; Im phi]
/// with w the K*N_t stacked beamformers. Auxiliary subproblem variables are
/// appended after base_dim() by the caller.
struct VariableLayout {
    int num_users = 0;
    int num_bs_antennas = 0;
    int num_irs_elements = 0;

    int w_re(int k, int i) const { return k * num_bs_antennas + i; }
    int w_im(int k, int i) const { return num_users * num_bs_antennas + k * num_bs_antennas + i; }
    int phi_re(int i) const { return 2 * num_users * num_bs_antennas + i; }
    int phi_im(int i) const { return 2 * num_users * num_bs_antennas + num_irs_elements + i; }
    int base_dim() const { return 2 * (num_users * num_bs_antennas + num_irs_elements); }

    RVec pack(const DesignPoint& dp) const;
    DesignPoint unpack(const RVec& x) const;
};

/// Iterate (w^(n), phi^(n)) at which the surrogates are tight, with the
/// cached per-user quantities they are built from.
struct ExpansionPoint {
    CVec w_prev;    // stacked
    CVec phi_prev;  // N_s
    CMat g_prev;    // K x N_t, row k = effective channel at (phi_prev)
    CVec a_prev;    // K, a_k = g_k w_k
    CMat b_prev;    // K x N_t, row k = (a_k g_k^H + w_k)^T

    static ExpansionPoint make(const ProblemInstance& inst, const DesignPoint& dp);

    /// Recomputes the caches and compares; true when everything matches
    /// within tol.
    bool consistent(const ProblemInstance& inst, double tol = 1e-12) const;
};

/// 2 Re{y^H x} - ||y||^2, the linearization of ||x||^2 around y.
double linearize_norm_sq(const CVec& x, const CVec& y);

/// Concave lower bound on |g_k w_k|^2, tight at the expansion point.
double signal_lower_bound(const ProblemInstance& inst, const DesignPoint& dp,
                          const ExpansionPoint& ep, int k);

/// Convex upper bounds on +/- Re{g_k w_l} and +/- Im{g_k w_l} (k != l),
/// tight at the expansion point.
double cross_re_plus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                     int k, int l);
double cross_re_minus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                      int k, int l);
double cross_im_plus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                     int k, int l);
double cross_im_minus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                      int k, int l);

enum class SurrogateKind {
    signal_lb,      // lower bound on |g_k w_k|^2 (concave)
    re_plus_ub,     // upper bound on  Re{g_k w_l}
    re_minus_ub,    // upper bound on -Re{g_k w_l}
    im_plus_ub,     // upper bound on  Im{g_k w_l}
    im_minus_ub,    // upper bound on -Im{g_k w_l}
};

/// Coefficient form of a surrogate over the real variable stack:
///   value(x) = affine . x + affine0 + quad_sign * 0.5 * ||L x + l0||^2
struct QuadraticSurrogate {
    RVec affine;      // base_dim
    double affine0 = 0.0;
    RMat quad_map;    // rows x base_dim
    RVec quad_shift;  // rows
    double quad_sign = 0.0;  // -1 for the concave signal bound, +1 otherwise

    double evaluate(const RVec& x) const {
        return affine.dot(x) + affine0 +
               quad_sign * 0.5 * (quad_map * x + quad_shift).squaredNorm();
    }
};

/// Extracts the affine part and the affine-inside-norm map of one surrogate.
/// `l` is ignored for signal_lb.
QuadraticSurrogate surrogate_coefficients(const ProblemInstance& inst, const ExpansionPoint& ep,
                                          int k, int l, SurrogateKind kind);

} // namespace irsopt::bounds
