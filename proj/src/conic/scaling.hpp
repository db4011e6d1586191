#pragma once

// Internal cone machinery for the interior-point solver: svec/smat packing,
// Nesterov-Todd scalings, Jordan-algebra operations, and boundary step
// lengths. Zero cones never reach this layer; rotated cones are rewritten as
// plain second-order cones before it.

#include <vector>

#include "irsopt/conic.hpp"
#include "irsopt/types.hpp"

namespace irsopt::conic::detail {

/// Scaled lower-triangle packing: off-diagonal entries carry sqrt(2) so that
/// svec(A) . svec(B) = trace(A B).
RVec svec(const RMat& m);
RMat smat(const RVec& v);

enum class BlockType { nonneg, soc, psd };

struct Block {
    BlockType type;
    int start = 0;  // first row in the conic part
    int dim = 0;    // rows consumed (svec length for psd)
    int side = 0;   // psd only: matrix dimension d
};

/// Barrier degree: dim for nonneg, 1 per soc, d per psd.
double block_degree(const Block& b);

/// Identity element e of the block's Jordan algebra.
void set_identity(const Block& b, Eigen::Ref<RVec> seg);

/// Cone-membership margin: min s_i (nonneg), s0 - ||s1|| (soc),
/// lambda_min(smat(s)) (psd). Nonnegative inside the cone.
double membership_margin(const Block& b, const Eigen::Ref<const RVec>& seg);

/// Largest t <= cap with u + t du still in the (closed) cone.
double max_step(const Block& b, const Eigen::Ref<const RVec>& u,
                const Eigen::Ref<const RVec>& du, double cap);

/// Jordan product u o v.
void jordan_product(const Block& b, const Eigen::Ref<const RVec>& u,
                    const Eigen::Ref<const RVec>& v, Eigen::Ref<RVec> out);

/// Nesterov-Todd scaling of one block, built from strictly interior (s, z).
/// W is the scaling operator with lambda = W z = W^{-T} s and H = W^T W.
struct BlockScaling {
    Block block;
    // nonneg
    RVec w_diag;
    // soc: W = eta * (2 wbar wbar' - J)^{1/2}; closed-form applies below
    double eta = 0.0;
    RVec wbar;
    // psd: lambda = svec(R' Z R) = svec(R^{-1} S R^{-T}), Wm = R R'
    RMat r, r_inv, wm, wm_inv;

    void compute(const Eigen::Ref<const RVec>& s, const Eigen::Ref<const RVec>& z);

    void apply_w(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;
    void apply_wt(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;
    void apply_winv(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;
    void apply_winv_t(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;
    void apply_h(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;      // W'W
    void apply_h_inv(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const;

    /// Solves lambda o u = d for u.
    void lambda_solve(const Eigen::Ref<const RVec>& lambda, const Eigen::Ref<const RVec>& d,
                      Eigen::Ref<RVec> out) const;
};

/// All conic blocks of a program plus their current scalings.
struct Scalings {
    std::vector<BlockScaling> blocks;
    RVec lambda;  // scaled point, full conic dimension

    void compute(const std::vector<Block>& blocks_in, const RVec& s, const RVec& z);

    void apply_h(const RVec& u, RVec& out) const;
    void apply_h_inv(const RVec& u, RVec& out) const;
    void apply_w(const RVec& u, RVec& out) const;
    void apply_wt(const RVec& u, RVec& out) const;
    void apply_winv(const RVec& u, RVec& out) const;
    void apply_winv_t(const RVec& u, RVec& out) const;
};

} // namespace irsopt::conic::detail
