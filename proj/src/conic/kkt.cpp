#include "conic/kkt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace irsopt::conic::detail {

void KktSolver::solve(const RVec& bx, const RVec& by, const RVec& bz, RVec& dx, RVec& dy, RVec& dz,
                      int refine_steps) {
    solve_once(bx, by, bz, dx, dy, dz);
    for (int pass = 0; pass < refine_steps; ++pass) {
        RVec h_dz;
        scal_->apply_h(dz, h_dz);
        const RVec rx = bx - (prob_.eq_t * dy + prob_.ineq_t * dz);
        const RVec ry = by - prob_.eq * dx;
        const RVec rz = bz - (prob_.ineq * dx - h_dz);
        RVec ex, ey, ez;
        solve_once(rx, ry, rz, ex, ey, ez);
        dx += ex;
        dy += ey;
        dz += ez;
    }
}

namespace {

// ---------------------------------------------------------------------------
// Dense Schur-complement backend
// ---------------------------------------------------------------------------

class DenseKkt final : public KktSolver {
  public:
    explicit DenseKkt(const KktProblem& prob) : KktSolver(prob) {
        eq_dense_ = RMat(prob.eq);
        ineq_dense_ = RMat(prob.ineq);
    }

    void factor(const Scalings& scal) override {
        scal_ = &scal;
        const int n = prob_.n, p = prob_.p, m = prob_.m;

        // M = (W^{-T} G)' (W^{-T} G), W^{-T} applied blockwise in closed form
        RMat u(m, n);
        for (const auto& bs : scal.blocks) {
            const auto& b = bs.block;
            auto gblk = ineq_dense_.middleRows(b.start, b.dim);
            auto ublk = u.middleRows(b.start, b.dim);
            switch (b.type) {
                case BlockType::nonneg:
                    ublk.noalias() =
                        bs.w_diag.array().inverse().matrix().asDiagonal() * gblk;
                    break;
                case BlockType::soc: {
                    // W^{-1} is the arrow matrix of (1/eta, J wbar)
                    const double v0 = bs.wbar(0);
                    const RVec v1 = -bs.wbar.tail(b.dim - 1);
                    const Eigen::RowVectorXd proj =
                        v1.transpose() * gblk.bottomRows(b.dim - 1);
                    ublk.row(0) = v0 * gblk.row(0) + proj;
                    ublk.bottomRows(b.dim - 1).noalias() =
                        v1 * (gblk.row(0) + proj / (1.0 + v0));
                    ublk.bottomRows(b.dim - 1) += gblk.bottomRows(b.dim - 1);
                    ublk /= bs.eta;
                    break;
                }
                case BlockType::psd:
                    for (int j = 0; j < n; ++j)
                        bs.apply_winv_t(gblk.col(j), ublk.block(0, j, b.dim, 1).col(0));
                    break;
            }
        }
        RMat M = RMat::Zero(n, n);
        M.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose());
        M = RMat(M.selfadjointView<Eigen::Lower>());

        double delta = 0.0;
        for (int attempt = 0;; ++attempt) {
            m_llt_.compute(M + delta * RMat::Identity(n, n));
            if (m_llt_.info() == Eigen::Success) break;
            if (attempt >= 8) throw std::runtime_error("dense KKT factorization failed");
            delta = (delta == 0.0) ? 1e-12 * (1.0 + M.diagonal().maxCoeff()) : delta * 100.0;
        }

        if (p > 0) {
            minv_eqt_ = m_llt_.solve(eq_dense_.transpose());
            RMat se = eq_dense_ * minv_eqt_;
            double d2 = 0.0;
            for (int attempt = 0;; ++attempt) {
                se_llt_.compute(se + d2 * RMat::Identity(p, p));
                if (se_llt_.info() == Eigen::Success) break;
                if (attempt >= 8) throw std::runtime_error("equality-border factorization failed");
                d2 = (d2 == 0.0) ? 1e-12 * (1.0 + se.diagonal().maxCoeff()) : d2 * 100.0;
            }
        }
    }

  protected:
    void solve_once(const RVec& bx, const RVec& by, const RVec& bz, RVec& dx, RVec& dy,
                    RVec& dz) override {
        RVec hinv_bz;
        scal_->apply_h_inv(bz, hinv_bz);
        const RVec r1 = bx + prob_.ineq_t * hinv_bz;
        if (prob_.p > 0) {
            const RVec minv_r1 = m_llt_.solve(r1);
            dy = se_llt_.solve(prob_.eq * minv_r1 - by);
            dx = minv_r1 - minv_eqt_ * dy;
        } else {
            dy.resize(0);
            dx = m_llt_.solve(r1);
        }
        RVec g_dx = prob_.ineq * dx - bz;
        scal_->apply_h_inv(g_dx, dz);
    }

  private:
    RMat eq_dense_, ineq_dense_;
    Eigen::LLT<RMat> m_llt_;
    RMat minv_eqt_;
    Eigen::LLT<RMat> se_llt_;
};

// ---------------------------------------------------------------------------
// Structured backend: selection-structured psd blocks + low-rank rest
// ---------------------------------------------------------------------------

struct PsdSelection {
    const Block* block = nullptr;
    Eigen::VectorXi var_of_row;  // cone row -> variable index
    RVec value_of_row;           // the single nonzero coefficient
};

class StructuredKkt final : public KktSolver {
  public:
    StructuredKkt(const KktProblem& prob, std::vector<PsdSelection> psd,
                  std::vector<const Block*> small_blocks, std::vector<int> uncovered)
        : KktSolver(prob),
          psd_(std::move(psd)),
          small_blocks_(std::move(small_blocks)),
          uncovered_(std::move(uncovered)) {
        small_rows_ = 0;
        for (const auto* b : small_blocks_) small_rows_ += b->dim;
        rank_ = small_rows_ + static_cast<int>(uncovered_.size());
        eq_dense_t_ = RMat(prob.eq_t);
        ineq_dense_ = RMat(prob.ineq);
    }

    void factor(const Scalings& scal) override {
        scal_ = &scal;
        const int n = prob_.n, p = prob_.p;

        // U = [ (W^{-T} G_small)' , E_uncovered ], D = diag(I, -I)
        u_ = RMat::Zero(n, rank_);
        int col = 0;
        for (const auto* b : small_blocks_) {
            const auto& bs = scaling_of(*b);
            RMat gt(b->dim, n);
            for (int j = 0; j < n; ++j)
                bs.apply_winv_t(ineq_dense_.block(b->start, j, b->dim, 1).col(0),
                                gt.block(0, j, b->dim, 1).col(0));
            u_.middleCols(col, b->dim) = gt.transpose();
            col += b->dim;
        }
        for (std::size_t i = 0; i < uncovered_.size(); ++i) u_(uncovered_[i], col + i) = 1.0;

        // core = D^{-1} + U' B^{-1} U
        y_ = RMat(n, rank_);
        for (int j = 0; j < rank_; ++j) {
            RVec t = apply_b_inv(u_.col(j));
            y_.col(j) = t;
        }
        RMat core = u_.transpose() * y_;
        for (int j = 0; j < small_rows_; ++j) core(j, j) += 1.0;
        for (int j = small_rows_; j < rank_; ++j) core(j, j) -= 1.0;
        core_lu_.compute(core);

        if (p > 0) {
            minv_eqt_ = RMat(n, p);
            for (int j = 0; j < p; ++j) minv_eqt_.col(j) = apply_m_inv(eq_dense_t_.col(j));
            RMat se = eq_dense_t_.transpose() * minv_eqt_;
            double d2 = 0.0;
            for (int attempt = 0;; ++attempt) {
                se_llt_.compute(se + d2 * RMat::Identity(p, p));
                if (se_llt_.info() == Eigen::Success) break;
                if (attempt >= 8) throw std::runtime_error("equality-border factorization failed");
                d2 = (d2 == 0.0) ? 1e-12 * (1.0 + se.diagonal().maxCoeff()) : d2 * 100.0;
            }
        }
    }

  protected:
    void solve_once(const RVec& bx, const RVec& by, const RVec& bz, RVec& dx, RVec& dy,
                    RVec& dz) override {
        RVec hinv_bz;
        scal_->apply_h_inv(bz, hinv_bz);
        const RVec r1 = bx + prob_.ineq_t * hinv_bz;
        if (prob_.p > 0) {
            const RVec minv_r1 = apply_m_inv(r1);
            dy = se_llt_.solve(eq_dense_t_.transpose() * minv_r1 - by);
            dx = minv_r1 - minv_eqt_ * dy;
        } else {
            dy.resize(0);
            dx = apply_m_inv(r1);
        }
        RVec g_dx = prob_.ineq * dx - bz;
        scal_->apply_h_inv(g_dx, dz);
    }

  private:
    const BlockScaling& scaling_of(const Block& b) const {
        for (const auto& bs : scal_->blocks)
            if (bs.block.start == b.start) return bs;
        throw std::logic_error("scaling lookup failed");
    }

    /// B = P' H_psd^{-1} P + I on uncovered variables; B^{-1} swaps the
    /// congruence for its inverse.
    RVec apply_b_inv(const RVec& v) const {
        RVec out = v;  // identity on uncovered vars
        for (const auto& sel : psd_) {
            const auto& b = *sel.block;
            const auto& bs = scaling_of(b);
            RVec cone_vec(b.dim);
            for (int r = 0; r < b.dim; ++r)
                cone_vec(r) = v(sel.var_of_row(r)) / sel.value_of_row(r);
            RVec mapped(b.dim);
            bs.apply_h(cone_vec, mapped);
            for (int r = 0; r < b.dim; ++r)
                out(sel.var_of_row(r)) = mapped(r) / sel.value_of_row(r);
        }
        return out;
    }

    /// M^{-1} via Woodbury: M = B + U D U'.
    RVec apply_m_inv(const RVec& v) const {
        const RVec binv_v = apply_b_inv(v);
        const RVec core_rhs = u_.transpose() * binv_v;
        const RVec w = core_lu_.solve(core_rhs);
        return binv_v - y_ * w;
    }

    std::vector<PsdSelection> psd_;
    std::vector<const Block*> small_blocks_;
    std::vector<int> uncovered_;
    int small_rows_ = 0;
    int rank_ = 0;

    RMat eq_dense_t_, ineq_dense_;
    RMat u_, y_;
    Eigen::PartialPivLU<RMat> core_lu_;
    RMat minv_eqt_;
    Eigen::LLT<RMat> se_llt_;
};

/// A psd block qualifies when every row of G in the block has exactly one
/// (well-scaled) nonzero and no variable is selected twice.
bool detect_selection(const KktProblem& prob, std::vector<PsdSelection>& out,
                      std::vector<bool>& covered) {
    out.clear();
    covered.assign(prob.n, false);
    RMat dense;  // filled lazily per block from the sparse matrix
    for (const auto& b : prob.blocks) {
        if (b.type != BlockType::psd) continue;
        PsdSelection sel;
        sel.block = &b;
        sel.var_of_row.resize(b.dim);
        sel.value_of_row.resize(b.dim);
        std::vector<int> nnz(b.dim, 0);
        std::vector<int> var(b.dim, -1);
        std::vector<double> val(b.dim, 0.0);
        for (int j = 0; j < prob.ineq.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(prob.ineq, j); it; ++it) {
                const int r = static_cast<int>(it.row()) - b.start;
                if (r < 0 || r >= b.dim) continue;
                ++nnz[r];
                var[r] = j;
                val[r] = it.value();
            }
        for (int r = 0; r < b.dim; ++r) {
            if (nnz[r] != 1 || std::abs(val[r]) < 1e-8) return false;
            if (covered[var[r]]) return false;
            covered[var[r]] = true;
            sel.var_of_row(r) = var[r];
            sel.value_of_row(r) = val[r];
        }
        out.push_back(std::move(sel));
    }
    return !out.empty();
}

} // namespace

std::unique_ptr<KktSolver> make_kkt_solver(const KktProblem& prob, KktMode mode) {
    if (mode != KktMode::dense) {
        std::vector<PsdSelection> psd;
        std::vector<bool> covered;
        int psd_rows = 0;
        for (const auto& b : prob.blocks)
            if (b.type == BlockType::psd) psd_rows += b.dim;
        const bool worthwhile = (mode == KktMode::structured) || psd_rows >= 300;
        if (psd_rows > 0 && worthwhile && detect_selection(prob, psd, covered)) {
            std::vector<const Block*> small_blocks;
            int small_rows = 0;
            for (const auto& b : prob.blocks)
                if (b.type != BlockType::psd) {
                    small_blocks.push_back(&b);
                    small_rows += b.dim;
                }
            std::vector<int> uncovered;
            for (int j = 0; j < prob.n; ++j)
                if (!covered[j]) uncovered.push_back(j);
            // Only profitable when the non-psd part stays low-rank.
            if (mode == KktMode::structured ||
                small_rows + static_cast<int>(uncovered.size()) <= std::max(500, prob.n / 4))
                return std::make_unique<StructuredKkt>(prob, std::move(psd),
                                                       std::move(small_blocks),
                                                       std::move(uncovered));
        }
        if (mode == KktMode::structured)
            throw std::invalid_argument(
                "structured KKT requested but the program has no selection-structured psd block");
    }
    return std::make_unique<DenseKkt>(prob);
}

} // namespace irsopt::conic::detail
