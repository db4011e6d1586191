#include "conic/scaling.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace irsopt::conic::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);
} // namespace

RVec svec(const RMat& m) {
    const int d = static_cast<int>(m.rows());
    RVec v(d * (d + 1) / 2);
    int idx = 0;
    for (int j = 0; j < d; ++j) {
        v(idx++) = m(j, j);
        for (int i = j + 1; i < d; ++i) v(idx++) = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    }
    return v;
}

RMat smat(const RVec& v) {
    const int d = psd_side(static_cast<int>(v.size()));
    RMat m(d, d);
    int idx = 0;
    for (int j = 0; j < d; ++j) {
        m(j, j) = v(idx++);
        for (int i = j + 1; i < d; ++i) {
            m(i, j) = v(idx) / kSqrt2;
            m(j, i) = m(i, j);
            ++idx;
        }
    }
    return m;
}

double block_degree(const Block& b) {
    switch (b.type) {
        case BlockType::nonneg: return b.dim;
        case BlockType::soc: return 1.0;
        case BlockType::psd: return b.side;
    }
    return 0.0;
}

void set_identity(const Block& b, Eigen::Ref<RVec> seg) {
    switch (b.type) {
        case BlockType::nonneg:
            seg.setOnes();
            return;
        case BlockType::soc:
            seg.setZero();
            seg(0) = 1.0;
            return;
        case BlockType::psd: {
            seg = svec(RMat::Identity(b.side, b.side));
            return;
        }
    }
}

double membership_margin(const Block& b, const Eigen::Ref<const RVec>& seg) {
    switch (b.type) {
        case BlockType::nonneg:
            return seg.minCoeff();
        case BlockType::soc:
            return seg(0) - seg.tail(seg.size() - 1).norm();
        case BlockType::psd: {
            Eigen::SelfAdjointEigenSolver<RMat> eig(smat(seg), Eigen::EigenvaluesOnly);
            return eig.eigenvalues().minCoeff();
        }
    }
    return -kInf;
}

double max_step(const Block& b, const Eigen::Ref<const RVec>& u,
                const Eigen::Ref<const RVec>& du, double cap) {
    switch (b.type) {
        case BlockType::nonneg: {
            double t = cap;
            for (Eigen::Index i = 0; i < u.size(); ++i)
                if (du(i) < 0.0) t = std::min(t, -u(i) / du(i));
            return t;
        }
        case BlockType::soc: {
            // first positive root of (u0+t d0)^2 = ||u1+t d1||^2 on the branch
            // u0 + t d0 >= 0
            const auto u1 = u.tail(u.size() - 1);
            const auto d1 = du.tail(du.size() - 1);
            const double a = du(0) * du(0) - d1.squaredNorm();
            const double bq = u(0) * du(0) - u1.dot(d1);
            const double c = u(0) * u(0) - u1.squaredNorm();
            double best = cap;
            auto consider = [&](double t) {
                if (t > 1e-14 && t < best && u(0) + t * du(0) >= -1e-12 * (1.0 + std::abs(u(0))))
                    best = t;
            };
            if (std::abs(a) < 1e-300) {
                if (bq < 0.0) consider(-c / (2.0 * bq));
            } else {
                const double disc = bq * bq - a * c;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    consider((-bq - sq) / a);
                    consider((-bq + sq) / a);
                }
            }
            return best;
        }
        case BlockType::psd: {
            const RMat s_mat = smat(u);
            const RMat d_mat = smat(du);
            Eigen::LLT<RMat> llt(s_mat);
            if (llt.info() != Eigen::Success) return 0.0;
            const RMat l = llt.matrixL();
            RMat t = l.triangularView<Eigen::Lower>().solve(d_mat);
            RMat w = l.triangularView<Eigen::Lower>().solve(t.transpose());
            Eigen::SelfAdjointEigenSolver<RMat> eig(0.5 * (w + w.transpose()),
                                                    Eigen::EigenvaluesOnly);
            const double lam_min = eig.eigenvalues().minCoeff();
            if (lam_min >= 0.0) return cap;
            return std::min(cap, -1.0 / lam_min);
        }
    }
    return 0.0;
}

void jordan_product(const Block& b, const Eigen::Ref<const RVec>& u,
                    const Eigen::Ref<const RVec>& v, Eigen::Ref<RVec> out) {
    switch (b.type) {
        case BlockType::nonneg:
            out = u.cwiseProduct(v);
            return;
        case BlockType::soc: {
            const double u0 = u(0), v0 = v(0);
            out(0) = u.dot(v);
            out.tail(out.size() - 1) = u0 * v.tail(v.size() - 1) + v0 * u.tail(u.size() - 1);
            return;
        }
        case BlockType::psd: {
            const RMat um = smat(u);
            const RMat vm = smat(v);
            out = svec(0.5 * (um * vm + vm * um));
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scalings
// ---------------------------------------------------------------------------

void BlockScaling::compute(const Eigen::Ref<const RVec>& s, const Eigen::Ref<const RVec>& z) {
    switch (block.type) {
        case BlockType::nonneg:
            w_diag = (s.cwiseQuotient(z)).cwiseSqrt();
            return;
        case BlockType::soc: {
            const double det_s = s(0) * s(0) - s.tail(s.size() - 1).squaredNorm();
            const double det_z = z(0) * z(0) - z.tail(z.size() - 1).squaredNorm();
            if (!(det_s > 0.0) || !(det_z > 0.0))
                throw std::runtime_error("soc scaling point left the cone");
            const double rs = std::sqrt(det_s), rz = std::sqrt(det_z);
            const RVec sbar = s / rs;
            RVec zbar = z / rz;
            const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
            zbar.tail(zbar.size() - 1) *= -1.0;  // J zbar
            wbar = (sbar + zbar) / (2.0 * gamma);
            eta = std::sqrt(rs / rz);
            return;
        }
        case BlockType::psd: {
            const RMat s_mat = smat(s);
            const RMat z_mat = smat(z);
            Eigen::LLT<RMat> ls(s_mat), lz(z_mat);
            if (ls.info() != Eigen::Success || lz.info() != Eigen::Success)
                throw std::runtime_error("psd scaling point left the cone");
            const RMat l_s = ls.matrixL();
            const RMat l_z = lz.matrixL();
            Eigen::JacobiSVD<RMat> svd(l_z.transpose() * l_s,
                                       Eigen::ComputeFullU | Eigen::ComputeFullV);
            const RVec sv = svd.singularValues();
            const RVec inv_sqrt = sv.array().sqrt().inverse().matrix();
            r = l_s * svd.matrixV() * inv_sqrt.asDiagonal();
            r_inv = inv_sqrt.asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
            wm = r * r.transpose();
            wm_inv = r_inv.transpose() * r_inv;
            return;
        }
    }
}

namespace {

/// u -> eta (2 wbar (wbar'u) - J u) is W^2 for soc; W itself needs the
/// explicit arrow form below.
void soc_w_apply(const RVec& wbar, double eta, const Eigen::Ref<const RVec>& u,
                 Eigen::Ref<RVec> out) {
    const Eigen::Index n1 = u.size() - 1;
    const double w0 = wbar(0);
    const auto w1 = wbar.tail(n1);
    const double dot = w1.dot(u.tail(n1));
    out(0) = eta * (w0 * u(0) + dot);
    out.tail(n1) = eta * (u(0) * w1 + u.tail(n1) + (dot / (1.0 + w0)) * w1);
}

} // namespace

void BlockScaling::apply_w(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg: out = w_diag.cwiseProduct(u); return;
        case BlockType::soc: soc_w_apply(wbar, eta, u, out); return;
        case BlockType::psd: out = svec(r.transpose() * smat(u) * r); return;
    }
}

void BlockScaling::apply_wt(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg: out = w_diag.cwiseProduct(u); return;
        case BlockType::soc: soc_w_apply(wbar, eta, u, out); return;
        case BlockType::psd: out = svec(r * smat(u) * r.transpose()); return;
    }
}

void BlockScaling::apply_winv(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg: out = u.cwiseQuotient(w_diag); return;
        case BlockType::soc: {
            RVec jw = wbar;
            jw.tail(jw.size() - 1) *= -1.0;
            soc_w_apply(jw, 1.0 / eta, u, out);
            return;
        }
        case BlockType::psd: out = svec(r_inv.transpose() * smat(u) * r_inv); return;
    }
}

void BlockScaling::apply_winv_t(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg: out = u.cwiseQuotient(w_diag); return;
        case BlockType::soc: apply_winv(u, out); return;
        case BlockType::psd: out = svec(r_inv * smat(u) * r_inv.transpose()); return;
    }
}

void BlockScaling::apply_h(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg: out = w_diag.array().square().matrix().cwiseProduct(u); return;
        case BlockType::soc: {
            const Eigen::Index n1 = u.size() - 1;
            const double dot = wbar.dot(u);
            out = 2.0 * dot * wbar;
            out(0) -= u(0);
            out.tail(n1) += u.tail(n1);
            out *= eta * eta;
            return;
        }
        case BlockType::psd: out = svec(wm * smat(u) * wm); return;
    }
}

void BlockScaling::apply_h_inv(const Eigen::Ref<const RVec>& u, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg:
            out = u.cwiseQuotient(w_diag.array().square().matrix());
            return;
        case BlockType::soc: {
            // H^{-1} = (1/eta^2) (2 (J wbar)(J wbar)' - J)
            RVec jw = wbar;
            jw.tail(jw.size() - 1) *= -1.0;
            const Eigen::Index n1 = u.size() - 1;
            const double dot = jw.dot(u);
            out = 2.0 * dot * jw;
            out(0) -= u(0);
            out.tail(n1) += u.tail(n1);
            out /= eta * eta;
            return;
        }
        case BlockType::psd: out = svec(wm_inv * smat(u) * wm_inv); return;
    }
}

void BlockScaling::lambda_solve(const Eigen::Ref<const RVec>& lambda,
                                const Eigen::Ref<const RVec>& d, Eigen::Ref<RVec> out) const {
    switch (block.type) {
        case BlockType::nonneg:
            out = d.cwiseQuotient(lambda);
            return;
        case BlockType::soc: {
            const Eigen::Index n1 = lambda.size() - 1;
            const double l0 = lambda(0);
            const auto l1 = lambda.tail(n1);
            const double det = l0 * l0 - l1.squaredNorm();
            const double u0 = (l0 * d(0) - l1.dot(d.tail(n1))) / det;
            out(0) = u0;
            out.tail(n1) = (d.tail(n1) - u0 * l1) / l0;
            return;
        }
        case BlockType::psd: {
            // lambda is svec of a diagonal matrix by construction
            const int d_side = block.side;
            RMat lam = smat(lambda);
            RMat dm = smat(d);
            RMat um(d_side, d_side);
            for (int i = 0; i < d_side; ++i)
                for (int j = 0; j < d_side; ++j)
                    um(i, j) = 2.0 * dm(i, j) / (lam(i, i) + lam(j, j));
            out = svec(um);
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Aggregate
// ---------------------------------------------------------------------------

void Scalings::compute(const std::vector<Block>& blocks_in, const RVec& s, const RVec& z) {
    blocks.resize(blocks_in.size());
    lambda.resize(s.size());
    for (std::size_t i = 0; i < blocks_in.size(); ++i) {
        blocks[i].block = blocks_in[i];
        const auto& b = blocks_in[i];
        blocks[i].compute(s.segment(b.start, b.dim), z.segment(b.start, b.dim));
        blocks[i].apply_w(z.segment(b.start, b.dim), lambda.segment(b.start, b.dim));
    }
}

#define IRSOPT_SCALINGS_FORWARD(name)                                   \
    void Scalings::name(const RVec& u, RVec& out) const {               \
        out.resize(u.size());                                           \
        for (const auto& bs : blocks) {                                 \
            const auto& b = bs.block;                                   \
            bs.name(u.segment(b.start, b.dim), out.segment(b.start, b.dim)); \
        }                                                               \
    }

IRSOPT_SCALINGS_FORWARD(apply_h)
IRSOPT_SCALINGS_FORWARD(apply_h_inv)
IRSOPT_SCALINGS_FORWARD(apply_w)
IRSOPT_SCALINGS_FORWARD(apply_wt)
IRSOPT_SCALINGS_FORWARD(apply_winv)
IRSOPT_SCALINGS_FORWARD(apply_winv_t)

#undef IRSOPT_SCALINGS_FORWARD

} // namespace irsopt::conic::detail
