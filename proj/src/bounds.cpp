#include "irsopt/bounds.hpp"

#include <cmath>

namespace irsopt::bounds {

namespace {

const cplx kJ(0.0, 1.0);

void check_pair(const ProblemInstance& inst, int k, int l) {
    if (k < 0 || k >= inst.num_users || l < 0 || l >= inst.num_users)
        throw std::invalid_argument("user index out of range");
    if (k == l) throw std::invalid_argument("cross-term surrogates require k != l");
}

/// H_ts^H diag(h_sk^H): the matrix through which conj(phi) enters g_k^H.
CMat conj_phi_map(const ProblemInstance& inst, int k) {
    return inst.bs_irs.adjoint() * inst.irs_user.row(k).adjoint().asDiagonal();
}

} // namespace

RVec VariableLayout::pack(const DesignPoint& dp) const {
    RVec x(base_dim());
    for (int k = 0; k < num_users; ++k)
        for (int i = 0; i < num_bs_antennas; ++i) {
            const cplx w = dp.beamformers(k * num_bs_antennas + i);
            x(w_re(k, i)) = w.real();
            x(w_im(k, i)) = w.imag();
        }
    for (int i = 0; i < num_irs_elements; ++i) {
        x(phi_re(i)) = dp.irs_coeffs(i).real();
        x(phi_im(i)) = dp.irs_coeffs(i).imag();
    }
    return x;
}

DesignPoint VariableLayout::unpack(const RVec& x) const {
    DesignPoint dp;
    dp.beamformers.resize(static_cast<Eigen::Index>(num_users) * num_bs_antennas);
    dp.irs_coeffs.resize(num_irs_elements);
    for (int k = 0; k < num_users; ++k)
        for (int i = 0; i < num_bs_antennas; ++i)
            dp.beamformers(k * num_bs_antennas + i) = cplx(x(w_re(k, i)), x(w_im(k, i)));
    for (int i = 0; i < num_irs_elements; ++i)
        dp.irs_coeffs(i) = cplx(x(phi_re(i)), x(phi_im(i)));
    return dp;
}

ExpansionPoint ExpansionPoint::make(const ProblemInstance& inst, const DesignPoint& dp) {
    dp.validate(inst, std::numeric_limits<double>::infinity());
    ExpansionPoint ep;
    ep.w_prev = dp.beamformers;
    ep.phi_prev = dp.irs_coeffs;
    ep.g_prev.resize(inst.num_users, inst.num_bs_antennas);
    ep.a_prev.resize(inst.num_users);
    ep.b_prev.resize(inst.num_users, inst.num_bs_antennas);
    for (int k = 0; k < inst.num_users; ++k) {
        ep.g_prev.row(k) = sysmodel::effective_channel(inst, dp.irs_coeffs, k);
        const CVec wk = dp.user(k, inst.num_bs_antennas);
        ep.a_prev(k) = ep.g_prev.row(k) * wk;
        ep.b_prev.row(k) = (ep.a_prev(k) * ep.g_prev.row(k).adjoint() + wk).transpose();
    }
    return ep;
}

bool ExpansionPoint::consistent(const ProblemInstance& inst, double tol) const {
    DesignPoint dp;
    dp.beamformers = w_prev;
    dp.irs_coeffs = phi_prev;
    const ExpansionPoint fresh = make(inst, dp);
    return (fresh.g_prev - g_prev).cwiseAbs().maxCoeff() <= tol &&
           (fresh.a_prev - a_prev).cwiseAbs().maxCoeff() <= tol &&
           (fresh.b_prev - b_prev).cwiseAbs().maxCoeff() <= tol;
}

double linearize_norm_sq(const CVec& x, const CVec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
    return 2.0 * (y.dot(x)).real() - y.squaredNorm();
}

double signal_lower_bound(const ProblemInstance& inst, const DesignPoint& dp,
                          const ExpansionPoint& ep, int k) {
    const CVec g_h = sysmodel::effective_channel(inst, dp.irs_coeffs, k).adjoint();
    const CVec wk = dp.user(k, inst.num_bs_antennas);
    const cplx a = ep.a_prev(k);
    const CVec b = ep.b_prev.row(k).transpose();
    return (b.dot(a * g_h + wk)).real() - 0.5 * b.squaredNorm() -
           0.5 * (a * g_h - wk).squaredNorm() - std::norm(a);
}

namespace {

/// The four cross-term bounds share one shape,
///   1/4 [ ||g^H + s1 w_l||^2 - 2 Re{(g^(n) + s2 (w^(n))^H)(g^H + s3 w_l)} + c ],
/// differing in the unit scalars s1..s3 and the constant c.
double cross_bound(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                   int k, int l, cplx s1, cplx s2, cplx s3, double c) {
    check_pair(inst, k, l);
    const CVec g_h = sysmodel::effective_channel(inst, dp.irs_coeffs, k).adjoint();
    const CVec wl = dp.user(l, inst.num_bs_antennas);
    const CRowVec q = ep.g_prev.row(k) + s2 * ep.w_prev.segment(static_cast<Eigen::Index>(l) * inst.num_bs_antennas,
                                                                inst.num_bs_antennas).adjoint();
    const cplx mid = q * (g_h + s3 * wl);
    return 0.25 * ((g_h + s1 * wl).squaredNorm() - 2.0 * mid.real() + c);
}

CVec user_prev(const ExpansionPoint& ep, int l, int num_bs_antennas) {
    return ep.w_prev.segment(static_cast<Eigen::Index>(l) * num_bs_antennas, num_bs_antennas);
}

} // namespace

double cross_re_plus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                     int k, int l) {
    const double c =
        (ep.g_prev.row(k).adjoint() - user_prev(ep, l, inst.num_bs_antennas)).squaredNorm();
    return cross_bound(inst, dp, ep, k, l, 1.0, -1.0, -1.0, c);
}

double cross_re_minus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                      int k, int l) {
    const double c =
        (ep.g_prev.row(k).adjoint() + user_prev(ep, l, inst.num_bs_antennas)).squaredNorm();
    return cross_bound(inst, dp, ep, k, l, -1.0, 1.0, 1.0, c);
}

double cross_im_plus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                     int k, int l) {
    const double c =
        (ep.g_prev.row(k).adjoint() + kJ * user_prev(ep, l, inst.num_bs_antennas)).squaredNorm();
    return cross_bound(inst, dp, ep, k, l, -kJ, -kJ, kJ, c);
}

double cross_im_minus(const ProblemInstance& inst, const DesignPoint& dp, const ExpansionPoint& ep,
                      int k, int l) {
    const double c =
        (ep.g_prev.row(k).adjoint() - kJ * user_prev(ep, l, inst.num_bs_antennas)).squaredNorm();
    return cross_bound(inst, dp, ep, k, l, kJ, kJ, -kJ, c);
}

// ---------------------------------------------------------------------------
// Coefficient extraction
// ---------------------------------------------------------------------------

namespace {

/// Complex-affine vector expression over the base variables,
///   u(x) = W w_l + P conj(phi) + c0,
/// the only shapes the surrogates need. Conjugation of phi is resolved here
/// once: the real stack sees [Re phi; -Im phi] through P.
struct CAffineVec {
    CMat w_map;   // m x N_t
    CMat p_map;   // m x N_s (applied to conj(phi))
    CVec c0;      // m
    int user = 0; // which w block the w_map acts on
};

/// Writes [Re u; Im u] rows into a dense real map over the layout.
void emit_real_rows(const VariableLayout& lay, const CAffineVec& u, RMat& map, RVec& shift,
                    int row0) {
    const int m = static_cast<int>(u.c0.size());
    const int nt = lay.num_bs_antennas;
    for (int r = 0; r < m; ++r) {
        for (int i = 0; i < nt; ++i) {
            const cplx w = u.w_map(r, i);
            map(row0 + r, lay.w_re(u.user, i)) += w.real();
            map(row0 + r, lay.w_im(u.user, i)) += -w.imag();
            map(row0 + m + r, lay.w_re(u.user, i)) += w.imag();
            map(row0 + m + r, lay.w_im(u.user, i)) += w.real();
        }
        for (int i = 0; i < lay.num_irs_elements; ++i) {
            const cplx p = u.p_map(r, i);
            // p * conj(phi): Re = Re(p)Re(phi) + Im(p)Im(phi),
            //                Im = Im(p)Re(phi) - Re(p)Im(phi)
            map(row0 + r, lay.phi_re(i)) += p.real();
            map(row0 + r, lay.phi_im(i)) += p.imag();
            map(row0 + m + r, lay.phi_re(i)) += p.imag();
            map(row0 + m + r, lay.phi_im(i)) += -p.real();
        }
        shift(row0 + r) += u.c0(r).real();
        shift(row0 + m + r) += u.c0(r).imag();
    }
}

/// Adds Re{q^T u(x)} * weight to an affine functional over the layout.
void emit_real_functional(const VariableLayout& lay, const CRowVec& q, const CAffineVec& u,
                          double weight, RVec& affine, double& affine0) {
    const CRowVec rw = q * u.w_map;
    const CRowVec rp = q * u.p_map;
    const cplx r0 = q * u.c0;
    for (int i = 0; i < lay.num_bs_antennas; ++i) {
        affine(lay.w_re(u.user, i)) += weight * rw(i).real();
        affine(lay.w_im(u.user, i)) += -weight * rw(i).imag();
    }
    for (int i = 0; i < lay.num_irs_elements; ++i) {
        affine(lay.phi_re(i)) += weight * rp(i).real();
        affine(lay.phi_im(i)) += weight * rp(i).imag();
    }
    affine0 += weight * r0.real();
}

CAffineVec g_conj_expr(const ProblemInstance& inst, int k) {
    CAffineVec u;
    u.w_map = CMat::Zero(inst.num_bs_antennas, inst.num_bs_antennas);
    u.p_map = conj_phi_map(inst, k);
    u.c0 = inst.bs_user.row(k).adjoint();
    u.user = k;  // unused (w_map zero), but keep a valid block
    return u;
}

} // namespace

QuadraticSurrogate surrogate_coefficients(const ProblemInstance& inst, const ExpansionPoint& ep,
                                          int k, int l, SurrogateKind kind) {
    VariableLayout lay{inst.num_users, inst.num_bs_antennas, inst.num_irs_elements};
    const int n0 = lay.base_dim();
    const int nt = lay.num_bs_antennas;

    QuadraticSurrogate out;
    out.affine = RVec::Zero(n0);
    out.quad_map = RMat::Zero(2 * nt, n0);
    out.quad_shift = RVec::Zero(2 * nt);

    if (kind == SurrogateKind::signal_lb) {
        if (k < 0 || k >= inst.num_users) throw std::invalid_argument("user index out of range");
        const cplx a = ep.a_prev(k);
        const CVec b = ep.b_prev.row(k).transpose();
        const CRowVec bh = b.adjoint();

        // quadratic: -1/2 || a g^H - w_k ||^2
        CAffineVec u = g_conj_expr(inst, k);
        u.w_map = -CMat::Identity(nt, nt);
        u.p_map *= a;
        u.c0 *= a;
        u.user = k;
        emit_real_rows(lay, u, out.quad_map, out.quad_shift, 0);
        out.quad_sign = -1.0;

        // affine: Re{b^H (a g^H + w_k)} - 1/2 ||b||^2 - |a|^2
        CAffineVec v = g_conj_expr(inst, k);
        v.w_map = CMat::Identity(nt, nt);
        v.p_map *= a;
        v.c0 *= a;
        v.user = k;
        emit_real_functional(lay, bh, v, 1.0, out.affine, out.affine0);
        out.affine0 += -0.5 * b.squaredNorm() - std::norm(a);
        return out;
    }

    check_pair(inst, k, l);
    const CVec g_prev_h = ep.g_prev.row(k).adjoint();
    const CVec w_prev_l = ep.w_prev.segment(static_cast<Eigen::Index>(l) * nt, nt);

    cplx s1, s2, s3;
    double c = 0.0;
    switch (kind) {
        case SurrogateKind::re_plus_ub:
            s1 = 1.0, s2 = -1.0, s3 = -1.0;
            c = (g_prev_h - w_prev_l).squaredNorm();
            break;
        case SurrogateKind::re_minus_ub:
            s1 = -1.0, s2 = 1.0, s3 = 1.0;
            c = (g_prev_h + w_prev_l).squaredNorm();
            break;
        case SurrogateKind::im_plus_ub:
            s1 = -kJ, s2 = -kJ, s3 = kJ;
            c = (g_prev_h + kJ * w_prev_l).squaredNorm();
            break;
        case SurrogateKind::im_minus_ub:
            s1 = kJ, s2 = kJ, s3 = -kJ;
            c = (g_prev_h - kJ * w_prev_l).squaredNorm();
            break;
        default:
            throw std::invalid_argument("unknown surrogate kind");
    }

    // quadratic: +1/4 ||g^H + s1 w_l||^2 == +1/2 ||(g^H + s1 w_l)/sqrt(2)||^2
    CAffineVec u = g_conj_expr(inst, k);
    u.w_map = s1 * CMat::Identity(nt, nt);
    u.user = l;
    u.w_map /= std::sqrt(2.0);
    u.p_map /= std::sqrt(2.0);
    u.c0 /= std::sqrt(2.0);
    emit_real_rows(lay, u, out.quad_map, out.quad_shift, 0);
    out.quad_sign = 1.0;

    // affine: -1/2 Re{(g^(n) + s2 (w^(n))^H)(g^H + s3 w_l)} + c/4
    const CRowVec q = ep.g_prev.row(k) + s2 * w_prev_l.adjoint();
    CAffineVec v = g_conj_expr(inst, k);
    v.w_map = s3 * CMat::Identity(nt, nt);
    v.user = l;
    emit_real_functional(lay, q, v, -0.5, out.affine, out.affine0);
    out.affine0 += 0.25 * c;
    return out;
}

} // namespace irsopt::bounds
