#include <cstdio>
#include <chrono>
#include <cmath>

#include "conic/kkt.hpp"
#include "conic/scaling.hpp"
#include "irsopt/conic.hpp"

// Homogeneous self-dual embedding with Nesterov-Todd scaling and Mehrotra
// predictor-corrector steps. Zero cones become an equality block with free
// duals; rotated second-order cones are rewritten as plain second-order
// cones through the orthogonal involution
//   (u, v, z) -> ((u+v)/sqrt(2), (u-v)/sqrt(2), z),
// which maps 2uv >= ||z||^2 onto t0 >= ||(t1, z)|| exactly.

namespace irsopt::conic {

namespace detail {
namespace {

const double kSqrt1_2 = std::sqrt(0.5);

/// Weighted scatter of one original row into internal rows. Equality rows
/// and plain conic rows map one-to-one; the two head rows of a rotated cone
/// blend pairwise.
struct RowImage {
    bool equality = false;
    int idx[2] = {-1, -1};
    double w[2] = {0.0, 0.0};
    int count = 0;
};

struct InternalForm {
    KktProblem kp;
    RVec be, h;
    std::vector<RowImage> rows;  // original row -> image
    int n = 0, p = 0, m = 0;
};

InternalForm build_internal(const ConicProgram& prog) {
    InternalForm f;
    f.n = prog.num_vars;
    const int m_orig = static_cast<int>(prog.rhs.size());
    f.rows.resize(m_orig);

    int eq_rows = 0, conic_rows = 0, orig = 0;
    for (const auto& c : prog.cones) {
        if (c.type == ConeType::zero) {
            for (int i = 0; i < c.dim; ++i) {
                f.rows[orig + i] = {true, {eq_rows + i, -1}, {1.0, 0.0}, 1};
            }
            eq_rows += c.dim;
        } else {
            Block b;
            b.start = conic_rows;
            b.dim = c.dim;
            switch (c.type) {
                case ConeType::nonneg: b.type = BlockType::nonneg; break;
                case ConeType::soc: b.type = BlockType::soc; break;
                case ConeType::rotated_soc: b.type = BlockType::soc; break;
                case ConeType::psd:
                    b.type = BlockType::psd;
                    b.side = psd_side(c.dim);
                    break;
                default: break;
            }
            if (c.type == ConeType::rotated_soc) {
                f.rows[orig] = {false, {conic_rows, conic_rows + 1}, {kSqrt1_2, kSqrt1_2}, 2};
                f.rows[orig + 1] = {false, {conic_rows, conic_rows + 1}, {kSqrt1_2, -kSqrt1_2}, 2};
                for (int i = 2; i < c.dim; ++i)
                    f.rows[orig + i] = {false, {conic_rows + i, -1}, {1.0, 0.0}, 1};
            } else {
                for (int i = 0; i < c.dim; ++i)
                    f.rows[orig + i] = {false, {conic_rows + i, -1}, {1.0, 0.0}, 1};
            }
            f.kp.blocks.push_back(b);
            conic_rows += c.dim;
        }
        orig += c.dim;
    }
    f.p = eq_rows;
    f.m = conic_rows;
    f.kp.n = f.n;
    f.kp.p = f.p;
    f.kp.m = f.m;

    std::vector<Eigen::Triplet<double>> eq_trips, g_trips;
    for (int j = 0; j < prog.constraints.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.constraints, j); it; ++it) {
            const RowImage& im = f.rows[it.row()];
            for (int q = 0; q < im.count; ++q) {
                if (im.equality)
                    eq_trips.emplace_back(im.idx[q], it.col(), im.w[q] * it.value());
                else
                    g_trips.emplace_back(im.idx[q], it.col(), im.w[q] * it.value());
            }
        }
    f.be = RVec::Zero(f.p);
    f.h = RVec::Zero(f.m);
    for (int r = 0; r < m_orig; ++r) {
        const RowImage& im = f.rows[r];
        for (int q = 0; q < im.count; ++q)
            (im.equality ? f.be(im.idx[q]) : f.h(im.idx[q])) += im.w[q] * prog.rhs(r);
    }
    f.kp.eq.resize(f.p, f.n);
    f.kp.eq.setFromTriplets(eq_trips.begin(), eq_trips.end());
    f.kp.ineq.resize(f.m, f.n);
    f.kp.ineq.setFromTriplets(g_trips.begin(), g_trips.end());
    f.kp.eq_t = f.kp.eq.transpose();
    f.kp.ineq_t = f.kp.ineq.transpose();
    return f;
}

/// Pulls an internal conic-row vector back to original row order.
RVec gather_conic(const InternalForm& f, const RVec& v_int, int m_orig) {
    RVec out = RVec::Zero(m_orig);
    for (int r = 0; r < m_orig; ++r) {
        const RowImage& im = f.rows[r];
        if (im.equality) continue;
        for (int q = 0; q < im.count; ++q) out(r) += im.w[q] * v_int(im.idx[q]);
    }
    return out;
}

struct Direction {
    RVec x, y, z, s;
    double tau = 0.0, kappa = 0.0;
};

/// Ruiz-style equilibration. Row scales respect each cone: free for zero and
/// nonneg rows, uniform within soc and psd blocks, and (a, b, sqrt(ab)) for
/// the (u, v, z) parts of a rotated cone, which is exactly the diagonal group
/// that maps the cone onto itself. Column scales are unconstrained.
struct Equilibration {
    RVec row, col;  // cumulative scales applied to (A, b) rows and A columns
};

Equilibration equilibrate(ConicProgram& prog, int passes) {
    const int m = static_cast<int>(prog.rhs.size());
    const int n = prog.num_vars;
    Equilibration eq;
    eq.row = RVec::Ones(m);
    eq.col = RVec::Ones(n);
    auto& a = prog.constraints;

    for (int pass = 0; pass < passes; ++pass) {
        RVec rmax = RVec::Zero(m);
        for (int j = 0; j < a.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
                rmax(it.row()) = std::max(rmax(it.row()), std::abs(it.value()));

        RVec rupd = RVec::Ones(m);
        auto scale_of = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
        int r0 = 0;
        for (const auto& cone : prog.cones) {
            switch (cone.type) {
                case ConeType::zero:
                case ConeType::nonneg:
                    for (int i = 0; i < cone.dim; ++i) rupd(r0 + i) = scale_of(rmax(r0 + i));
                    break;
                case ConeType::soc:
                case ConeType::psd: {
                    const double pooled = rmax.segment(r0, cone.dim).maxCoeff();
                    rupd.segment(r0, cone.dim).setConstant(scale_of(pooled));
                    break;
                }
                case ConeType::rotated_soc: {
                    const double ru = scale_of(rmax(r0));
                    const double rz = scale_of(rmax.segment(r0 + 2, cone.dim - 2).maxCoeff());
                    rupd(r0) = ru;
                    rupd(r0 + 1) = rz * rz / ru;  // keep 2uv >= ||z||^2 invariant
                    rupd.segment(r0 + 2, cone.dim - 2).setConstant(rz);
                    break;
                }
            }
            r0 += cone.dim;
        }

        RVec cmax = RVec::Zero(n);
        for (int j = 0; j < a.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it) {
                it.valueRef() *= rupd(it.row());
                cmax(j) = std::max(cmax(j), std::abs(it.value()));
            }
        eq.row = eq.row.cwiseProduct(rupd);

        RVec cupd(n);
        for (int j = 0; j < n; ++j) cupd(j) = scale_of(cmax(j));
        for (int j = 0; j < a.outerSize(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, j); it; ++it)
                it.valueRef() *= cupd(j);
        eq.col = eq.col.cwiseProduct(cupd);
    }

    prog.rhs = prog.rhs.cwiseProduct(eq.row);
    prog.objective = prog.objective.cwiseProduct(eq.col);
    return eq;
}

} // namespace
} // namespace detail

SolveResult solve(const ConicProgram& prog, const SolverSettings& settings) {
    using namespace detail;
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    prog.validate();
    for (const auto& c : prog.cones)
        if (c.type == ConeType::psd && psd_side(c.dim) > settings.psd_dim_cap)
            throw std::invalid_argument("psd block exceeds the configured dimension cap");

    SolveResult res;
    res.x = RVec::Zero(prog.num_vars);
    res.y = RVec::Zero(prog.rhs.size());
    res.s = RVec::Zero(prog.rhs.size());
    const int m_orig = static_cast<int>(prog.rhs.size());

    ConicProgram scaled = prog;
    const Equilibration eq = equilibrate(scaled, 4);

    InternalForm f = build_internal(scaled);
    const RVec& c = scaled.objective;
    const int n = f.n, p = f.p, m = f.m;

    // HSD state
    RVec x = RVec::Zero(n), y = RVec::Zero(p), z(m), s(m);
    double tau = 1.0, kappa = 1.0;
    double degree = 1.0;
    for (const auto& b : f.kp.blocks) {
        set_identity(b, s.segment(b.start, b.dim));
        degree += block_degree(b);
    }
    z = s;

    const double norm_c = std::max(1.0, c.norm());
    const double norm_bh = std::max(1.0, std::sqrt(f.be.squaredNorm() + f.h.squaredNorm()));

    Scalings scal;
    std::unique_ptr<KktSolver> kkt;
    try {
        kkt = make_kkt_solver(f.kp, settings.kkt_mode);
    } catch (const std::invalid_argument&) {
        throw;
    }

    auto finalize_point = [&](SolveStatus status) {
        res.status = status;
        const bool certificate = status == SolveStatus::primal_infeasible ||
                                 status == SolveStatus::dual_infeasible;
        const double t = certificate ? 1.0 : tau;
        const RVec xs = x / t;
        const RVec ss = gather_conic(f, s / t, m_orig);
        const RVec zs = gather_conic(f, z / t, m_orig);
        // undo the equilibration
        res.x = eq.col.cwiseProduct(xs);
        res.s = ss.cwiseQuotient(eq.row);
        res.y = zs.cwiseProduct(eq.row);
        for (int r = 0; r < m_orig; ++r) {
            const RowImage& im = f.rows[r];
            if (im.equality) res.y(r) = y(im.idx[0]) / t * eq.row(r);
        }
        // zero-cone slacks: the actual equality residual (of the ray for a
        // dual-infeasibility certificate)
        const RVec ax = prog.constraints * res.x;
        for (int r = 0; r < m_orig; ++r)
            if (f.rows[r].equality)
                res.s(r) = (status == SolveStatus::dual_infeasible) ? -ax(r)
                                                                    : prog.rhs(r) - ax(r);
        res.objective = prog.objective.dot(res.x) + prog.objective_offset;
        res.solve_seconds = elapsed();
    };

    // best-iterate snapshot; the endgame of an ill-conditioned solve can
    // diverge after the KKT factorization runs out of accurate digits
    struct Snapshot {
        RVec x, y, z, s;
        double tau = 1.0, kappa = 1.0;
        double metric = std::numeric_limits<double>::infinity();
        double pres = 0.0, dres = 0.0, relgap = 0.0;
    } best;

    auto restore_best = [&] {
        if (!best.x.size()) return;
        x = best.x;
        y = best.y;
        z = best.z;
        s = best.s;
        tau = best.tau;
        kappa = best.kappa;
        res.primal_residual = best.pres;
        res.dual_residual = best.dres;
        res.duality_gap = best.relgap;
    };

    SolveStatus outcome = SolveStatus::max_iters;
    try {
        for (res.iterations = 0; res.iterations < settings.max_iters; ++res.iterations) {
            // residuals of the embedding
            const RVec hx = f.kp.eq_t * y + f.kp.ineq_t * z + c * tau;
            const RVec hy = f.kp.eq * x - f.be * tau;
            const RVec hz = f.kp.ineq * x + s - f.h * tau;
            const double cx = c.dot(x);
            const double byhz = f.be.dot(y) + f.h.dot(z);
            const double gap_abs = s.dot(z);

            const double pres =
                std::sqrt(hy.squaredNorm() + hz.squaredNorm()) / tau / norm_bh;
            const double dres = hx.norm() / tau / norm_c;
            const double pobj = cx / tau;
            const double relgap = (gap_abs / (tau * tau)) / std::max(1.0, std::abs(pobj));
            res.primal_residual = pres;
            res.dual_residual = dres;
            res.duality_gap = relgap;

            if (settings.verbose)
                std::printf("iter %3d  pres %9.2e  dres %9.2e  relgap %9.2e  tau %9.2e  kappa %9.2e\n",
                            res.iterations, pres, dres, relgap, tau, kappa);

            if (pres <= settings.tol && dres <= settings.tol && relgap <= settings.tol) {
                outcome = SolveStatus::optimal;
                break;
            }

            const double metric = std::max({pres, dres, relgap});
            if (metric < best.metric) {
                best = {x, y, z, s, tau, kappa, metric, pres, dres, relgap};
            } else if (metric > 50.0 * best.metric && best.metric <= settings.tol_inaccurate) {
                // diverging endgame; settle for the best point seen
                restore_best();
                outcome = SolveStatus::optimal;
                break;
            }

            // certificate checks
            if (byhz < -1e-12) {
                const double infres = (hx - c * tau).norm() / (-byhz) / norm_c;
                if (infres <= settings.tol) {
                    const double scale_cert = -byhz;
                    y /= scale_cert;
                    z /= scale_cert;
                    x.setZero();
                    s.setZero();
                    outcome = SolveStatus::primal_infeasible;
                    break;
                }
            }
            if (cx < -1e-12) {
                const double unbres =
                    std::sqrt((hy + f.be * tau).squaredNorm() + (hz + f.h * tau).squaredNorm()) /
                    (-cx) / norm_bh;
                if (unbres <= settings.tol) {
                    const double scale_cert = -cx;
                    x /= scale_cert;
                    s /= scale_cert;
                    y.setZero();
                    z.setZero();
                    outcome = SolveStatus::dual_infeasible;
                    break;
                }
            }

            scal.compute(f.kp.blocks, s, z);
            kkt->factor(scal);
            const RVec& lambda = scal.lambda;
            const double mu = (gap_abs + tau * kappa) / degree;

            // static solve, shared by both directions this iteration
            RVec x2, y2, z2;
            kkt->solve(-c, f.be, f.h, x2, y2, z2, settings.refine_steps);
            const double phi2 = c.dot(x2) + f.be.dot(y2) + f.h.dot(z2);

            auto direction = [&](const RVec& dxr, const RVec& dyr, const RVec& dzr,
                                 double dtau_r, const RVec& ds_r, double dkappa_r) {
                Direction d;
                // dz' = dzr - W'(lambda \ ds_r)
                RVec lam_div(m), wt_lam(m);
                for (const auto& bs : scal.blocks) {
                    const auto& b = bs.block;
                    bs.lambda_solve(lambda.segment(b.start, b.dim), ds_r.segment(b.start, b.dim),
                                    lam_div.segment(b.start, b.dim));
                    bs.apply_wt(lam_div.segment(b.start, b.dim), wt_lam.segment(b.start, b.dim));
                }
                RVec x1, y1, z1;
                kkt->solve(dxr, dyr, dzr - wt_lam, x1, y1, z1, settings.refine_steps);
                const double phi1 = c.dot(x1) + f.be.dot(y1) + f.h.dot(z1);
                d.tau = (dtau_r - dkappa_r / tau - phi1) / (phi2 - kappa / tau);
                d.x = x1 + d.tau * x2;
                d.y = y1 + d.tau * y2;
                d.z = z1 + d.tau * z2;
                // ds = W'(lambda \ ds_r) - H dz
                RVec h_dz;
                scal.apply_h(d.z, h_dz);
                d.s = wt_lam - h_dz;
                d.kappa = (dkappa_r - kappa * d.tau) / tau;
                return d;
            };

            auto boundary_step = [&](const Direction& d) {
                double a = 1.0;
                for (const auto& bs : scal.blocks) {
                    const auto& b = bs.block;
                    a = max_step(b, s.segment(b.start, b.dim), d.s.segment(b.start, b.dim), a);
                    a = max_step(b, z.segment(b.start, b.dim), d.z.segment(b.start, b.dim), a);
                }
                if (d.tau < 0.0) a = std::min(a, -tau / d.tau);
                if (d.kappa < 0.0) a = std::min(a, -kappa / d.kappa);
                return a;
            };

            // predictor
            RVec ds_aff(m);
            for (const auto& bs : scal.blocks) {
                const auto& b = bs.block;
                jordan_product(b, lambda.segment(b.start, b.dim), lambda.segment(b.start, b.dim),
                               ds_aff.segment(b.start, b.dim));
            }
            ds_aff = -ds_aff;
            const Direction aff =
                direction(-hx, -hy, -hz, -(kappa + cx + byhz), ds_aff, -tau * kappa);
            const double alpha_aff = boundary_step(aff);
            double sigma = std::pow(1.0 - alpha_aff, 3.0);
            sigma = std::min(std::max(sigma, 0.0), 0.99);

            // corrector
            RVec ds_comb(m);
            {
                RVec ws(m), wz(m);
                for (const auto& bs : scal.blocks) {
                    const auto& b = bs.block;
                    bs.apply_winv_t(aff.s.segment(b.start, b.dim), ws.segment(b.start, b.dim));
                    bs.apply_w(aff.z.segment(b.start, b.dim), wz.segment(b.start, b.dim));
                }
                RVec cross(m), ident(m);
                for (const auto& bs : scal.blocks) {
                    const auto& b = bs.block;
                    jordan_product(b, ws.segment(b.start, b.dim), wz.segment(b.start, b.dim),
                                   cross.segment(b.start, b.dim));
                    set_identity(b, ident.segment(b.start, b.dim));
                }
                ds_comb = ds_aff - cross + sigma * mu * ident;
            }
            const double one_minus_sigma = 1.0 - sigma;
            const Direction comb = direction(
                -one_minus_sigma * hx, -one_minus_sigma * hy, -one_minus_sigma * hz,
                -one_minus_sigma * (kappa + cx + byhz), ds_comb,
                -tau * kappa - aff.tau * aff.kappa + sigma * mu);

            double alpha = 0.99 * boundary_step(comb);
            alpha = std::min(alpha, 1.0);
            if (!(alpha > 1e-10)) throw std::runtime_error("step size collapsed");

            x += alpha * comb.x;
            y += alpha * comb.y;
            z += alpha * comb.z;
            s += alpha * comb.s;
            tau += alpha * comb.tau;
            kappa += alpha * comb.kappa;
            if (!(tau > 0.0) || !(kappa >= 0.0) || !x.allFinite())
                throw std::runtime_error("iterate left the admissible region");
        }
    } catch (const std::runtime_error&) {
        if (best.metric <= settings.tol_inaccurate) {
            restore_best();
            outcome = SolveStatus::optimal;
        } else {
            outcome = SolveStatus::numerical_failure;
        }
    }
    if (outcome == SolveStatus::max_iters && best.metric <= settings.tol_inaccurate) {
        restore_best();
        outcome = SolveStatus::optimal;
    }

    finalize_point(outcome);
    return res;
}

// ---------------------------------------------------------------------------
// Independent certificate verification
// ---------------------------------------------------------------------------

namespace {

/// Margin of one original cone block; nonnegative inside.
double cone_margin(const Cone& cone, const Eigen::Ref<const RVec>& seg) {
    using namespace detail;
    switch (cone.type) {
        case ConeType::zero:
            return -seg.cwiseAbs().maxCoeff();
        case ConeType::nonneg:
            return seg.minCoeff();
        case ConeType::soc:
            return seg(0) - seg.tail(seg.size() - 1).norm();
        case ConeType::rotated_soc: {
            RVec t = seg;
            const double u = seg(0), v = seg(1);
            t(0) = (u + v) * std::sqrt(0.5);
            t(1) = (u - v) * std::sqrt(0.5);
            return t(0) - t.tail(t.size() - 1).norm();
        }
        case ConeType::psd: {
            Block b;
            b.type = BlockType::psd;
            b.dim = static_cast<int>(seg.size());
            b.side = psd_side(b.dim);
            return membership_margin(b, seg);
        }
    }
    return -1.0;
}

/// Smallest margin over all non-zero cones (dual membership ignores zero
/// cones, whose duals are free).
double min_margin(const ConicProgram& prog, const RVec& v, bool skip_zero) {
    double margin = std::numeric_limits<double>::infinity();
    int row = 0;
    for (const auto& cone : prog.cones) {
        if (!(skip_zero && cone.type == ConeType::zero))
            margin = std::min(margin, cone_margin(cone, v.segment(row, cone.dim)));
        row += cone.dim;
    }
    return margin;
}

} // namespace

bool verify_certificate(const ConicProgram& prog, const SolveResult& result, double tol) {
    const RVec& x = result.x;
    const RVec& y = result.y;
    const RVec& s = result.s;
    const double bnorm = std::max(1.0, prog.rhs.cwiseAbs().maxCoeff());
    const double cnorm =
        std::max(1.0, prog.num_vars ? prog.objective.cwiseAbs().maxCoeff() : 0.0);

    switch (result.status) {
        case SolveStatus::optimal: {
            const RVec pr = prog.constraints * x + s - prog.rhs;
            if (pr.cwiseAbs().maxCoeff() > tol * bnorm) return false;
            if (min_margin(prog, s, false) < -tol * bnorm) return false;
            const RVec dr = prog.objective + prog.constraints.transpose() * y;
            if (dr.cwiseAbs().maxCoeff() > tol * cnorm) return false;
            if (min_margin(prog, y, true) < -tol * cnorm) return false;
            const double cx = prog.objective.dot(x);
            const double by = prog.rhs.dot(y);
            if (std::abs(cx + by) > tol * (1.0 + std::abs(cx) + std::abs(by))) return false;
            return true;
        }
        case SolveStatus::primal_infeasible: {
            // A'y = 0, y in K*, b'y < 0
            const double by = prog.rhs.dot(y);
            if (!(by < 0.0)) return false;
            const RVec aty = prog.constraints.transpose() * y;
            if (aty.cwiseAbs().maxCoeff() > tol * (-by) * cnorm) return false;
            if (min_margin(prog, y, true) < -tol * std::max(1.0, y.cwiseAbs().maxCoeff()))
                return false;
            return true;
        }
        case SolveStatus::dual_infeasible: {
            // A x + s = 0, s in K, c'x < 0
            const double cx = prog.objective.dot(x);
            if (!(cx < 0.0)) return false;
            const RVec ax = prog.constraints * x + s;
            if (ax.cwiseAbs().maxCoeff() > tol * (-cx) * bnorm) return false;
            if (min_margin(prog, s, false) < -tol * std::max(1.0, s.cwiseAbs().maxCoeff()))
                return false;
            return true;
        }
        default:
            return false;
    }
}

} // namespace irsopt::conic
