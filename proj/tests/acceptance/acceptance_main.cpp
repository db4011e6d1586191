// Acceptance suite: one line and one exit-code bit per criterion.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "irsopt/baselines.hpp"
#include "irsopt/bounds.hpp"
#include "irsopt/channel.hpp"
#include "irsopt/harness.hpp"
#include "irsopt/rng.hpp"
#include "irsopt/sca.hpp"

using namespace irsopt;
using bounds::ExpansionPoint;
using channel::ProblemInstance;
using sysmodel::DesignPoint;

namespace {

ProblemInstance synthetic_instance(int K, int Nt, int Ns, Rng& rng, double gamma = 1.0) {
    ProblemInstance inst;
    inst.num_users = K;
    inst.num_bs_antennas = Nt;
    inst.num_irs_elements = Ns;
    inst.bs_irs.resize(Ns, Nt);
    inst.bs_user.resize(K, Nt);
    inst.irs_user.resize(K, Ns);
    for (Eigen::Index i = 0; i < Ns; ++i)
        for (Eigen::Index j = 0; j < Nt; ++j) inst.bs_irs(i, j) = rng.cnormal();
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < Nt; ++j) inst.bs_user(i, j) = rng.cnormal();
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index j = 0; j < Ns; ++j) inst.irs_user(i, j) = rng.cnormal();
    inst.sinr_targets = RVec::Constant(K, gamma);
    return inst;
}

DesignPoint random_design(const ProblemInstance& inst, Rng& rng) {
    DesignPoint dp;
    dp.beamformers.resize(static_cast<Eigen::Index>(inst.num_users) * inst.num_bs_antennas);
    dp.irs_coeffs.resize(inst.num_irs_elements);
    for (Eigen::Index i = 0; i < dp.beamformers.size(); ++i) dp.beamformers(i) = rng.cnormal();
    for (Eigen::Index i = 0; i < dp.irs_coeffs.size(); ++i) dp.irs_coeffs(i) = rng.cnormal();
    return dp;
}

cplx cross_term(const ProblemInstance& inst, const DesignPoint& dp, int k, int l) {
    const CRowVec g = sysmodel::effective_channel(inst, dp.irs_coeffs, k);
    return g * dp.user(l, inst.num_bs_antennas);
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// C1: surrogate soundness over the dimension grid
// ---------------------------------------------------------------------------
Outcome criterion_surrogates() {
    const int grid_k[] = {1, 2, 4};
    const int grid_nt[] = {1, 2, 4};
    const int grid_ns[] = {1, 4, 16};
    const int per_cell = 371;  // 27 cells x 371 > 1e4 triples
    const double tol = 1e-10;
    Rng rng(123);
    long triples = 0;
    double worst_bound = 0.0, worst_tight = 0.0;
    for (int k : grid_k)
        for (int nt : grid_nt)
            for (int ns : grid_ns)
                for (int rep = 0; rep < per_cell; ++rep) {
                    const auto inst = synthetic_instance(k, nt, ns, rng);
                    const auto dp = random_design(inst, rng);
                    const auto epd = random_design(inst, rng);
                    const auto ep = ExpansionPoint::make(inst, epd);
                    const auto ep_self = ExpansionPoint::make(inst, dp);
                    ++triples;
                    for (int u = 0; u < k; ++u) {
                        const double direct = std::norm(cross_term(inst, dp, u, u));
                        worst_bound = std::max(
                            worst_bound, bounds::signal_lower_bound(inst, dp, ep, u) - direct);
                        worst_tight = std::max(
                            worst_tight,
                            std::abs(bounds::signal_lower_bound(inst, dp, ep_self, u) - direct));
                        for (int l = 0; l < k; ++l) {
                            if (l == u) continue;
                            const cplx gw = cross_term(inst, dp, u, l);
                            worst_bound = std::max(
                                {worst_bound,
                                 gw.real() - bounds::cross_re_plus(inst, dp, ep, u, l),
                                 -gw.real() - bounds::cross_re_minus(inst, dp, ep, u, l),
                                 gw.imag() - bounds::cross_im_plus(inst, dp, ep, u, l),
                                 -gw.imag() - bounds::cross_im_minus(inst, dp, ep, u, l)});
                            worst_tight = std::max(
                                {worst_tight,
                                 std::abs(bounds::cross_re_plus(inst, dp, ep_self, u, l) -
                                          gw.real()),
                                 std::abs(bounds::cross_re_minus(inst, dp, ep_self, u, l) +
                                          gw.real()),
                                 std::abs(bounds::cross_im_plus(inst, dp, ep_self, u, l) -
                                          gw.imag()),
                                 std::abs(bounds::cross_im_minus(inst, dp, ep_self, u, l) +
                                          gw.imag())});
                        }
                    }
                }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%ld triples, worst bound violation %.2e, worst tightness gap %.2e (tol %.0e)",
                  triples, worst_bound, worst_tight, tol);
    return {worst_bound <= tol && worst_tight <= tol, buf};
}

// ---------------------------------------------------------------------------
// C2: structural exactness of the compiled subproblem
// ---------------------------------------------------------------------------
Outcome criterion_counts() {
    Rng rng(321);
    std::vector<std::array<int, 3>> dims;
    for (int k : {1, 2, 4})
        for (int nt : {1, 2, 4})
            for (int ns : {1, 4, 16}) dims.push_back({k, nt, ns});
    dims.push_back({4, 4, 100});
    dims.push_back({6, 6, 64});
    for (const auto& d : dims) {
        const auto inst = synthetic_instance(d[0], d[1], d[2], rng);
        const auto ep = ExpansionPoint::make(inst, random_design(inst, rng));
        const auto prog = sca::assemble_subproblem(inst, ep, 1e-3);
        const int want_vars = 2 * (d[0] * d[1] + d[2] + d[0] * (d[0] - 1)) + 1;
        const int want_cones = d[0] + 4 * d[0] * (d[0] - 1) + d[2] + 1;
        if (prog.num_vars != want_vars ||
            static_cast<int>(prog.cones.size()) != want_cones ||
            !harness::validate_counts(inst, prog)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "mismatch at (K,Nt,Ns)=(%d,%d,%d): vars %d/%d cones %zu/%d",
                          d[0], d[1], d[2], prog.num_vars, want_vars, prog.cones.size(),
                          want_cones);
            return {false, buf};
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu dimension points, zero deviations", dims.size());
    return {true, buf};
}

// shared SCA runs for C3/C4
struct DescentRuns {
    int n = 0;
    int monotone = 0;
    int converged_by_rule = 0;
    int binding_at_cap = 0;
    int binding_at_convergence = 0;
    int feasible_exit = 0;
    double worst_ascent = 0.0;
};

DescentRuns run_descent_batch() {
    DescentRuns out;
    channel::ScenarioGeometry geom;
    channel::FadingParams fading;
    sca::ScaSettings st;  // xi 1e-3, rel tol 1e-5, cap 20 per the protocol
    for (int r = 0; r < 25; ++r) {
        const auto inst = channel::generate_instance(geom, fading, 4, 4, 16,
                                                     RVec::Constant(4, db_to_linear(10.0)),
                                                     9000 + r);
        ++out.n;
        try {
            const auto run = sca::run(inst, st, 40 + r);
            if (run.status != sca::RunStatus::ok) continue;
            bool mono = true;
            for (std::size_t i = 1; i < run.trace.rows.size(); ++i) {
                const double rise = run.trace.rows[i].penalized_objective -
                                    run.trace.rows[i - 1].penalized_objective;
                out.worst_ascent = std::max(out.worst_ascent, rise);
                if (rise > 1e-7) mono = false;
            }
            if (mono) ++out.monotone;
            if (run.trace.converged &&
                static_cast<int>(run.trace.rows.size()) - 1 <= 20)
                ++out.converged_by_rule;
            if (run.trace.rows.back().max_modulus_gap <= 1e-3) ++out.binding_at_cap;
            if (run.feasible) ++out.feasible_exit;

            // the paper's binding claim speaks about the converged point; let
            // the relative-change rule actually fire for it
            if (run.trace.rows.back().max_modulus_gap <= 1e-3) {
                ++out.binding_at_convergence;
            } else {
                sca::ScaSettings longer = st;
                longer.max_iters = 500;
                const auto full = sca::run(inst, longer, 40 + r);
                if (full.status == sca::RunStatus::ok &&
                    full.trace.rows.back().max_modulus_gap <= 1e-3)
                    ++out.binding_at_convergence;
            }
        } catch (const initialization_infeasible&) {
        }
    }
    return out;
}

Outcome criterion_descent(const DescentRuns& runs) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%d/%d monotone within 1e-7 (worst rise %.2e); 1e-5 rule fired by iter 20 in "
                  "%d/%d (need >= 23)",
                  runs.monotone, runs.n, runs.worst_ascent, runs.converged_by_rule, runs.n);
    const bool pass = runs.monotone == runs.n && runs.converged_by_rule >= 23;
    return {pass, buf};
}

Outcome criterion_binding(const DescentRuns& runs) {
    char buf[240];
    std::snprintf(buf, sizeof buf,
                  "modulus gap <= 1e-3 before projection: %d/%d at convergence (need >= 24; "
                  "%d/%d already at the 20-iteration cap); feasible exits %d/%d (need all)",
                  runs.binding_at_convergence, runs.n, runs.binding_at_cap, runs.n,
                  runs.feasible_exit, runs.n);
    const bool pass =
        runs.binding_at_convergence * 100 >= runs.n * 95 && runs.feasible_exit == runs.n;
    return {pass, buf};
}

// ---------------------------------------------------------------------------
// C5: exhaustive oracle on tiny single-user instances
// ---------------------------------------------------------------------------
Outcome criterion_oracle() {
    Rng rng(555);
    const int grid = 720;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int nt = 1 + (trial % 2);
        const auto inst = synthetic_instance(1, nt, 2, rng);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                CVec phi(2);
                phi << std::polar(1.0, 2.0 * M_PI * i / grid),
                    std::polar(1.0, 2.0 * M_PI * j / grid);
                const CRowVec g = sysmodel::effective_channel(inst, phi, 0);
                best = std::min(best, inst.sinr_targets(0) / g.squaredNorm());
            }
        // the oracle criterion pins no iteration budget; run the method to
        // its own convergence
        sca::ScaSettings st;
        st.max_iters = 500;
        st.rel_obj_tol = 1e-8;
        const auto out = sca::run(inst, st, 700 + trial);
        if (out.status != sca::RunStatus::ok || !out.feasible)
            return {false, "tiny-instance run failed"};
        const double rel =
            std::abs(sysmodel::transmit_power(out.point) - best) / best;
        worst_rel = std::max(worst_rel, rel);
    }
    char buf[120];
    std::snprintf(buf, sizeof buf, "10 instances, worst |power - oracle|/oracle = %.3e (tol 1e-2)",
                  worst_rel);
    return {worst_rel <= 1e-2, buf};
}

// ---------------------------------------------------------------------------
// C6: benchmark dominance at gamma 10 and 20 dB
// ---------------------------------------------------------------------------
Outcome criterion_dominance() {
    harness::ExperimentConfig cfg;
    cfg.num_users = 4;
    cfg.num_bs_antennas = 4;
    cfg.irs_elements = 16;
    cfg.gamma_db_sweep = {10.0, 20.0};
    cfg.n_realizations = 25;
    cfg.master_seed = 20;
    cfg.sdr_settings.n_randomizations = 200;
    const auto report = harness::run_experiment(cfg);
    const auto* sca10 = report.aggregate(0, "sca");
    const auto* ao10 = report.aggregate(0, "sdr-ao");
    const auto* sca20 = report.aggregate(1, "sca");
    const auto* ao20 = report.aggregate(1, "sdr-ao");
    if (!sca10 || !ao10 || !sca20 || !ao20 || sca10->n_included == 0 || sca20->n_included == 0)
        return {false, "missing aggregates"};
    const double gap10 = ao10->mean_power_dbm - sca10->mean_power_dbm;
    const double gap20 = ao20->mean_power_dbm - sca20->mean_power_dbm;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "paired n=%d: mean dBm sca/ao = %.2f/%.2f at 10 dB (gap %.2f), %.2f/%.2f at "
                  "20 dB (gap %.2f)",
                  sca10->n_included, sca10->mean_power_dbm, ao10->mean_power_dbm, gap10,
                  sca20->mean_power_dbm, ao20->mean_power_dbm, gap20);
    return {gap10 >= 0.0 && gap20 > gap10, buf};
}

// ---------------------------------------------------------------------------
// C7: scaling trends over the IRS sweep
// ---------------------------------------------------------------------------
Outcome criterion_scaling() {
    harness::ExperimentConfig cfg;
    cfg.num_users = 6;
    cfg.num_bs_antennas = 6;
    cfg.ns_sweep = {16, 25, 36, 49, 64};
    cfg.gamma_db = 10.0;
    cfg.n_realizations = 4;
    cfg.master_seed = 77;
    cfg.sdr_settings.n_randomizations = 200;
    const auto report = harness::run_experiment(cfg);

    std::vector<double> sca_p, ao_p, sca_t, ao_t;
    for (int si = 0; si < 5; ++si) {
        const auto* s = report.aggregate(si, "sca");
        const auto* a = report.aggregate(si, "sdr-ao");
        if (!s || !a || s->n_included == 0) return {false, "missing aggregates"};
        sca_p.push_back(s->mean_power_dbm);
        ao_p.push_back(a->mean_power_dbm);
        sca_t.push_back(s->mean_solve_seconds);
        ao_t.push_back(a->mean_solve_seconds);
    }
    bool decreasing = true;
    for (int i = 1; i < 5; ++i)
        decreasing = decreasing && sca_p[i] < sca_p[i - 1] && ao_p[i] < ao_p[i - 1];

    auto loglog_slope = [&](const std::vector<double>& t) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < 5; ++i) {
            const double x = std::log(static_cast<double>(cfg.ns_sweep[i]));
            const double y = std::log(std::max(t[i], 1e-9));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        return (5 * sxy - sx * sy) / (5 * sxx - sx * sx);
    };
    const double slope_sca = loglog_slope(sca_t);
    const double slope_ao = loglog_slope(ao_t);
    const bool faster = sca_t[4] < ao_t[4];

    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "power dBm sca %.1f..%.1f ao %.1f..%.1f %s; time at Ns=64 sca %.2fs < ao %.2fs "
                  "%s; slopes sca %.2f vs ao %.2f %s",
                  sca_p.front(), sca_p.back(), ao_p.front(), ao_p.back(),
                  decreasing ? "strictly decreasing" : "NOT monotone", sca_t[4], ao_t[4],
                  faster ? "ok" : "VIOLATED", slope_sca, slope_ao,
                  slope_ao > slope_sca ? "separated" : "NOT separated");
    return {decreasing && faster && slope_ao > slope_sca, buf};
}

// ---------------------------------------------------------------------------
// C8: conic solver correctness
// ---------------------------------------------------------------------------
namespace cone_gen {

using Triplets = std::vector<Eigen::Triplet<double>>;

RVec svec_of(const RMat& m) {
    const int d = static_cast<int>(m.rows());
    RVec v(d * (d + 1) / 2);
    int idx = 0;
    for (int j = 0; j < d; ++j) {
        v(idx++) = m(j, j);
        for (int i = j + 1; i < d; ++i) v(idx++) = std::sqrt(2.0) * m(i, j);
    }
    return v;
}

conic::ConicProgram random_socp(Rng& rng) {
    const int n = 4 + static_cast<int>(rng.uniform() * 5);
    std::vector<conic::Cone> cones;
    int m = 0;
    const int n_blocks = 2 + static_cast<int>(rng.uniform() * 3);
    for (int i = 0; i < n_blocks; ++i) {
        const double pick = rng.uniform();
        if (pick < 0.4) {
            const int dim = 1 + static_cast<int>(rng.uniform() * 3);
            cones.push_back({conic::ConeType::nonneg, dim});
            m += dim;
        } else if (pick < 0.8) {
            const int dim = 2 + static_cast<int>(rng.uniform() * 4);
            cones.push_back({conic::ConeType::soc, dim});
            m += dim;
        } else {
            const int dim = 3 + static_cast<int>(rng.uniform() * 3);
            cones.push_back({conic::ConeType::rotated_soc, dim});
            m += dim;
        }
    }
    RMat a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    auto interior = [&](RVec& v) {
        int row = 0;
        for (const auto& cone : cones) {
            if (cone.type == conic::ConeType::nonneg) {
                for (int i = 0; i < cone.dim; ++i) v(row + i) = 0.5 + rng.uniform();
            } else if (cone.type == conic::ConeType::soc) {
                for (int i = 1; i < cone.dim; ++i) v(row + i) = rng.normal();
                v(row) = v.segment(row + 1, cone.dim - 1).norm() + 0.5 + rng.uniform();
            } else {
                for (int i = 2; i < cone.dim; ++i) v(row + i) = rng.normal();
                const double nz2 = v.segment(row + 2, cone.dim - 2).squaredNorm();
                v(row) = 0.5 + rng.uniform();
                v(row + 1) = (nz2 + 0.5 + rng.uniform()) / (2.0 * v(row));
            }
            row += cone.dim;
        }
    };
    RVec x0(n), s0(m), z0(m);
    for (int j = 0; j < n; ++j) x0(j) = rng.normal();
    interior(s0);
    interior(z0);
    conic::ConicProgram prog;
    prog.num_vars = n;
    prog.objective = -a.transpose() * z0;
    prog.rhs = a * x0 + s0;
    prog.cones = cones;
    Triplets trips;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) trips.emplace_back(i, j, a(i, j));
    prog.constraints.resize(m, n);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());
    return prog;
}

conic::ConicProgram random_sdp(Rng& rng) {
    const int d = 2 + static_cast<int>(rng.uniform() * 4);
    const int sd = d * (d + 1) / 2;
    const int n = sd;
    const int m = d + 1 + sd;  // diag rows, one nonneg row, psd block
    RMat a = RMat::Zero(m, n);
    RVec b = RVec::Zero(m);
    int row = 0;
    for (int j = 0; j < d; ++j) {
        int idx = 0, target = -1;
        for (int col = 0; col < d; ++col) {
            if (col == j) target = idx;
            idx += d - col;
        }
        a(row, target) = 1.0;
        b(row) = 1.0;
        ++row;
    }
    const int nn = row;
    for (int j = 0; j < n; ++j) a(row, j) = 0.4 * rng.normal();
    ++row;
    for (int i = 0; i < sd; ++i) a(row + i, i) = -1.0;

    RVec x0 = svec_of(RMat::Identity(d, d));
    b(nn) = a.row(nn).dot(x0) + 1.0;

    RVec z0(m);
    for (int r = 0; r < d; ++r) z0(r) = rng.normal();
    z0(nn) = 0.5 + rng.uniform();
    RMat pd(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) pd(i, j) = rng.normal();
    pd = RMat(pd * pd.transpose() / d + 0.5 * RMat::Identity(d, d));
    z0.tail(sd) = svec_of(pd);

    conic::ConicProgram prog;
    prog.num_vars = n;
    prog.objective = -a.transpose() * z0;
    prog.rhs = b;
    prog.cones = {{conic::ConeType::zero, d},
                  {conic::ConeType::nonneg, 1},
                  {conic::ConeType::psd, sd}};
    Triplets trips;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (a(i, j) != 0.0) trips.emplace_back(i, j, a(i, j));
    prog.constraints.resize(m, n);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());
    return prog;
}

} // namespace cone_gen

Outcome criterion_conic() {
    Rng rng(808);
    int socp_ok = 0, sdp_ok = 0;
    for (int t = 0; t < 100; ++t) {
        const auto prog = cone_gen::random_socp(rng);
        const auto res = conic::solve(prog);
        if (res.status == conic::SolveStatus::optimal && conic::verify_certificate(prog, res))
            ++socp_ok;
    }
    for (int t = 0; t < 20; ++t) {
        const auto prog = cone_gen::random_sdp(rng);
        const auto res = conic::solve(prog);
        if (res.status == conic::SolveStatus::optimal && conic::verify_certificate(prog, res))
            ++sdp_ok;
    }
    // min t s.t. (t, 3, 4) in SOC3
    conic::ConicProgram norm_prog;
    norm_prog.num_vars = 1;
    norm_prog.objective = RVec::Ones(1);
    norm_prog.rhs = RVec::Zero(3);
    norm_prog.rhs(1) = 3.0;
    norm_prog.rhs(2) = 4.0;
    norm_prog.cones = {{conic::ConeType::soc, 3}};
    std::vector<Eigen::Triplet<double>> trips{{0, 0, -1.0}};
    norm_prog.constraints.resize(3, 1);
    norm_prog.constraints.setFromTriplets(trips.begin(), trips.end());
    const auto norm_res = conic::solve(norm_prog);
    const bool norm_ok = norm_res.status == conic::SolveStatus::optimal &&
                         std::abs(norm_res.x(0) - 5.0) <= 1e-7;
    char buf[160];
    std::snprintf(buf, sizeof buf, "SOCPs %d/100 verified, SDPs %d/20 verified, |t - 5| = %.2e",
                  socp_ok, sdp_ok, std::abs(norm_res.x(0) - 5.0));
    return {socp_ok == 100 && sdp_ok == 20 && norm_ok, buf};
}

// ---------------------------------------------------------------------------
// C9: complexity estimator
// ---------------------------------------------------------------------------
Outcome criterion_complexity() {
    const double v111 = baselines::complexity_estimate(baselines::Method::socp, 1, 1, 1);
    const double want = 360.0 * std::sqrt(5.0);
    const double rel = std::abs(v111 - want) / want;
    const double ratio = baselines::complexity_estimate(baselines::Method::socp, 4, 4, 2048) /
                         baselines::complexity_estimate(baselines::Method::socp, 4, 4, 1024);
    const double ratio_err = std::abs(ratio - std::pow(2.0, 3.5)) / std::pow(2.0, 3.5);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "estimate(1,1,1) rel err %.2e (tol 1e-9); doubling ratio %.3f vs 2^3.5 "
                  "(err %.1f%%, tol 10%%)",
                  rel, ratio, 100.0 * ratio_err);
    return {rel <= 1e-9 && ratio_err <= 0.10, buf};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* id, const char* name, const Outcome& o) {
        std::printf("[%s] %s %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    };

    report("C1", "surrogate soundness", criterion_surrogates());
    report("C2", "structural exactness", criterion_counts());
    const auto runs = run_descent_batch();
    report("C3", "descent and convergence", criterion_descent(runs));
    report("C4", "unit-modulus binding", criterion_binding(runs));
    report("C5", "oracle equivalence", criterion_oracle());
    report("C6", "benchmark dominance", criterion_dominance());
    report("C7", "scaling trends", criterion_scaling());
    report("C8", "conic solver correctness", criterion_conic());
    report("C9", "complexity estimator", criterion_complexity());

    std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
