#include "irsopt/baselines.hpp"

#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace irsopt::baselines {

void SdrSettings::validate() const {
    if (n_randomizations < 1) throw std::invalid_argument("n_randomizations must be >= 1");
    if (ao_max_rounds < 1) throw std::invalid_argument("ao_max_rounds must be >= 1");
    if (!(ao_rel_tol > 0.0)) throw std::invalid_argument("ao_rel_tol must be > 0");
}

WUpdateResult w_update(const ProblemInstance& inst, const CVec& irs_coeffs,
                       const conic::SolverSettings& solver) {
    inst.validate();
    if (irs_coeffs.size() != inst.num_irs_elements)
        throw std::invalid_argument("IRS coefficient length does not match the instance");

    const int K = inst.num_users;
    const int nt = inst.num_bs_antennas;
    const int n = 2 * K * nt + 1;  // [Re w; Im w; tau]
    const int tau = n - 1;

    conic::ConicProgram prog;
    prog.num_vars = n;
    prog.objective = RVec::Zero(n);
    prog.objective(tau) = 1.0;

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rhs;
    auto row = [&]() { return static_cast<int>(rhs.size()); };
    auto put = [&](int r, int c, double v) {
        if (v != 0.0) trips.emplace_back(r, c, v);
    };
    // Re{g w_l} and Im{g w_l} as rows over [Re w_l; Im w_l]
    auto put_re = [&](int r, const CRowVec& g, int l, double scale) {
        for (int i = 0; i < nt; ++i) {
            put(r, l * nt + i, scale * g(i).real());
            put(r, K * nt + l * nt + i, -scale * g(i).imag());
        }
    };
    auto put_im = [&](int r, const CRowVec& g, int l, double scale) {
        for (int i = 0; i < nt; ++i) {
            put(r, l * nt + i, scale * g(i).imag());
            put(r, K * nt + l * nt + i, scale * g(i).real());
        }
    };

    for (int k = 0; k < K; ++k) {
        const CRowVec g = sysmodel::effective_channel(inst, irs_coeffs, k);
        const double root_gamma = std::sqrt(inst.sinr_targets(k));
        // Re{g_k w_k}/sqrt(Gamma_k) >= || [1; g_k w_l, l != k] ||
        put_re(row(), g, k, -1.0 / root_gamma);
        rhs.push_back(0.0);
        rhs.push_back(1.0);
        for (int l = 0; l < K; ++l) {
            if (l == k) continue;
            put_re(row(), g, l, -1.0);
            rhs.push_back(0.0);
            put_im(row(), g, l, -1.0);
            rhs.push_back(0.0);
        }
        prog.cones.push_back({conic::ConeType::soc, 2 + 2 * (K - 1)});
    }
    // tau >= ||w||^2
    put(row(), tau, -1.0);
    rhs.push_back(0.0);
    rhs.push_back(0.5);
    for (int j = 0; j < 2 * K * nt; ++j) {
        put(row(), j, -1.0);
        rhs.push_back(0.0);
    }
    prog.cones.push_back({conic::ConeType::rotated_soc, 2 + 2 * K * nt});

    prog.rhs = Eigen::Map<RVec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    prog.constraints.resize(prog.rhs.size(), n);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());
    prog.validate();

    const auto res = conic::solve(prog, solver);
    WUpdateResult out;
    out.status = res.status;
    if (res.status == conic::SolveStatus::optimal) {
        out.beamformers.resize(static_cast<Eigen::Index>(K) * nt);
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < nt; ++i)
                out.beamformers(k * nt + i) = cplx(res.x(k * nt + i), res.x(K * nt + k * nt + i));
        out.power = out.beamformers.squaredNorm();
    }
    return out;
}

namespace {

const double kSqrt2 = std::sqrt(2.0);

/// Same svec convention as the psd cone blocks.
RVec svec_sym(const RMat& m) {
    const int d = static_cast<int>(m.rows());
    RVec v(d * (d + 1) / 2);
    int idx = 0;
    for (int j = 0; j < d; ++j) {
        v(idx++) = m(j, j);
        for (int i = j + 1; i < d; ++i) v(idx++) = kSqrt2 * m(i, j);
    }
    return v;
}

RMat smat_sym(const RVec& v) {
    const int d = conic::psd_side(static_cast<int>(v.size()));
    RMat m(d, d);
    int idx = 0;
    for (int j = 0; j < d; ++j) {
        m(j, j) = v(idx++);
        for (int i = j + 1; i < d; ++i) {
            m(i, j) = v(idx++) / kSqrt2;
            m(j, i) = m(i, j);
        }
    }
    return m;
}

int svec_diag_index(int j, int d) {
    // position of the (j, j) entry in the column-major lower-triangle packing
    return j * d - j * (j - 1) / 2;
}

/// Real embedding of a Hermitian matrix: [[Re, -Im], [Im, Re]].
RMat embed_hermitian(const CMat& q) {
    const int d = static_cast<int>(q.rows());
    RMat out(2 * d, 2 * d);
    out.topLeftCorner(d, d) = q.real();
    out.bottomRightCorner(d, d) = q.real();
    out.topRightCorner(d, d) = -q.imag();
    out.bottomLeftCorner(d, d) = q.imag();
    return out;
}

/// min_k ( |g_k w_k|^2 / Gamma_k - 1 - sum_{l != k} |g_k w_l|^2 ), the
/// candidate-selection metric of the randomization step.
double min_sinr_slack(const ProblemInstance& inst, const CVec& w, const CVec& phi) {
    double worst = std::numeric_limits<double>::infinity();
    for (int k = 0; k < inst.num_users; ++k) {
        const CRowVec g = sysmodel::effective_channel(inst, phi, k);
        double signal = 0.0, interference = 0.0;
        for (int l = 0; l < inst.num_users; ++l) {
            const double p = std::norm(cplx(g * w.segment(
                                                static_cast<Eigen::Index>(l) * inst.num_bs_antennas,
                                                inst.num_bs_antennas)));
            if (l == k)
                signal = p;
            else
                interference += p;
        }
        worst = std::min(worst, signal / inst.sinr_targets(k) - 1.0 - interference);
    }
    return worst;
}

/// Sum over users of the achieved slack |g_k w_k|^2 - Gamma_k (1 + I_k); the
/// quantity the semidefinite relaxation upper-bounds.
double sum_alpha(const ProblemInstance& inst, const CVec& w, const CVec& phi) {
    double total = 0.0;
    for (int k = 0; k < inst.num_users; ++k) {
        const CRowVec g = sysmodel::effective_channel(inst, phi, k);
        double signal = 0.0, interference = 0.0;
        for (int l = 0; l < inst.num_users; ++l) {
            const double p = std::norm(cplx(g * w.segment(
                                                static_cast<Eigen::Index>(l) * inst.num_bs_antennas,
                                                inst.num_bs_antennas)));
            if (l == k)
                signal = p;
            else
                interference += p;
        }
        total += signal - inst.sinr_targets(k) * (1.0 + interference);
    }
    return total;
}

} // namespace

CVec phi_update_sdr(const ProblemInstance& inst, const CVec& beamformers, const CVec& incumbent,
                    const SdrSettings& settings, std::uint64_t rng_seed) {
    settings.validate();
    inst.validate();
    const int K = inst.num_users;
    const int nt = inst.num_bs_antennas;
    const int ns = inst.num_irs_elements;
    const int d = ns + 1;  // homogenized [phi; 1]
    const int dd = 2 * d;  // real embedding side
    if (dd > settings.solver.psd_dim_cap)
        throw std::invalid_argument("IRS size exceeds the psd dimension cap of the solver");

    // quadratic forms |g_k w_l|^2 = vt^H (r^H r) vt with vt = [phi; 1]
    std::vector<std::vector<CMat>> q(K, std::vector<CMat>(K));
    for (int k = 0; k < K; ++k) {
        const CVec a_base = inst.irs_user.row(k).transpose();
        for (int l = 0; l < K; ++l) {
            const CVec wl =
                beamformers.segment(static_cast<Eigen::Index>(l) * nt, nt);
            const CVec hw = inst.bs_irs * wl;  // N_s
            CVec r(d);
            r.head(ns) = a_base.cwiseProduct(hw);
            r(ns) = inst.bs_user.row(k) * wl;
            q[k][l] = r.conjugate() * r.transpose();  // r^H r
        }
    }

    const int sd = dd * (dd + 1) / 2;
    const int n = sd + K;  // [svec(S); alpha]

    conic::ConicProgram prog;
    prog.num_vars = n;
    prog.objective = RVec::Zero(n);
    for (int k = 0; k < K; ++k) prog.objective(sd + k) = -1.0;  // max sum alpha

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rhs;
    auto row = [&]() { return static_cast<int>(rhs.size()); };

    // diag(S) = 1
    for (int j = 0; j < dd; ++j) {
        trips.emplace_back(row(), svec_diag_index(j, dd), 1.0);
        rhs.push_back(1.0);
    }
    prog.cones.push_back({conic::ConeType::zero, dd});

    // lifted SINR rows: L_{Qkk}(S) - Gamma_k sum L_{Qkl}(S) - alpha_k >= Gamma_k,
    // each row normalized so the squared channel magnitudes do not swamp the
    // unit-scale diagonal rows
    for (int k = 0; k < K; ++k) {
        CMat qc = q[k][k];
        for (int l = 0; l < K; ++l)
            if (l != k) qc -= inst.sinr_targets(k) * q[k][l];
        RVec coef = 0.5 * svec_sym(embed_hermitian(qc));
        const double scale = std::max(1.0, coef.cwiseAbs().maxCoeff());
        coef /= scale;
        const int r = row();
        for (int j = 0; j < sd; ++j)
            if (coef(j) != 0.0) trips.emplace_back(r, j, -coef(j));
        trips.emplace_back(r, sd + k, 1.0 / scale);
        rhs.push_back(-inst.sinr_targets(k) / scale);
    }
    prog.cones.push_back({conic::ConeType::nonneg, K});

    // alpha_k >= 0: keep every lifted constraint at or above its target, so
    // randomized projections start from a fully feasible covariance
    for (int k = 0; k < K; ++k) {
        trips.emplace_back(row(), sd + k, -1.0);
        rhs.push_back(0.0);
    }
    prog.cones.push_back({conic::ConeType::nonneg, K});

    // S psd
    const int psd_row0 = row();
    for (int i = 0; i < sd; ++i) {
        trips.emplace_back(psd_row0 + i, i, -1.0);
        rhs.push_back(0.0);
    }
    prog.cones.push_back({conic::ConeType::psd, sd});

    prog.rhs = Eigen::Map<RVec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    prog.constraints.resize(prog.rhs.size(), n);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());
    prog.validate();

    // the covariance only feeds Gaussian sampling, so a 1e-4-accurate solve
    // is ample; the endgame of large psd blocks rarely reaches 1e-8, and the
    // Woodbury path needs extra refinement to keep the dual residual down
    conic::SolverSettings sdp_solver = settings.solver;
    sdp_solver.tol_inaccurate = std::max(sdp_solver.tol_inaccurate, 1e-3);
    sdp_solver.refine_steps = std::max(sdp_solver.refine_steps, 6);
    const auto res = conic::solve(prog, sdp_solver);
    if (res.status != conic::SolveStatus::optimal)
        throw std::runtime_error(std::string("phase-update SDP failed: ") +
                                 conic::to_string(res.status));
    const double sdp_value = -res.objective;  // the maximized sum of slacks

    // complex covariance back from the real embedding
    const RMat s_mat = smat_sym(res.x.head(sd));
    CMat v = 0.5 * (s_mat.topLeftCorner(d, d) + s_mat.bottomRightCorner(d, d)).cast<cplx>();
    v += cplx(0.0, 0.5) *
         (s_mat.bottomLeftCorner(d, d) - s_mat.topRightCorner(d, d)).cast<cplx>();
    v = 0.5 * (v + v.adjoint().eval());

    // sampling factor with eigenvalue clamping
    Eigen::SelfAdjointEigenSolver<CMat> eig(v);
    const RVec clamped = eig.eigenvalues().cwiseMax(0.0);
    const CMat factor = eig.eigenvectors() * clamped.cwiseSqrt().asDiagonal();

    Rng rng = Rng::stream(rng_seed, 0, 3000);
    CVec best_phi = incumbent;
    double best_slack = min_sinr_slack(inst, beamformers, incumbent);

    for (int trial = 0; trial < settings.n_randomizations; ++trial) {
        CVec xi(d);
        for (int i = 0; i < d; ++i) xi(i) = rng.cnormal();
        CVec cand = factor * xi;
        // rotate so the homogenizing coordinate has zero phase, then force
        // unit modulus elementwise
        const cplx last = cand(ns);
        if (std::abs(last) > 0.0) cand *= std::conj(last) / std::abs(last);
        CVec phi(ns);
        for (int i = 0; i < ns; ++i) {
            const double mod = std::abs(cand(i));
            phi(i) = (mod == 0.0) ? cplx(1.0, 0.0) : cand(i) / mod;
        }
        const double slack = min_sinr_slack(inst, beamformers, phi);
        if (slack > best_slack) {
            best_slack = slack;
            best_phi = phi;
        }
    }

    // relaxation bound: no unit-modulus candidate can beat the SDP value
    // (tolerance matched to the accepted SDP accuracy)
    const double achieved = sum_alpha(inst, beamformers, best_phi);
    if (achieved > sdp_value + 1e-3 * (1.0 + std::abs(sdp_value)))
        throw std::runtime_error("semidefinite relaxation bound violated");

    return best_phi;
}

AoResult run_ao(const ProblemInstance& inst, const SdrSettings& settings,
                std::uint64_t rng_seed) {
    settings.validate();
    AoResult out;

    // random unit-modulus start, redrawn while the fixed-phi problem is
    // infeasible
    CVec phi;
    CVec w;
    bool initialized = false;
    const int retries = 20;
    for (int attempt = 0; attempt < retries && !initialized; ++attempt) {
        Rng rng = Rng::stream(rng_seed, static_cast<std::uint64_t>(attempt), 2000);
        phi.resize(inst.num_irs_elements);
        for (int i = 0; i < inst.num_irs_elements; ++i)
            phi(i) = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
        const auto res = w_update(inst, phi, settings.solver);
        if (res.status == conic::SolveStatus::optimal) {
            w = res.beamformers;
            initialized = true;
        }
    }
    if (!initialized)
        throw initialization_infeasible(
            "no feasible beamformer found for any sampled initial phase vector");

    double cum = 0.0;
    auto record = [&](int iter, double solve_s) {
        DesignPoint dp;
        dp.beamformers = w;
        dp.irs_coeffs = phi;
        dp.unit_modulus = true;
        const auto rep = sysmodel::check_feasibility(inst, dp);
        sca::ScaIterRow r;
        r.iter = iter;
        r.power = sysmodel::transmit_power(dp);
        r.penalized_objective = r.power;  // no relaxation penalty in this method
        r.min_sinr_margin = rep.sinr_margin.minCoeff();
        r.max_modulus_gap = rep.max_modulus_violation;
        r.solve_seconds = solve_s;
        r.cum_seconds = cum;
        out.trace.rows.push_back(r);
    };
    record(0, 0.0);

    double prev_power = w.squaredNorm();
    for (int round = 1; round <= settings.ao_max_rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        bool failed = false;
        try {
            phi = phi_update_sdr(inst, w, phi, settings,
                                 splitmix64(rng_seed) + static_cast<std::uint64_t>(round));
        } catch (const std::runtime_error&) {
            failed = true;
        }
        if (!failed) {
            const auto res = w_update(inst, phi, settings.solver);
            if (res.status == conic::SolveStatus::optimal)
                w = res.beamformers;
            else
                failed = true;
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cum += dt;
        if (failed) {
            // a failed update after completed rounds means no new candidate:
            // keep the (feasible) incumbent and stop, as the acceptance rule
            // would; only a first-round failure is a hard error
            if (round > 1)
                out.trace.solver_stop = true;
            else
                out.status = sca::RunStatus::solver_failure;
            break;
        }
        record(round, dt);

        const double power = w.squaredNorm();
        const double rel = std::abs(prev_power - power) / std::max(1.0, prev_power);
        prev_power = power;
        if (rel < settings.ao_rel_tol) {
            out.trace.converged = true;
            break;
        }
    }

    out.point.beamformers = w;
    out.point.irs_coeffs = phi;
    out.point.unit_modulus = true;
    out.feasible = sysmodel::check_feasibility(inst, out.point).feasible;
    return out;
}

double complexity_estimate(Method method, int num_users, int num_bs_antennas,
                           int num_irs_elements) {
    if (num_users < 1 || num_bs_antennas < 1 || num_irs_elements < 1)
        throw std::invalid_argument("counts must be >= 1");
    const double k = num_users, nt = num_bs_antennas, ns = num_irs_elements;
    switch (method) {
        case Method::socp:
            return 2.0 * std::sqrt(4.0 * k * k + ns) * (k * k + k * nt + ns) *
                   (4.0 * std::pow(k, 5) + 16.0 * k * k * k * nt + 8.0 * k * k * ns +
                    20.0 * k * k * nt * nt + 8.0 * k * nt * ns + 4.0 * ns * ns);
        case Method::sdr:
            return std::pow(ns, 7);
    }
    throw std::invalid_argument("unknown method");
}

} // namespace irsopt::baselines
