#include "irsopt/sca.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "irsopt/baselines.hpp"

namespace irsopt::sca {

void ScaSettings::validate() const {
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be > 0");
    if (!(rel_obj_tol > 0.0)) throw std::invalid_argument("rel_obj_tol must be > 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (init_retries < 1) throw std::invalid_argument("init_retries must be >= 1");
}

double penalized_objective(const DesignPoint& dp, double xi) {
    return dp.beamformers.squaredNorm() - xi * dp.irs_coeffs.squaredNorm();
}

SubproblemLayout SubproblemLayout::of(const ProblemInstance& inst) {
    SubproblemLayout lay;
    lay.base = bounds::VariableLayout{inst.num_users, inst.num_bs_antennas,
                                      inst.num_irs_elements};
    lay.num_pairs = inst.num_users * (inst.num_users - 1);
    return lay;
}

namespace {

int pair_index(int k, int l, int num_users) {
    return k * (num_users - 1) + (l < k ? l : l - 1);
}

} // namespace

int SubproblemLayout::t_index(int k, int l) const {
    return base.base_dim() + pair_index(k, l, base.num_users);
}

int SubproblemLayout::tbar_index(int k, int l) const {
    return base.base_dim() + num_pairs + pair_index(k, l, base.num_users);
}

conic::ConicProgram assemble_subproblem(const ProblemInstance& inst, const ExpansionPoint& ep,
                                        double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("xi must be > 0");
    if (ep.phi_prev.size() != inst.num_irs_elements ||
        ep.w_prev.size() != static_cast<Eigen::Index>(inst.num_users) * inst.num_bs_antennas)
        throw std::invalid_argument("expansion point does not match the instance");

    const int K = inst.num_users;
    const int nt = inst.num_bs_antennas;
    const int ns = inst.num_irs_elements;
    const SubproblemLayout lay = SubproblemLayout::of(inst);
    const int n = lay.dim();
    const int n0 = lay.base.base_dim();

    conic::ConicProgram prog;
    prog.num_vars = n;
    prog.objective = RVec::Zero(n);
    prog.objective(lay.tau_index()) = 1.0;
    for (int i = 0; i < ns; ++i) {
        prog.objective(lay.base.phi_re(i)) = -2.0 * xi * ep.phi_prev(i).real();
        prog.objective(lay.base.phi_im(i)) = -2.0 * xi * ep.phi_prev(i).imag();
    }
    prog.objective_offset = xi * ep.phi_prev.squaredNorm();

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> rhs;
    auto row = [&]() { return static_cast<int>(rhs.size()); };
    auto put = [&](int r, int c, double v) {
        if (v != 0.0) trips.emplace_back(r, c, v);
    };

    // SINR cones: surrogate signal bound against the interference slacks,
    // with the target folded into the cone scaling.
    for (int k = 0; k < K; ++k) {
        const double gamma = inst.sinr_targets(k);
        const auto f = bounds::surrogate_coefficients(inst, ep, k, -1,
                                                      bounds::SurrogateKind::signal_lb);
        const int r0 = row();
        for (int j = 0; j < n0; ++j) put(r0, j, -f.affine(j) / gamma);
        rhs.push_back(f.affine0 / gamma - 1.0);
        rhs.push_back(0.5);
        const double scale = 1.0 / std::sqrt(2.0 * gamma);
        for (int i = 0; i < 2 * nt; ++i) {
            const int r = row();
            for (int j = 0; j < n0; ++j) put(r, j, -f.quad_map(i, j) * scale);
            rhs.push_back(f.quad_shift(i) * scale);
        }
        for (int l = 0; l < K; ++l) {
            if (l == k) continue;
            put(row(), lay.t_index(k, l), -1.0);
            rhs.push_back(0.0);
        }
        for (int l = 0; l < K; ++l) {
            if (l == k) continue;
            put(row(), lay.tbar_index(k, l), -1.0);
            rhs.push_back(0.0);
        }
        prog.cones.push_back({conic::ConeType::rotated_soc, 2 + 2 * nt + 2 * (K - 1)});
    }

    // cross-term epigraph cones: t_kl and tbar_kl above the four convex
    // upper bounds
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            if (l == k) continue;
            const bounds::SurrogateKind kinds[4] = {
                bounds::SurrogateKind::re_plus_ub, bounds::SurrogateKind::re_minus_ub,
                bounds::SurrogateKind::im_plus_ub, bounds::SurrogateKind::im_minus_ub};
            for (int q = 0; q < 4; ++q) {
                const auto surr = bounds::surrogate_coefficients(inst, ep, k, l, kinds[q]);
                const int slack = (q < 2) ? lay.t_index(k, l) : lay.tbar_index(k, l);
                const int r0 = row();
                put(r0, slack, -1.0);
                for (int j = 0; j < n0; ++j) put(r0, j, surr.affine(j));
                rhs.push_back(-surr.affine0);
                rhs.push_back(0.5);
                for (int i = 0; i < 2 * nt; ++i) {
                    const int r = row();
                    for (int j = 0; j < n0; ++j) put(r, j, -surr.quad_map(i, j) * inv_sqrt2);
                    rhs.push_back(surr.quad_shift(i) * inv_sqrt2);
                }
                prog.cones.push_back({conic::ConeType::rotated_soc, 2 + 2 * nt});
            }
        }

    // relaxed unit-modulus: |phi_i| <= 1
    for (int i = 0; i < ns; ++i) {
        rhs.push_back(1.0);
        put(row(), lay.base.phi_re(i), -1.0);
        rhs.push_back(0.0);
        put(row(), lay.base.phi_im(i), -1.0);
        rhs.push_back(0.0);
        prog.cones.push_back({conic::ConeType::soc, 3});
    }

    // power epigraph: tau >= ||w||^2
    {
        put(row(), lay.tau_index(), -1.0);
        rhs.push_back(0.0);
        rhs.push_back(0.5);
        for (int j = 0; j < 2 * K * nt; ++j) {
            put(row(), j, -1.0);
            rhs.push_back(0.0);
        }
        prog.cones.push_back({conic::ConeType::rotated_soc, 2 + 2 * K * nt});
    }

    prog.rhs = Eigen::Map<RVec>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    prog.constraints.resize(prog.rhs.size(), n);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());

    prog.var_names.reserve(n);
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < nt; ++i) prog.var_names.push_back("w_re_" + std::to_string(k) + "_" + std::to_string(i));
    for (int k = 0; k < K; ++k)
        for (int i = 0; i < nt; ++i) prog.var_names.push_back("w_im_" + std::to_string(k) + "_" + std::to_string(i));
    for (int i = 0; i < ns; ++i) prog.var_names.push_back("phi_re_" + std::to_string(i));
    for (int i = 0; i < ns; ++i) prog.var_names.push_back("phi_im_" + std::to_string(i));
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            if (l != k) prog.var_names.push_back("t_" + std::to_string(k) + "_" + std::to_string(l));
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            if (l != k) prog.var_names.push_back("tbar_" + std::to_string(k) + "_" + std::to_string(l));
    prog.var_names.push_back("tau");

    prog.validate();
    return prog;
}

DesignPoint initialize(const ProblemInstance& inst, std::uint64_t rng_seed,
                       const ScaSettings& settings) {
    settings.validate();
    inst.validate();
    for (int attempt = 0; attempt < settings.init_retries; ++attempt) {
        Rng rng = Rng::stream(rng_seed, static_cast<std::uint64_t>(attempt), 1000);
        CVec phi(inst.num_irs_elements);
        for (int i = 0; i < inst.num_irs_elements; ++i)
            phi(i) = std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI));
        const auto w = baselines::w_update(inst, phi, settings.solver);
        if (w.status == conic::SolveStatus::optimal) {
            DesignPoint dp;
            dp.beamformers = w.beamformers;
            dp.irs_coeffs = phi;
            dp.unit_modulus = true;
            return dp;
        }
    }
    throw initialization_infeasible(
        "no feasible beamformer found for any sampled initial phase vector");
}

namespace {

double max_modulus_gap(const CVec& phi) {
    double gap = 0.0;
    for (Eigen::Index i = 0; i < phi.size(); ++i)
        gap = std::max(gap, std::abs(std::abs(phi(i)) - 1.0));
    return gap;
}

} // namespace

ScaResult run(const ProblemInstance& inst, const ScaSettings& settings, std::uint64_t rng_seed) {
    settings.validate();
    ScaResult out;
    DesignPoint dp = initialize(inst, rng_seed, settings);
    const SubproblemLayout lay = SubproblemLayout::of(inst);

    double cum = 0.0;
    auto record = [&](int iter, double solve_s) {
        const auto rep = sysmodel::check_feasibility(inst, dp, 1e-6, settings.tol_mod);
        ScaIterRow r;
        r.iter = iter;
        r.power = sysmodel::transmit_power(dp);
        r.penalized_objective = penalized_objective(dp, settings.xi);
        r.min_sinr_margin = rep.sinr_margin.minCoeff();
        r.max_modulus_gap = rep.max_modulus_violation;
        r.solve_seconds = solve_s;
        r.cum_seconds = cum;
        out.trace.rows.push_back(r);
    };
    record(0, 0.0);

    double prev = penalized_objective(dp, settings.xi);
    for (int iter = 1; iter <= settings.max_iters; ++iter) {
        const auto ep = ExpansionPoint::make(inst, dp);
        const auto prog = assemble_subproblem(inst, ep, settings.xi);
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = conic::solve(prog, settings.solver);
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cum += dt;
        if (res.status != conic::SolveStatus::optimal) {
            out.status = RunStatus::solver_failure;
            break;
        }
        dp = lay.base.unpack(res.x.head(lay.base.base_dim()));
        dp.unit_modulus = false;
        record(iter, dt);

        const double obj = penalized_objective(dp, settings.xi);
        const double rel = std::abs(obj - prev) / std::max(1.0, std::abs(prev));
        prev = obj;
        if (rel < settings.rel_obj_tol) {
            out.trace.converged = true;
            break;
        }
    }

    if (out.status == RunStatus::ok) {
        const double gap = max_modulus_gap(dp.irs_coeffs);
        if (gap > settings.tol_mod && settings.scale_and_resolve) {
            CVec projected(dp.irs_coeffs.size());
            for (Eigen::Index i = 0; i < projected.size(); ++i) {
                const double mod = std::abs(dp.irs_coeffs(i));
                projected(i) = (mod == 0.0) ? cplx(1.0, 0.0) : dp.irs_coeffs(i) / mod;
            }
            out.trace.projected = true;
            const auto w = baselines::w_update(inst, projected, settings.solver);
            if (w.status == conic::SolveStatus::optimal) {
                dp.beamformers = w.beamformers;
                dp.irs_coeffs = projected;
                dp.unit_modulus = true;
            } else {
                // never return an unflagged infeasible answer
                out.trace.resolve_infeasible = true;
                dp.unit_modulus = false;
            }
        } else {
            dp.unit_modulus = gap <= settings.tol_mod;
        }
    }

    out.point = dp;
    out.feasible = sysmodel::check_feasibility(inst, dp, 1e-6, settings.tol_mod).feasible;
    return out;
}

void ScaTrace::write_csv(std::ostream& os, const std::string& algorithm) const {
    os << "# irsopt-trace 1\n";
    os << "iter,algorithm,power,penalized_objective,min_sinr_margin,max_modulus_gap,"
          "solve_time_s,cum_time_s\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.10g,%.10g,%.10g,%.10g,%.6g,%.6g\n", r.iter,
                      algorithm.c_str(), r.power, r.penalized_objective, r.min_sinr_margin,
                      r.max_modulus_gap, r.solve_seconds, r.cum_seconds);
        os << buf;
    }
}

} // namespace irsopt::sca
