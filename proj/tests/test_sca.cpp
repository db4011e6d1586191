#include <doctest.h>

#include <cmath>
#include <sstream>

#include "irsopt/baselines.hpp"
#include "irsopt/rng.hpp"
#include "irsopt/sca.hpp"

using namespace irsopt;
using namespace irsopt::sca;
using bounds::ExpansionPoint;
using sysmodel::DesignPoint;

namespace {

ProblemInstance random_instance(int K, int Nt, int Ns, Rng& rng, double gamma = 1.0) {
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

DesignPoint random_design(const ProblemInstance& inst, Rng& rng, bool unit_mod = true) {
    DesignPoint dp;
    dp.beamformers.resize(static_cast<Eigen::Index>(inst.num_users) * inst.num_bs_antennas);
    dp.irs_coeffs.resize(inst.num_irs_elements);
    for (Eigen::Index i = 0; i < dp.beamformers.size(); ++i) dp.beamformers(i) = rng.cnormal();
    for (Eigen::Index i = 0; i < dp.irs_coeffs.size(); ++i)
        dp.irs_coeffs(i) = unit_mod ? std::polar(1.0, rng.uniform(0.0, 2.0 * M_PI))
                                    : 0.7 * rng.cnormal();
    dp.unit_modulus = unit_mod;
    return dp;
}

int expected_vars(int K, int Nt, int Ns) { return 2 * (K * Nt + Ns + K * (K - 1)) + 1; }
int expected_cones(int K, int Ns) { return K + 4 * K * (K - 1) + Ns + 1; }

} // namespace

TEST_CASE("penalized objective") {
    DesignPoint dp;
    dp.beamformers = CVec::Zero(4);
    dp.irs_coeffs = CVec::Constant(8, cplx(1.0, 0.0));
    CHECK(penalized_objective(dp, 0.001) == doctest::Approx(-0.008));
    CHECK(penalized_objective(dp, 0.0) == doctest::Approx(sysmodel::transmit_power(dp)));

    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        DesignPoint r;
        r.beamformers.resize(6);
        r.irs_coeffs.resize(5);
        for (int i = 0; i < 6; ++i) r.beamformers(i) = rng.cnormal();
        for (int i = 0; i < 5; ++i) r.irs_coeffs(i) = rng.cnormal();
        const double direct =
            r.beamformers.squaredNorm() - 0.37 * r.irs_coeffs.squaredNorm();
        CHECK(penalized_objective(r, 0.37) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("penalized objective floor under the relaxed modulus constraint") {
    Rng rng(5);
    const int ns = 7;
    for (int t = 0; t < 50; ++t) {
        DesignPoint dp;
        dp.beamformers.resize(3);
        dp.irs_coeffs.resize(ns);
        for (int i = 0; i < 3; ++i) dp.beamformers(i) = rng.cnormal();
        for (int i = 0; i < ns; ++i)
            dp.irs_coeffs(i) = std::polar(rng.uniform(), rng.uniform(0.0, 2.0 * M_PI));
        CHECK(penalized_objective(dp, 0.01) >= -0.01 * ns - 1e-12);
    }
}

TEST_CASE("subproblem structural counts") {
    Rng rng(7);
    struct Grid {
        int k, nt, ns;
    };
    const Grid grid[] = {{4, 4, 100}, {6, 6, 64}, {1, 2, 4}, {1, 1, 1}, {2, 2, 4}, {4, 2, 16}};
    for (const auto& g : grid) {
        const auto inst = random_instance(g.k, g.nt, g.ns, rng, 2.0);
        const auto dp = random_design(inst, rng);
        const auto ep = ExpansionPoint::make(inst, dp);
        const auto prog = assemble_subproblem(inst, ep, 1e-3);
        CHECK(prog.num_vars == expected_vars(g.k, g.nt, g.ns));
        CHECK(static_cast<int>(prog.cones.size()) == expected_cones(g.k, g.ns));
    }
    // the documented examples
    CHECK(expected_vars(4, 4, 100) == 257);
    CHECK(expected_cones(4, 100) == 153);
    CHECK(expected_vars(6, 6, 64) == 261);
    CHECK(expected_cones(6, 64) == 191);
}

TEST_CASE("compiled cones agree with the direct surrogate evaluators") {
    Rng rng(11);
    const int K = 3, Nt = 2, Ns = 4;
    const auto inst = random_instance(K, Nt, Ns, rng, 1.7);
    const auto epd = random_design(inst, rng);
    const auto ep = ExpansionPoint::make(inst, epd);
    const double xi = 1e-3;
    const auto prog = assemble_subproblem(inst, ep, xi);
    const auto lay = SubproblemLayout::of(inst);

    for (int trial = 0; trial < 5; ++trial) {
        const auto dp = random_design(inst, rng, false);
        RVec x = RVec::Zero(lay.dim());
        x.head(lay.base.base_dim()) = lay.base.pack(dp);
        Rng aux(100 + trial);
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) {
                if (l == k) continue;
                x(lay.t_index(k, l)) = aux.normal();
                x(lay.tbar_index(k, l)) = aux.normal();
            }
        x(lay.tau_index()) = 1.0 + aux.uniform();

        const RVec s = prog.rhs - prog.constraints * x;

        // objective: tau - xi (2 Re{(phi_n)^H phi} - ||phi_n||^2)
        const double lin = 2.0 * (ep.phi_prev.dot(dp.irs_coeffs)).real();
        CHECK(prog.objective.dot(x) + prog.objective_offset ==
              doctest::Approx(x(lay.tau_index()) - xi * (lin - ep.phi_prev.squaredNorm()))
                  .epsilon(1e-10));

        int row = 0, cone_idx = 0;
        auto rsoc_residual = [&](int dim) {
            const double u = s(row), v = s(row + 1);
            const double z2 = s.segment(row + 2, dim - 2).squaredNorm();
            row += dim;
            ++cone_idx;
            return 2.0 * u * v - z2;
        };

        for (int k = 0; k < K; ++k) {
            const double gamma = inst.sinr_targets(k);
            double aux_sq = 0.0;
            for (int l = 0; l < K; ++l) {
                if (l == k) continue;
                aux_sq += x(lay.t_index(k, l)) * x(lay.t_index(k, l)) +
                          x(lay.tbar_index(k, l)) * x(lay.tbar_index(k, l));
            }
            const double expect =
                bounds::signal_lower_bound(inst, dp, ep, k) / gamma - 1.0 - aux_sq;
            CHECK(rsoc_residual(prog.cones[cone_idx].dim) ==
                  doctest::Approx(expect).epsilon(1e-8).scale(1.0));
        }
        for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l) {
                if (l == k) continue;
                const double t = x(lay.t_index(k, l));
                const double tb = x(lay.tbar_index(k, l));
                const double vals[4] = {
                    t - bounds::cross_re_plus(inst, dp, ep, k, l),
                    t - bounds::cross_re_minus(inst, dp, ep, k, l),
                    tb - bounds::cross_im_plus(inst, dp, ep, k, l),
                    tb - bounds::cross_im_minus(inst, dp, ep, k, l)};
                for (int q = 0; q < 4; ++q)
                    CHECK(rsoc_residual(prog.cones[cone_idx].dim) ==
                          doctest::Approx(vals[q]).epsilon(1e-8).scale(1.0));
            }
        for (int i = 0; i < Ns; ++i) {
            CHECK(s(row) == doctest::Approx(1.0));
            CHECK(s(row + 1) == doctest::Approx(dp.irs_coeffs(i).real()).scale(1.0));
            CHECK(s(row + 2) == doctest::Approx(dp.irs_coeffs(i).imag()).scale(1.0));
            row += 3;
            ++cone_idx;
        }
        CHECK(rsoc_residual(prog.cones[cone_idx].dim) ==
              doctest::Approx(x(lay.tau_index()) - dp.beamformers.squaredNorm())
                  .epsilon(1e-8)
                  .scale(1.0));
    }
}

TEST_CASE("initialization: unit modulus, feasible, deterministic") {
    Rng rng(13);
    const auto inst = random_instance(2, 2, 4, rng, 2.0);
    const auto a = initialize(inst, 42);
    for (Eigen::Index i = 0; i < a.irs_coeffs.size(); ++i)
        CHECK(std::abs(a.irs_coeffs(i)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sysmodel::check_feasibility(inst, a).feasible);

    const auto b = initialize(inst, 42);
    CHECK((a.beamformers - b.beamformers).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.irs_coeffs - b.irs_coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run: monotone descent, convergence, feasible unit-modulus exit") {
    Rng rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        const auto inst = random_instance(2, 2, 4, rng, 3.0);
        ScaSettings st;
        const auto out = run(inst, st, 500 + trial);
        REQUIRE(out.status == RunStatus::ok);
        CHECK(out.feasible);
        CHECK(out.point.unit_modulus);
        REQUIRE(out.trace.rows.size() >= 2);
        for (std::size_t i = 1; i < out.trace.rows.size(); ++i)
            CHECK(out.trace.rows[i].penalized_objective <=
                  out.trace.rows[i - 1].penalized_objective + 1e-7);
        // the relaxation should not be worse than the all-ones-phase start
        CHECK(out.trace.rows.back().power <= out.trace.rows.front().power + 1e-7);
    }
}

TEST_CASE("level-set bound along the iterates") {
    Rng rng(19);
    const auto inst = random_instance(2, 2, 4, rng, 2.0);
    ScaSettings st;
    const auto out = run(inst, st, 7);
    REQUIRE(out.status == RunStatus::ok);
    const double f0 = out.trace.rows.front().penalized_objective;
    const double bound = f0 + st.xi * inst.num_irs_elements;
    for (const auto& r : out.trace.rows) CHECK(r.power <= bound + 1e-7);
}

TEST_CASE("previous iterate stays feasible for the next subproblem") {
    Rng rng(23);
    const auto inst = random_instance(2, 2, 3, rng, 2.0);
    const auto start = initialize(inst, 3);
    const auto lay = SubproblemLayout::of(inst);

    // one SCA move
    auto ep = ExpansionPoint::make(inst, start);
    auto prog = assemble_subproblem(inst, ep, 1e-3);
    const auto res = conic::solve(prog);
    REQUIRE(res.status == conic::SolveStatus::optimal);
    const DesignPoint moved = lay.base.unpack(res.x.head(lay.base.base_dim()));

    // compile at the moved point and plug the moved point itself in, with
    // the aux variables at their tight values
    ep = ExpansionPoint::make(inst, moved);
    prog = assemble_subproblem(inst, ep, 1e-3);
    RVec x = RVec::Zero(lay.dim());
    x.head(lay.base.base_dim()) = lay.base.pack(moved);
    for (int k = 0; k < inst.num_users; ++k) {
        const CRowVec g = sysmodel::effective_channel(inst, moved.irs_coeffs, k);
        for (int l = 0; l < inst.num_users; ++l) {
            if (l == k) continue;
            const cplx gw = g * moved.user(l, inst.num_bs_antennas);
            x(lay.t_index(k, l)) = std::abs(gw.real());
            x(lay.tbar_index(k, l)) = std::abs(gw.imag());
        }
    }
    x(lay.tau_index()) = moved.beamformers.squaredNorm();

    const RVec s = prog.rhs - prog.constraints * x;
    int row = 0;
    for (const auto& cone : prog.cones) {
        if (cone.type == conic::ConeType::rotated_soc) {
            const double u = s(row), v = s(row + 1);
            const double z2 = s.segment(row + 2, cone.dim - 2).squaredNorm();
            CHECK(2.0 * u * v - z2 >= -1e-7);
            CHECK(u >= -1e-9);
        } else {
            CHECK(s(row) - s.segment(row + 1, cone.dim - 1).norm() >= -1e-9);
        }
        row += cone.dim;
    }
}

TEST_CASE("tiny single-user instance matches the exhaustive oracle") {
    // K=1, N_t=1, N_s=2, hand-built channels
    ProblemInstance inst;
    inst.num_users = 1;
    inst.num_bs_antennas = 1;
    inst.num_irs_elements = 2;
    inst.bs_user = CMat::Constant(1, 1, cplx(0.4, -0.2));
    inst.irs_user.resize(1, 2);
    inst.irs_user << cplx(0.9, 0.1), cplx(-0.3, 0.6);
    inst.bs_irs.resize(2, 1);
    inst.bs_irs << cplx(0.5, 0.5), cplx(0.2, -0.7);
    inst.sinr_targets = RVec::Constant(1, 1.0);

    // exhaustive phase grid + closed-form single-user beamformer
    double best = std::numeric_limits<double>::infinity();
    const int grid = 720;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            CVec phi(2);
            phi << std::polar(1.0, 2.0 * M_PI * i / grid),
                std::polar(1.0, 2.0 * M_PI * j / grid);
            const CRowVec g = sysmodel::effective_channel(inst, phi, 0);
            best = std::min(best, inst.sinr_targets(0) / g.squaredNorm());
        }

    ScaSettings st;
    const auto out = run(inst, st, 11);
    REQUIRE(out.status == RunStatus::ok);
    CHECK(out.feasible);
    const double power = sysmodel::transmit_power(out.point);
    CHECK(power <= best * 1.01 + 1e-12);
    CHECK(power >= best * 0.99 - 1e-12);  // cannot beat the exhaustive optimum
}

TEST_CASE("trace CSV schema") {
    Rng rng(29);
    const auto inst = random_instance(1, 1, 1, rng, 1.0);
    ScaSettings st;
    st.max_iters = 2;
    const auto out = run(inst, st, 1);
    std::stringstream ss;
    out.trace.write_csv(ss, "sca");
    std::string line;
    std::getline(ss, line);
    CHECK(line == "# irsopt-trace 1");
    std::getline(ss, line);
    CHECK(line ==
          "iter,algorithm,power,penalized_objective,min_sinr_margin,max_modulus_gap,"
          "solve_time_s,cum_time_s");
    int rows = 0;
    while (std::getline(ss, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(out.trace.rows.size()));
}

TEST_CASE("settings validation") {
    ScaSettings st;
    st.xi = 0.0;
    CHECK_THROWS_AS(st.validate(), std::invalid_argument);
    st = ScaSettings{};
    st.rel_obj_tol = -1.0;
    CHECK_THROWS_AS(st.validate(), std::invalid_argument);
    st = ScaSettings{};
    st.max_iters = 0;
    CHECK_THROWS_AS(st.validate(), std::invalid_argument);
}
