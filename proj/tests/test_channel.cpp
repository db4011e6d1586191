#include <doctest.h>

#include <cmath>
#include <sstream>

#include "irsopt/channel.hpp"

using namespace irsopt;
using namespace irsopt::channel;

TEST_CASE("pathloss_db reference values") {
    CHECK(pathloss_db(1.0, 2.2, 30.0) == doctest::Approx(30.0));
    CHECK(pathloss_db(100.0, 2.2, 30.0) == doctest::Approx(74.0));
    CHECK(pathloss_db(10.0, 3.6, 30.0) == doctest::Approx(66.0));
    CHECK_THROWS_AS(pathloss_db(0.0, 2.2, 30.0), std::invalid_argument);
    CHECK_THROWS_AS(pathloss_db(-1.0, 2.2, 30.0), std::invalid_argument);
}

TEST_CASE("pathloss_db monotone in distance") {
    double prev = -1e300;
    for (double d = 0.5; d < 1e4; d *= 1.7) {
        const double pl = pathloss_db(d, 2.2, 30.0);
        CHECK(pl > prev);
        prev = pl;
    }
}

TEST_CASE("noise_power_dbm reference values") {
    CHECK(noise_power_dbm(-174.0, 20e6) == doctest::Approx(-174.0 + 73.0103).epsilon(1e-6));
    CHECK(noise_power_dbm(-174.0, 1.0) == doctest::Approx(-174.0));
    CHECK(noise_power_dbm(0.0, 10.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(noise_power_dbm(-174.0, 0.0), std::invalid_argument);
}

TEST_CASE("place_users stays in the disk and respects separation") {
    ScenarioGeometry geom;
    const auto one = place_users(geom, 1, 7);
    REQUIRE(one.size() == 1);
    CHECK((one[0] - geom.user_disk_center).norm() <= geom.user_disk_radius + 1e-12);

    const auto two = place_users(geom, 2, 11);
    REQUIRE(two.size() == 2);
    CHECK((two[0] - two[1]).norm() >= geom.user_separation() - 1e-12);
    for (const auto& p : two) CHECK((p - geom.user_disk_center).norm() <= geom.user_disk_radius + 1e-12);
}

TEST_CASE("place_users rejects geometrically impossible configs") {
    ScenarioGeometry geom;
    geom.user_disk_radius = 0.1;
    geom.min_user_separation_m = 0.3;
    CHECK_THROWS_AS(place_users(geom, 50, 3), std::invalid_argument);
}

TEST_CASE("placement is deterministic per seed") {
    ScenarioGeometry geom;
    const auto a = place_users(geom, 4, 42);
    const auto b = place_users(geom, 4, 42);
    for (int k = 0; k < 4; ++k) CHECK((a[k] - b[k]).norm() == 0.0);
    const auto c = place_users(geom, 4, 43);
    bool differs = false;
    for (int k = 0; k < 4; ++k) differs |= (a[k] - c[k]).norm() > 0.0;
    CHECK(differs);
}

namespace {

ProblemInstance make_default_instance(std::uint64_t seed, int K = 2, int Nt = 2, int Ns = 4) {
    ScenarioGeometry geom;
    FadingParams fading;
    RVec gamma = RVec::Constant(K, 10.0);
    return generate_instance(geom, fading, K, Nt, Ns, gamma, seed);
}

} // namespace

TEST_CASE("generate_instance is deterministic") {
    const auto a = make_default_instance(5);
    const auto b = make_default_instance(5);
    CHECK((a.bs_irs - b.bs_irs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.bs_user - b.bs_user).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.irs_user - b.irs_user).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Rayleigh limit: zero Rician factor gives zero-mean entries") {
    ScenarioGeometry geom;
    FadingParams fading;
    fading.rician_bs_irs = fading.rician_irs_user = fading.rician_bs_user = 0.0;
    RVec gamma = RVec::Constant(1, 1.0);

    // Empirical mean over many draws of a fixed entry, normalized by its std.
    const int draws = 10000;
    cplx mean = 0.0;
    double mean_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto inst = generate_instance(geom, fading, 1, 1, 3, gamma, 1000 + i);
        mean += inst.irs_user(0, 0);
        mean_sq += std::norm(inst.irs_user(0, 0));
    }
    mean /= static_cast<double>(draws);
    mean_sq /= static_cast<double>(draws);
    const double se = std::sqrt(mean_sq / draws);
    CHECK(std::abs(mean.real()) <= 3.0 * se);
    CHECK(std::abs(mean.imag()) <= 3.0 * se);
}

TEST_CASE("LoS limit: huge Rician factor pins the magnitude") {
    ScenarioGeometry geom;
    FadingParams fading;
    fading.rician_bs_irs = fading.rician_irs_user = fading.rician_bs_user = 1e6;
    RVec gamma = RVec::Constant(1, 1.0);
    const auto inst = generate_instance(geom, fading, 1, 2, 4, gamma, 9);

    // Unit-modulus LoS entries times a common amplitude: all magnitudes equal
    // within 1%.
    const double ref = std::abs(inst.bs_irs(0, 0));
    for (Eigen::Index i = 0; i < inst.bs_irs.rows(); ++i)
        for (Eigen::Index j = 0; j < inst.bs_irs.cols(); ++j)
            CHECK(std::abs(inst.bs_irs(i, j)) == doctest::Approx(ref).epsilon(0.01));
}

TEST_CASE("Rician small-scale fading has unit mean-square magnitude") {
    // kappa = 2: E|entry|^2 should be 1 once the path loss is divided out.
    ScenarioGeometry geom;
    FadingParams fading;
    RVec gamma = RVec::Constant(1, 1.0);

    // Reference amplitude from the LoS-only limit of the same link.
    FadingParams los_only = fading;
    los_only.rician_irs_user = 1e12;
    const auto ref_inst = generate_instance(geom, fading, 1, 1, 4, gamma, 77);
    (void)ref_inst;

    double acc = 0.0;
    int count = 0;
    const int draws = 7000;  // 7000 draws x 4 entries > 1e4 samples
    for (int i = 0; i < draws; ++i) {
        const auto inst = generate_instance(geom, fading, 1, 1, 4, gamma, 20000 + i);
        const auto los = generate_instance(geom, los_only, 1, 1, 4, gamma, 20000 + i);
        for (int j = 0; j < 4; ++j) {
            const double amp = std::abs(los.irs_user(0, j));
            acc += std::norm(inst.irs_user(0, j)) / (amp * amp);
            ++count;
        }
    }
    CHECK(acc / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("scaling consistency: +6.0206 dB noise halves normalized entries") {
    ScenarioGeometry geom;
    FadingParams fading;
    RVec gamma = RVec::Constant(2, 5.0);
    const auto base = generate_instance(geom, fading, 2, 2, 4, gamma, 31);

    ScenarioGeometry loud = geom;
    loud.noise_psd_dbm_per_hz += 20.0 * std::log10(2.0);  // sigma doubles
    const auto scaled = generate_instance(loud, fading, 2, 2, 4, gamma, 31);

    CHECK((scaled.bs_irs * 2.0 - base.bs_irs).cwiseAbs().maxCoeff() <= 1e-12 * base.bs_irs.cwiseAbs().maxCoeff());
    CHECK((scaled.bs_user * 2.0 - base.bs_user).cwiseAbs().maxCoeff() <= 1e-12 * base.bs_user.cwiseAbs().maxCoeff());
    // irs_user is unnormalized and must be untouched
    CHECK((scaled.irs_user - base.irs_user).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perfect-square requirement only binds when LoS is active") {
    ScenarioGeometry geom;
    FadingParams fading;
    RVec gamma = RVec::Constant(1, 1.0);
    CHECK_THROWS_AS(generate_instance(geom, fading, 1, 1, 3, gamma, 1), std::invalid_argument);

    FadingParams rayleigh;
    rayleigh.rician_bs_irs = rayleigh.rician_irs_user = rayleigh.rician_bs_user = 0.0;
    CHECK_NOTHROW(generate_instance(geom, rayleigh, 1, 1, 3, gamma, 1));
}

TEST_CASE("instance text round-trip is exact") {
    const auto inst = make_default_instance(123);
    std::stringstream ss;
    write_instance(ss, inst);
    const auto back = read_instance(ss);
    CHECK(back.num_users == inst.num_users);
    CHECK((back.bs_irs - inst.bs_irs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.bs_user - inst.bs_user).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.irs_user - inst.irs_user).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.sinr_targets - inst.sinr_targets).cwiseAbs().maxCoeff() == 0.0);
}
