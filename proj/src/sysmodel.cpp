#include "irsopt/sysmodel.hpp"

#include <cmath>
#include <fstream>

namespace irsopt::sysmodel {

void DesignPoint::validate(const ProblemInstance& inst, double tol_mod) const {
    if (beamformers.size() != static_cast<Eigen::Index>(inst.num_users) * inst.num_bs_antennas)
        throw std::invalid_argument("beamformer length does not match the instance");
    if (irs_coeffs.size() != inst.num_irs_elements)
        throw std::invalid_argument("IRS coefficient length does not match the instance");
    if (!beamformers.allFinite() || !irs_coeffs.allFinite())
        throw std::invalid_argument("design point entries must be finite");
    for (Eigen::Index i = 0; i < irs_coeffs.size(); ++i) {
        const double mod = std::abs(irs_coeffs(i));
        if (unit_modulus ? std::abs(mod - 1.0) > tol_mod : mod > 1.0 + tol_mod)
            throw std::invalid_argument("IRS coefficients violate the claimed modulus contract");
    }
}

CRowVec effective_channel(const ProblemInstance& inst, const CVec& irs_coeffs, int k) {
    if (k < 0 || k >= inst.num_users) throw std::invalid_argument("user index out of range");
    if (irs_coeffs.size() != inst.num_irs_elements)
        throw std::invalid_argument("IRS coefficient length does not match the instance");
    // h_sk diag(phi) H_ts == (h_sk .* phi^T) H_ts
    CRowVec scattered =
        (inst.irs_user.row(k).array() * irs_coeffs.transpose().array()).matrix() * inst.bs_irs;
    return inst.bs_user.row(k) + scattered;
}

double sinr(const ProblemInstance& inst, const DesignPoint& dp, int k) {
    dp.validate(inst, std::numeric_limits<double>::infinity());
    const CRowVec g = effective_channel(inst, dp.irs_coeffs, k);
    double signal = 0.0, interference = 0.0;
    for (int l = 0; l < inst.num_users; ++l) {
        const double p = std::norm(cplx(g * dp.user(l, inst.num_bs_antennas)));
        if (l == k)
            signal = p;
        else
            interference += p;
    }
    return signal / (1.0 + interference);
}

double transmit_power(const DesignPoint& dp) { return dp.beamformers.squaredNorm(); }

FeasibilityReport check_feasibility(const ProblemInstance& inst, const DesignPoint& dp,
                                    double tol_sinr, double tol_mod) {
    if (tol_sinr < 0.0 || tol_mod < 0.0) throw std::invalid_argument("tolerances must be >= 0");
    FeasibilityReport rep;
    rep.sinr.resize(inst.num_users);
    rep.sinr_margin.resize(inst.num_users);
    bool sinr_ok = true;
    for (int k = 0; k < inst.num_users; ++k) {
        rep.sinr(k) = sinr(inst, dp, k);
        rep.sinr_margin(k) = rep.sinr(k) - inst.sinr_targets(k);
        if (rep.sinr_margin(k) < -tol_sinr * inst.sinr_targets(k)) sinr_ok = false;
    }
    rep.max_modulus_violation = 0.0;
    for (Eigen::Index i = 0; i < dp.irs_coeffs.size(); ++i)
        rep.max_modulus_violation =
            std::max(rep.max_modulus_violation, std::abs(std::abs(dp.irs_coeffs(i)) - 1.0));
    rep.feasible = sinr_ok && rep.max_modulus_violation <= tol_mod;
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

void write_cvec(std::ostream& os, const char* tag, const CVec& v) {
    os << tag << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", v(i).real(), v(i).imag());
        os << buf;
    }
    os << '\n';
}

CVec read_cvec(std::istream& is, const std::string& expected_tag) {
    std::string tag;
    Eigen::Index n = 0;
    if (!(is >> tag >> n) || tag != expected_tag)
        throw std::runtime_error("design format: expected vector tag '" + expected_tag + "'");
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::string cell;
        if (!(is >> cell)) throw std::runtime_error("design format: truncated vector");
        double re = 0, im = 0;
        if (std::sscanf(cell.c_str(), "%lf,%lf", &re, &im) != 2)
            throw std::runtime_error("design format: bad complex entry '" + cell + "'");
        v(i) = cplx(re, im);
    }
    return v;
}

} // namespace

void write_design(std::ostream& os, const DesignPoint& dp) {
    os << "irsopt-design 1\n";
    os << "contract " << (dp.unit_modulus ? "unit-modulus" : "relaxed") << '\n';
    write_cvec(os, "beamformers", dp.beamformers);
    write_cvec(os, "irs_coeffs", dp.irs_coeffs);
}

DesignPoint read_design(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "irsopt-design" || version != 1)
        throw std::runtime_error("not an irsopt-design v1 file");
    DesignPoint dp;
    std::string key, contract;
    if (!(is >> key >> contract) || key != "contract")
        throw std::runtime_error("design format: expected 'contract'");
    dp.unit_modulus = (contract == "unit-modulus");
    dp.beamformers = read_cvec(is, "beamformers");
    dp.irs_coeffs = read_cvec(is, "irs_coeffs");
    return dp;
}

void save_design(const std::string& path, const DesignPoint& dp) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_design(os, dp);
}

DesignPoint load_design(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_design(is);
}

} // namespace irsopt::sysmodel
