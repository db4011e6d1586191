#include "irsopt/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace irsopt::channel {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

std::uint64_t link_stream_id(int link) { return static_cast<std::uint64_t>(link); }
constexpr int kLinkPlacement = 0;
constexpr int kLinkBsIrs = 1;
constexpr int kLinkBsUser = 2;
constexpr int kLinkIrsUser = 3;

} // namespace

double ScenarioGeometry::wavelength() const { return kSpeedOfLight / carrier_freq_hz; }
double ScenarioGeometry::bs_spacing() const {
    return bs_antenna_spacing_m > 0.0 ? bs_antenna_spacing_m : 0.5 * wavelength();
}
double ScenarioGeometry::irs_spacing() const {
    return irs_element_spacing_m > 0.0 ? irs_element_spacing_m : 0.5 * wavelength();
}
double ScenarioGeometry::user_separation() const {
    return min_user_separation_m > 0.0 ? min_user_separation_m : 2.0 * wavelength();
}

void ScenarioGeometry::validate(int num_users) const {
    if (user_disk_radius <= 0.0) throw std::invalid_argument("user_disk_radius must be > 0");
    if (carrier_freq_hz <= 0.0) throw std::invalid_argument("carrier_freq_hz must be > 0");
    if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth_hz must be > 0");
    if (bs_antenna_spacing_m < 0.0 || irs_element_spacing_m < 0.0 || min_user_separation_m < 0.0)
        throw std::invalid_argument("spacings must be >= 0");
    if (num_users < 1) throw std::invalid_argument("need at least one user");
    // Area-based pigeonhole: K circles of radius sep/2 must fit in a disk of
    // radius R + sep/2.
    const double sep = user_separation();
    const double grown = user_disk_radius + 0.5 * sep;
    if (num_users * 0.25 * sep * sep > grown * grown)
        throw std::invalid_argument("user disk cannot host the requested users at the minimum separation");
}

void FadingParams::validate() const {
    for (double k : {rician_bs_irs, rician_irs_user, rician_bs_user}) {
        if (!(k >= 0.0) || !std::isfinite(k))
            throw std::invalid_argument("Rician factors must be finite and >= 0");
    }
    for (double e : {pathloss_exp_bs_irs, pathloss_exp_irs_user, pathloss_exp_bs_user}) {
        if (!(e > 0.0)) throw std::invalid_argument("path-loss exponents must be > 0");
    }
}

double FadingParams::capped(double kappa) const { return std::min(kappa, kappa_cap); }

void ProblemInstance::validate() const {
    if (num_users < 1 || num_bs_antennas < 1 || num_irs_elements < 1)
        throw std::invalid_argument("instance dimensions must be >= 1");
    if (bs_irs.rows() != num_irs_elements || bs_irs.cols() != num_bs_antennas)
        throw std::invalid_argument("bs_irs dimensions inconsistent");
    if (bs_user.rows() != num_users || bs_user.cols() != num_bs_antennas)
        throw std::invalid_argument("bs_user dimensions inconsistent");
    if (irs_user.rows() != num_users || irs_user.cols() != num_irs_elements)
        throw std::invalid_argument("irs_user dimensions inconsistent");
    if (sinr_targets.size() != num_users)
        throw std::invalid_argument("sinr_targets length inconsistent");
    for (int k = 0; k < num_users; ++k)
        if (!(sinr_targets(k) > 0.0)) throw std::invalid_argument("SINR targets must be > 0");
    if (!bs_irs.allFinite() || !bs_user.allFinite() || !irs_user.allFinite())
        throw std::invalid_argument("channel entries must be finite");
}

std::vector<Eigen::Vector3d> place_users(const ScenarioGeometry& geom, int num_users,
                                         std::uint64_t rng_seed) {
    geom.validate(num_users);
    Rng rng = Rng::stream(rng_seed, 0, link_stream_id(kLinkPlacement));
    const double sep2 = geom.user_separation() * geom.user_separation();

    const int max_restarts = 200;
    const int max_draws_per_user = 2000;
    for (int restart = 0; restart < max_restarts; ++restart) {
        std::vector<Eigen::Vector3d> placed;
        placed.reserve(num_users);
        bool ok = true;
        for (int k = 0; k < num_users && ok; ++k) {
            bool found = false;
            for (int attempt = 0; attempt < max_draws_per_user; ++attempt) {
                // uniform on the disk
                const double r = geom.user_disk_radius * std::sqrt(rng.uniform());
                const double ang = rng.uniform(0.0, 2.0 * M_PI);
                Eigen::Vector3d p = geom.user_disk_center;
                p.x() += r * std::cos(ang);
                p.y() += r * std::sin(ang);
                bool clear = true;
                for (const auto& q : placed) {
                    if ((p - q).squaredNorm() < sep2) {
                        clear = false;
                        break;
                    }
                }
                if (clear) {
                    placed.push_back(p);
                    found = true;
                    break;
                }
            }
            ok = found;
        }
        if (ok) return placed;
    }
    throw placement_failure("could not place users at the required separation");
}

double pathloss_db(double distance_m, double exponent, double ref_db) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be > 0");
    return ref_db + 10.0 * exponent * std::log10(distance_m);
}

double noise_power_dbm(double psd_dbm_per_hz, double bandwidth_hz) {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
    return psd_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
}

namespace {

/// Far-field steering vector: element-wise phase of a planar wave leaving
/// (or arriving from) direction `dir`, with element offsets relative to the
/// array center.
CVec steering(const std::vector<Eigen::Vector3d>& offsets, const Eigen::Vector3d& dir,
              double wavelength) {
    CVec a(static_cast<Eigen::Index>(offsets.size()));
    const double k0 = 2.0 * M_PI / wavelength;
    for (std::size_t i = 0; i < offsets.size(); ++i)
        a(static_cast<Eigen::Index>(i)) = std::polar(1.0, k0 * dir.dot(offsets[i]));
    return a;
}

std::vector<Eigen::Vector3d> ula_offsets(int n, double spacing) {
    std::vector<Eigen::Vector3d> off(n);
    for (int i = 0; i < n; ++i)
        off[i] = Eigen::Vector3d(0.0, (i - 0.5 * (n - 1)) * spacing, 0.0);
    return off;
}

std::vector<Eigen::Vector3d> upa_offsets(int n, double spacing) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (side * side != n)
        throw std::invalid_argument("IRS element count must be a perfect square when LoS is active");
    std::vector<Eigen::Vector3d> off(n);
    for (int i = 0; i < n; ++i) {
        const int ix = i % side;
        const int iz = i / side;
        off[i] = Eigen::Vector3d((ix - 0.5 * (side - 1)) * spacing, 0.0,
                                 (iz - 0.5 * (side - 1)) * spacing);
    }
    return off;
}

/// Rician small-scale fading: sqrt(kappa/(1+kappa)) LoS + sqrt(1/(1+kappa)) NLoS,
/// unit mean-square per entry.
CMat rician_mix(const CMat& los, double kappa, Rng& rng) {
    CMat out(los.rows(), los.cols());
    const double w_los = std::sqrt(kappa / (1.0 + kappa));
    const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            out(i, j) = w_los * los(i, j) + w_nlos * rng.cnormal();
    return out;
}

} // namespace

ProblemInstance generate_instance(const ScenarioGeometry& geom, const FadingParams& fading,
                                  int num_users, int num_bs_antennas, int num_irs_elements,
                                  const RVec& sinr_targets, std::uint64_t rng_seed) {
    geom.validate(num_users);
    fading.validate();
    if (num_bs_antennas < 1 || num_irs_elements < 1)
        throw std::invalid_argument("antenna/element counts must be >= 1");
    if (sinr_targets.size() != num_users)
        throw std::invalid_argument("sinr_targets length must equal the user count");

    const double lambda = geom.wavelength();
    const auto users = place_users(geom, num_users, rng_seed);
    const auto bs_off = ula_offsets(num_bs_antennas, geom.bs_spacing());
    // A 1-element "array" never needs the perfect-square layout; neither do
    // pure-NLoS links, but the offsets are cheap enough to build whenever the
    // LoS weight is nonzero.
    const bool irs_needs_los = fading.rician_bs_irs > 0.0 || fading.rician_irs_user > 0.0;
    const auto irs_off = irs_needs_los ? upa_offsets(num_irs_elements, geom.irs_spacing())
                                       : std::vector<Eigen::Vector3d>(num_irs_elements,
                                                                      Eigen::Vector3d::Zero());

    const double sigma_dbm = noise_power_dbm(geom.noise_psd_dbm_per_hz, geom.bandwidth_hz);
    const double sigma = std::sqrt(dbm_to_watt(sigma_dbm));

    ProblemInstance inst;
    inst.num_users = num_users;
    inst.num_bs_antennas = num_bs_antennas;
    inst.num_irs_elements = num_irs_elements;
    inst.sinr_targets = sinr_targets;

    // BS -> IRS
    {
        Rng rng = Rng::stream(rng_seed, 0, link_stream_id(kLinkBsIrs));
        const Eigen::Vector3d delta = geom.irs_center - geom.bs_center;
        const double dist = delta.norm();
        const Eigen::Vector3d dir = delta / dist;
        const CVec a_tx = steering(bs_off, dir, lambda);
        const CVec a_rx = steering(irs_off, -dir, lambda);
        CMat los = a_rx * a_tx.transpose();
        const double kappa = fading.capped(fading.rician_bs_irs);
        const double amp =
            std::pow(10.0, -pathloss_db(dist, fading.pathloss_exp_bs_irs,
                                        fading.reference_pathloss_db) / 20.0);
        inst.bs_irs = amp / sigma * rician_mix(los, kappa, rng);
    }

    // BS -> users and IRS -> users
    inst.bs_user.resize(num_users, num_bs_antennas);
    inst.irs_user.resize(num_users, num_irs_elements);
    Rng rng_bu = Rng::stream(rng_seed, 0, link_stream_id(kLinkBsUser));
    Rng rng_iu = Rng::stream(rng_seed, 0, link_stream_id(kLinkIrsUser));
    for (int k = 0; k < num_users; ++k) {
        {
            const Eigen::Vector3d delta = users[k] - geom.bs_center;
            const double dist = delta.norm();
            const Eigen::Vector3d dir = delta / dist;
            const CVec a_tx = steering(bs_off, dir, lambda);
            CMat los = a_tx.transpose();  // 1 x N_t
            const double kappa = fading.capped(fading.rician_bs_user);
            const double amp =
                std::pow(10.0, -pathloss_db(dist, fading.pathloss_exp_bs_user,
                                            fading.reference_pathloss_db) / 20.0);
            inst.bs_user.row(k) = amp / sigma * rician_mix(los, kappa, rng_bu);
        }
        {
            const Eigen::Vector3d delta = users[k] - geom.irs_center;
            const double dist = delta.norm();
            const Eigen::Vector3d dir = delta / dist;
            const CVec a_tx = steering(irs_off, dir, lambda);
            CMat los = a_tx.transpose();  // 1 x N_s
            const double kappa = fading.capped(fading.rician_irs_user);
            const double amp =
                std::pow(10.0, -pathloss_db(dist, fading.pathloss_exp_irs_user,
                                            fading.reference_pathloss_db) / 20.0);
            inst.irs_user.row(k) = amp * rician_mix(los, kappa, rng_iu);
        }
    }

    inst.validate();
    return inst;
}

// ---------------------------------------------------------------------------
// Text interchange format
// ---------------------------------------------------------------------------

namespace {

void write_cmat(std::ostream& os, const char* tag, const CMat& m) {
    os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", m(i, j).real(), m(i, j).imag());
            os << buf;
        }
        os << '\n';
    }
}

CMat read_cmat(std::istream& is, const std::string& expected_tag) {
    std::string tag;
    Eigen::Index rows = 0, cols = 0;
    if (!(is >> tag >> rows >> cols) || tag != expected_tag)
        throw std::runtime_error("instance format: expected matrix tag '" + expected_tag + "'");
    CMat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string cell;
            if (!(is >> cell)) throw std::runtime_error("instance format: truncated matrix " + expected_tag);
            double re = 0, im = 0;
            if (std::sscanf(cell.c_str(), "%lf,%lf", &re, &im) != 2)
                throw std::runtime_error("instance format: bad complex entry '" + cell + "'");
            m(i, j) = cplx(re, im);
        }
    return m;
}

} // namespace

void write_instance(std::ostream& os, const ProblemInstance& inst) {
    os << "irsopt-instance 1\n";
    os << "users " << inst.num_users << '\n';
    os << "bs_antennas " << inst.num_bs_antennas << '\n';
    os << "irs_elements " << inst.num_irs_elements << '\n';
    os << "sinr_targets";
    for (int k = 0; k < inst.num_users; ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.17g", inst.sinr_targets(k));
        os << buf;
    }
    os << '\n';
    write_cmat(os, "bs_irs", inst.bs_irs);
    write_cmat(os, "bs_user", inst.bs_user);
    write_cmat(os, "irs_user", inst.irs_user);
}

ProblemInstance read_instance(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "irsopt-instance" || version != 1)
        throw std::runtime_error("not an irsopt-instance v1 file");
    ProblemInstance inst;
    std::string key;
    if (!(is >> key >> inst.num_users) || key != "users")
        throw std::runtime_error("instance format: expected 'users'");
    if (!(is >> key >> inst.num_bs_antennas) || key != "bs_antennas")
        throw std::runtime_error("instance format: expected 'bs_antennas'");
    if (!(is >> key >> inst.num_irs_elements) || key != "irs_elements")
        throw std::runtime_error("instance format: expected 'irs_elements'");
    if (!(is >> key) || key != "sinr_targets")
        throw std::runtime_error("instance format: expected 'sinr_targets'");
    inst.sinr_targets.resize(inst.num_users);
    for (int k = 0; k < inst.num_users; ++k)
        if (!(is >> inst.sinr_targets(k)))
            throw std::runtime_error("instance format: truncated sinr_targets");
    inst.bs_irs = read_cmat(is, "bs_irs");
    inst.bs_user = read_cmat(is, "bs_user");
    inst.irs_user = read_cmat(is, "irs_user");
    inst.validate();
    return inst;
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_instance(os, inst);
}

ProblemInstance load_instance(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_instance(is);
}

} // namespace irsopt::channel
