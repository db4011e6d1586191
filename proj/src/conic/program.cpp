#include <cmath>
#include <fstream>
#include <sstream>

#include "irsopt/conic.hpp"

namespace irsopt::conic {

int psd_side(int dim) {
    const int d = static_cast<int>(std::lround(0.5 * (std::sqrt(8.0 * dim + 1.0) - 1.0)));
    if (d < 1 || d * (d + 1) / 2 != dim)
        throw std::invalid_argument("psd cone dimension must be a triangle number");
    return d;
}

int ConicProgram::total_cone_dim() const {
    int m = 0;
    for (const auto& c : cones) m += c.dim;
    return m;
}

void ConicProgram::validate() const {
    if (num_vars < 1) throw std::invalid_argument("program needs at least one variable");
    if (objective.size() != num_vars) throw std::invalid_argument("objective length mismatch");
    if (constraints.cols() != num_vars) throw std::invalid_argument("constraint column mismatch");
    if (rhs.size() != constraints.rows()) throw std::invalid_argument("rhs length mismatch");
    if (total_cone_dim() != constraints.rows())
        throw std::invalid_argument("cone dimensions must sum to the number of rows");
    for (const auto& c : cones) {
        switch (c.type) {
            case ConeType::zero:
            case ConeType::nonneg:
                if (c.dim < 1) throw std::invalid_argument("cone dimension must be >= 1");
                break;
            case ConeType::soc:
                if (c.dim < 2) throw std::invalid_argument("soc dimension must be >= 2");
                break;
            case ConeType::rotated_soc:
                if (c.dim < 3) throw std::invalid_argument("rotated soc dimension must be >= 3");
                break;
            case ConeType::psd:
                psd_side(c.dim);
                break;
        }
    }
    if (!objective.allFinite() || !rhs.allFinite())
        throw std::invalid_argument("program data must be finite");
    for (int j = 0; j < constraints.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(constraints, j); it; ++it)
            if (!std::isfinite(it.value()))
                throw std::invalid_argument("program data must be finite");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::primal_infeasible: return "primal-infeasible";
        case SolveStatus::dual_infeasible: return "dual-infeasible";
        case SolveStatus::max_iters: return "max-iters";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

const char* cone_name(ConeType t) {
    switch (t) {
        case ConeType::zero: return "zero";
        case ConeType::nonneg: return "nonneg";
        case ConeType::soc: return "soc";
        case ConeType::rotated_soc: return "rsoc";
        case ConeType::psd: return "psd";
    }
    return "?";
}

ConeType cone_from_name(const std::string& s) {
    if (s == "zero") return ConeType::zero;
    if (s == "nonneg") return ConeType::nonneg;
    if (s == "soc") return ConeType::soc;
    if (s == "rsoc") return ConeType::rotated_soc;
    if (s == "psd") return ConeType::psd;
    throw std::runtime_error("unknown cone type '" + s + "'");
}

} // namespace

void write_program(std::ostream& os, const ConicProgram& prog) {
    os << "irsopt-conic 1\n";
    os << "vars " << prog.num_vars << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", prog.objective_offset);
    os << "offset " << buf << '\n';
    os << "objective";
    for (int j = 0; j < prog.num_vars; ++j) {
        std::snprintf(buf, sizeof buf, " %.17g", prog.objective(j));
        os << buf;
    }
    os << '\n';
    os << "cones " << prog.cones.size() << '\n';
    for (const auto& c : prog.cones) os << cone_name(c.type) << ' ' << c.dim << '\n';
    os << "rhs";
    for (Eigen::Index i = 0; i < prog.rhs.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.17g", prog.rhs(i));
        os << buf;
    }
    os << '\n';
    os << "entries " << prog.constraints.nonZeros() << '\n';
    for (int j = 0; j < prog.constraints.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.constraints, j); it; ++it) {
            std::snprintf(buf, sizeof buf, "%.17g", it.value());
            os << it.row() << ' ' << it.col() << ' ' << buf << '\n';
        }
}

ConicProgram read_program(std::istream& is) {
    std::string magic, key;
    int version = 0;
    if (!(is >> magic >> version) || magic != "irsopt-conic" || version != 1)
        throw std::runtime_error("not an irsopt-conic v1 file");
    ConicProgram prog;
    if (!(is >> key >> prog.num_vars) || key != "vars")
        throw std::runtime_error("conic format: expected 'vars'");
    if (!(is >> key >> prog.objective_offset) || key != "offset")
        throw std::runtime_error("conic format: expected 'offset'");
    if (!(is >> key) || key != "objective")
        throw std::runtime_error("conic format: expected 'objective'");
    prog.objective.resize(prog.num_vars);
    for (int j = 0; j < prog.num_vars; ++j)
        if (!(is >> prog.objective(j))) throw std::runtime_error("conic format: bad objective");
    std::size_t n_cones = 0;
    if (!(is >> key >> n_cones) || key != "cones")
        throw std::runtime_error("conic format: expected 'cones'");
    prog.cones.resize(n_cones);
    for (auto& c : prog.cones) {
        std::string name;
        if (!(is >> name >> c.dim)) throw std::runtime_error("conic format: bad cone");
        c.type = cone_from_name(name);
    }
    const int m = prog.total_cone_dim();
    if (!(is >> key) || key != "rhs") throw std::runtime_error("conic format: expected 'rhs'");
    prog.rhs.resize(m);
    for (int i = 0; i < m; ++i)
        if (!(is >> prog.rhs(i))) throw std::runtime_error("conic format: bad rhs");
    std::size_t nnz = 0;
    if (!(is >> key >> nnz) || key != "entries")
        throw std::runtime_error("conic format: expected 'entries'");
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(nnz);
    for (std::size_t e = 0; e < nnz; ++e) {
        int i = 0, j = 0;
        double v = 0.0;
        if (!(is >> i >> j >> v)) throw std::runtime_error("conic format: bad entry");
        trips.emplace_back(i, j, v);
    }
    prog.constraints.resize(m, prog.num_vars);
    prog.constraints.setFromTriplets(trips.begin(), trips.end());
    prog.validate();
    return prog;
}

void save_program(const std::string& path, const ConicProgram& prog) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_program(os, prog);
}

ConicProgram load_program(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_program(is);
}

} // namespace irsopt::conic
