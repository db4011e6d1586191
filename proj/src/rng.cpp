#include "irsopt/rng.hpp"

#include <cmath>

namespace irsopt {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t master, std::uint64_t realization, std::uint64_t link) {
    std::uint64_t key = splitmix64(master);
    key = splitmix64(key ^ (realization + 0x51ed2701a9b53d29ULL));
    key = splitmix64(key ^ (link + 0xd6e8feb86659fd93ULL));
    return Rng(key);
}

double Rng::uniform() {
    // 53-bit mantissa, uniform on [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    // u1 in (0, 1] avoids log(0)
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

cplx Rng::cnormal() {
    const double re = normal();
    const double im = normal();
    return cplx(re, im) / std::sqrt(2.0);
}

} // namespace irsopt
