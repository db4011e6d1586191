#pragma once

#include <cstdint>
#include <random>

#include "irsopt/types.hpp"

namespace irsopt {

/// Deterministic random stream. Wraps std::mt19937_64 (bit-exact across
/// platforms) and draws normals through a fixed Box-Muller transform so
/// that sequences do not depend on the standard library's
/// normal_distribution implementation.
///
/// Independent substreams are derived with Rng::stream(master, realization,
/// link): the three indices are mixed through SplitMix64, so Monte-Carlo
/// workers can generate realizations concurrently without sharing state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Substream keyed by (master seed, realization index, link id).
    static Rng stream(std::uint64_t master, std::uint64_t realization, std::uint64_t link);

    /// Uniform on [0, 1).
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal();

    /// Circularly-symmetric complex normal CN(0, 1).
    cplx cnormal();

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// SplitMix64 finalizer; used to decorrelate stream keys.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace irsopt
