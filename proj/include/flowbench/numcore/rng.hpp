#pragma once

#include <cstdint>

#include "flowbench/numcore/tensor.hpp"

namespace flowbench::numcore {

// Counter-based generator (SplitMix64, Steele et al. constants). Identical
// seed + identical call sequence gives an identical stream; bit-exactness
// across platforms is not promised, determinism within one build is.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}
    double gaussian();                       // standard normal (Box-Muller)
    Tensor gaussian_tensor(std::vector<std::size_t> shape);
    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi);

    // Independent stream keyed on (original seed, stream id); unaffected by
    // how many draws this instance has produced.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace flowbench::numcore
