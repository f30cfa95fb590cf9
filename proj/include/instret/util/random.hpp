#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace instret::util {

/// Seeded generator whose draws are identical on every standard library:
/// only the engine (fully specified by the standard) is used, and bounded
/// draws use rejection sampling instead of std::uniform_int_distribution.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, n). Requires n > 0.
    std::size_t uniform_index(std::size_t n);
    /// Uniform in [0, 1) with 53 random bits.
    double uniform_real();

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

    /// k distinct indices from [0, n) in draw order. Requires k <= n.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

  private:
    std::mt19937_64 engine_;
};

/// Independent stream seed for `key` under a global seed, so per-item
/// randomness does not depend on processing order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace instret::util
