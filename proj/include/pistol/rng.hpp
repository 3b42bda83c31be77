#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace pistol {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// SplitMix64 finalizer; a bijective mixer on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for a stable identifier. Independent of call order, so any
/// generator keyed by its identifier yields the same stream no matter what
/// else was generated before it.
std::uint64_t derive_seed(std::uint64_t master, std::string_view id) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view id,
                          std::uint64_t counter) noexcept;

/// Deterministic random stream. The engine output sequence is fixed by the
/// standard; bounded draws use explicit rejection sampling rather than
/// std::uniform_int_distribution, whose algorithm varies across stdlibs.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  /// Uniform real in [0, 1) with 53 random bits.
  double unit();

  /// Standard normal draw (Box-Muller, no cached second value).
  double normal();

  char lower_letter() { return static_cast<char>('a' + index(26)); }
  char upper_letter() { return static_cast<char>('A' + index(26)); }

  template <typename T>
  const T& pick(std::span<const T> items) {
    return items[index(items.size())];
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pistol
