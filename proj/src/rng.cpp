#include "pistol/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace pistol {

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view id) noexcept {
  return mix64(mix64(master) ^ fnv1a64(id));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view id,
                          std::uint64_t counter) noexcept {
  return mix64(derive_seed(master, id) ^ mix64(counter + 0x51ed270b27d3b6a3ULL));
}

std::int64_t Stream::uniform(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::int64_t>(next());
  }
  const std::uint64_t range = span + 1;
  // Reject the tail so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  std::uint64_t x = next();
  while (x > limit) x = next();
  return lo + static_cast<std::int64_t>(x % range);
}

std::size_t Stream::index(std::size_t n) {
  return static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(n) - 1));
}

double Stream::unit() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Stream::normal() {
  double u1 = unit();
  while (u1 <= 0.0) u1 = unit();
  const double u2 = unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pistol
