#pragma once

// Count vectors over a range ("histograms"), the value space of a counting
// randvar. Canonical order is descending lexicographic on the count vector,
// which is the order of first appearance when enumerating assignments
// range-lexicographically: for a Boolean pair that is [2,0], [1,1], [0,2].

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acp/error.hpp"

namespace acp {

using Histogram = std::vector<std::uint32_t>;

/// C(n, k) with overflow detection.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > std::numeric_limits<std::uint64_t>::max())
      fail(ErrorKind::invalid_argument, "binomial coefficient overflows 64 bits");
  }
  return static_cast<std::uint64_t>(result);
}

/// Number of histograms of `positions` values drawn from a range of size
/// `range_size`: C(m + r - 1, r - 1).
inline std::uint64_t count_histograms(std::uint64_t positions, std::uint64_t range_size) {
  if (range_size == 0) fail(ErrorKind::invalid_argument, "range size must be positive");
  return binomial(positions + range_size - 1, range_size - 1);
}

/// Position of `h` in canonical order.
inline std::uint64_t rank_histogram(std::span<const std::uint32_t> h) {
  std::uint64_t remaining = 0;
  for (auto c : h) remaining += c;
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    const std::uint64_t k = h.size() - i - 1;
    // Histograms whose i-th count exceeds h[i] (same prefix) come first.
    if (remaining > h[i]) rank += binomial(remaining - h[i] - 1 + k, k);
    remaining -= h[i];
  }
  return rank;
}

/// All histograms of `positions` values over `range_size` labels, canonical order.
inline std::vector<Histogram> enumerate_histograms(std::uint32_t positions, std::size_t range_size) {
  if (range_size == 0) fail(ErrorKind::invalid_argument, "range size must be positive");
  std::vector<Histogram> out;
  out.reserve(count_histograms(positions, range_size));
  Histogram h(range_size, 0);
  auto rec = [&](auto& self, std::size_t i, std::uint32_t remaining) -> void {
    if (i + 1 == range_size) {
      h[i] = remaining;
      out.push_back(h);
      return;
    }
    for (std::uint32_t c = remaining + 1; c-- > 0;) {
      h[i] = c;
      self(self, i + 1, remaining - c);
    }
  };
  rec(rec, 0, positions);
  return out;
}

/// (sum n_i)! / prod(n_i!), the number of assignments inducing `h`.
inline mpz_class multinomial(std::span<const std::uint32_t> h) {
  mpz_class result = 1;
  unsigned long total = 0;
  for (auto c : h) {
    for (unsigned long i = 1; i <= c; ++i) {
      ++total;
      result *= total;
      result /= i;
    }
  }
  return result;
}

inline double log_multinomial(std::span<const std::uint32_t> h) {
  double total = 0, result = 0;
  for (auto c : h) {
    total += c;
    result -= std::lgamma(static_cast<double>(c) + 1.0);
  }
  return result + std::lgamma(total + 1.0);
}

/// "[2,0]"
inline std::string format_histogram(std::span<const std::uint32_t> h) {
  std::string out = "[";
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(h[i]);
  }
  return out + "]";
}

inline Histogram parse_histogram(std::string_view text) {
  auto bad = [&] { fail(ErrorKind::parse, "malformed histogram '" + std::string(text) + "'"); };
  if (text.size() < 2 || text.front() != '[' || text.back() != ']') bad();
  Histogram h;
  std::string_view body = text.substr(1, text.size() - 2);
  while (!body.empty()) {
    auto comma = body.find(',');
    std::string_view item = body.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty() || item.size() > 9) bad();
    std::uint32_t value = 0;
    for (char c : item) {
      if (c < '0' || c > '9') bad();
      value = value * 10 + static_cast<std::uint32_t>(c - '0');
    }
    h.push_back(value);
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
    if (body.empty()) bad();
  }
  if (h.empty()) bad();
  return h;
}

}  // namespace acp
