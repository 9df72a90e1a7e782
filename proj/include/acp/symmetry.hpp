#pragma once

// Symmetries of potential tables: histograms over argument subsets,
// commutativity within a table and equality of two tables up to a
// reordering of their arguments.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "acp/core_model.hpp"

namespace acp {

/// Counts of each label among `labels`, all drawn from `ranges` (one shared range).
inline Histogram histogram_of(std::span<const Range> ranges, std::span<const std::uint32_t> labels) {
  if (ranges.empty()) fail(ErrorKind::invalid_argument, "histogram over an empty argument subset");
  if (ranges.size() != labels.size()) fail(ErrorKind::invalid_argument, "one label per argument expected");
  for (const auto& r : ranges)
    if (!(r == ranges[0])) fail(ErrorKind::mixed_ranges, "histogram over arguments with different ranges");
  Histogram h(ranges[0].size(), 0);
  for (auto l : labels) {
    if (l >= h.size()) fail(ErrorKind::invalid_argument, "label index out of range");
    ++h[l];
  }
  return h;
}

/// (histogram over the subset, labels of the remaining args) -> sorted potentials.
using HistogramProjection = std::map<std::pair<Histogram, std::vector<std::uint32_t>>, std::vector<Rational>>;

namespace detail {

inline void check_subset(const PotentialTable& t, std::span<const std::size_t> subset) {
  if (subset.empty()) fail(ErrorKind::invalid_argument, "empty argument subset");
  std::vector<bool> seen(t.arity(), false);
  for (auto p : subset) {
    if (p >= t.arity()) fail(ErrorKind::invalid_argument, "position " + std::to_string(p) + " out of range");
    if (seen[p]) fail(ErrorKind::invalid_argument, "position " + std::to_string(p) + " repeated");
    seen[p] = true;
    if (!(t.range(p) == t.range(subset[0])))
      fail(ErrorKind::mixed_ranges, "positions " + std::to_string(subset[0]) + " and " + std::to_string(p) +
                                        " have different ranges");
  }
}

/// Equal potentials get equal codes.
inline std::vector<std::uint32_t> value_codes(const PotentialTable& t, std::map<Rational, std::uint32_t>& dict) {
  std::vector<std::uint32_t> codes(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto [it, inserted] = dict.try_emplace(t.potential(r), static_cast<std::uint32_t>(dict.size()));
    codes[r] = it->second;
  }
  return codes;
}

inline std::vector<std::uint32_t> value_codes(const PotentialTable& t) {
  std::map<Rational, std::uint32_t> dict;
  return value_codes(t, dict);
}

/// Row index after exchanging the labels at positions i and j.
inline std::size_t swapped_row(const PotentialTable& t, std::size_t row, std::size_t i, std::size_t j) {
  std::size_t ai = row / t.stride(i) % t.range(i).size();
  std::size_t aj = row / t.stride(j) % t.range(j).size();
  return row - ai * t.stride(i) - aj * t.stride(j) + aj * t.stride(i) + ai * t.stride(j);
}

inline bool transposition_symmetric(const PotentialTable& t, const std::vector<std::uint32_t>& codes, std::size_t i,
                                    std::size_t j) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    std::size_t s = swapped_row(t, r, i, j);
    if (s > r && codes[s] != codes[r]) return false;
  }
  return true;
}

}  // namespace detail

inline HistogramProjection histogram_projection(const PotentialTable& t, std::span<const std::size_t> subset) {
  detail::check_subset(t, subset);
  std::vector<bool> in_subset(t.arity(), false);
  for (auto p : subset) in_subset[p] = true;
  HistogramProjection out;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto a = t.assignment_of(r);
    Histogram h(t.range(subset[0]).size(), 0);
    std::vector<std::uint32_t> rest;
    for (std::size_t p = 0; p < a.size(); ++p) {
      if (in_subset[p])
        ++h[a[p]];
      else
        rest.push_back(a[p]);
    }
    out[{std::move(h), std::move(rest)}].push_back(t.potential(r));
  }
  for (auto& [key, values] : out) std::sort(values.begin(), values.end());
  return out;
}

/// True iff every permutation of the subset's arguments leaves the table unchanged.
inline bool is_commutative(const PotentialTable& t, std::span<const std::size_t> subset) {
  detail::check_subset(t, subset);
  if (subset.size() < 2) fail(ErrorKind::invalid_argument, "commutativity needs at least two positions");
  std::vector<std::size_t> sorted_positions(subset.begin(), subset.end());
  std::sort(sorted_positions.begin(), sorted_positions.end());
  std::vector<std::uint32_t> labels(sorted_positions.size());
  // Compare each row with the representative of its bucket: subset labels in ascending order.
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto a = t.assignment_of(r);
    for (std::size_t k = 0; k < sorted_positions.size(); ++k) labels[k] = a[sorted_positions[k]];
    std::sort(labels.begin(), labels.end());
    for (std::size_t k = 0; k < sorted_positions.size(); ++k) a[sorted_positions[k]] = labels[k];
    std::size_t canonical = t.row_of(a);
    if (canonical != r && t.potential(canonical) != t.potential(r)) return false;
  }
  return true;
}

/// Maximal commutative argument subsets (size > 1) among positions that share
/// range and degree, largest first, ties in lexicographic order.
inline std::vector<std::vector<std::size_t>> maximal_commutative_subsets(const PotentialTable& t,
                                                                         std::span<const std::size_t> degrees) {
  if (degrees.size() != t.arity()) fail(ErrorKind::invalid_argument, "one degree per argument expected");
  // Transpositions that fix the table generate a symmetric group on each block
  // of the "swap is a symmetry" relation, so the maximal subsets are those blocks.
  std::vector<std::size_t> parent(t.arity());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::uint32_t> codes;
  for (std::size_t i = 0; i < t.arity(); ++i)
    for (std::size_t j = i + 1; j < t.arity(); ++j) {
      if (degrees[i] != degrees[j] || !(t.range(i) == t.range(j)) || find(i) == find(j)) continue;
      if (codes.empty()) codes = detail::value_codes(t);
      if (detail::transposition_symmetric(t, codes, i, j)) parent[find(j)] = find(i);
    }
  std::map<std::size_t, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < t.arity(); ++i) blocks[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : blocks)
    if (members.size() > 1) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
  return out;
}

/// The subset used to annotate a factor: the largest maximal subset,
/// lexicographically smallest among equals. Empty if there is none.
inline std::vector<std::size_t> choose_commutative_subset(const PotentialTable& t, std::span<const std::size_t> degrees) {
  auto all = maximal_commutative_subsets(t, degrees);
  return all.empty() ? std::vector<std::size_t>{} : all.front();
}

/// New position i takes the argument at old position source[i].
struct ArgPermutation {
  std::vector<std::size_t> source;

  static ArgPermutation identity(std::size_t n) {
    ArgPermutation p;
    p.source.resize(n);
    std::iota(p.source.begin(), p.source.end(), 0);
    return p;
  }
  bool is_identity() const {
    for (std::size_t i = 0; i < source.size(); ++i)
      if (source[i] != i) return false;
    return true;
  }
  ArgPermutation inverse() const {
    ArgPermutation p;
    p.source.resize(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) p.source[source[i]] = i;
    return p;
  }
  friend bool operator==(const ArgPermutation&, const ArgPermutation&) = default;
};

inline PotentialTable rearrange_arguments(const PotentialTable& t, const ArgPermutation& pi) {
  const std::size_t n = t.arity();
  if (pi.source.size() != n) fail(ErrorKind::invalid_argument, "permutation size does not match arity");
  std::vector<bool> used(n, false);
  for (auto s : pi.source) {
    if (s >= n || used[s]) fail(ErrorKind::invalid_argument, "not a permutation");
    used[s] = true;
  }
  std::vector<Range> ranges(n);
  for (std::size_t i = 0; i < n; ++i) ranges[i] = t.range(pi.source[i]);
  std::vector<Rational> potentials(t.rows());
  PotentialTable shape(ranges, std::vector<Rational>(t.rows(), Rational(1)));
  std::vector<std::uint32_t> old(n);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto a = shape.assignment_of(r);
    for (std::size_t i = 0; i < n; ++i) old[pi.source[i]] = a[i];
    potentials[r] = t.potential(t.row_of(old));
  }
  return PotentialTable(std::move(ranges), std::move(potentials));
}

/// Order-independent summary of a table: its sorted argument ranges and, per
/// histogram over all arguments, the multiset of potentials mapped to it.
/// Tables that are equal up to argument order have equal signatures.
struct OrderFreeSignature {
  std::vector<Range> ranges;
  std::map<std::vector<std::uint32_t>, std::vector<Rational>> buckets;

  friend bool operator==(const OrderFreeSignature& a, const OrderFreeSignature& b) {
    return a.ranges == b.ranges && a.buckets == b.buckets;
  }
  friend bool operator<(const OrderFreeSignature& a, const OrderFreeSignature& b) {
    return std::tie(a.ranges, a.buckets) < std::tie(b.ranges, b.buckets);
  }
};

inline OrderFreeSignature order_free_signature(const PotentialTable& t) {
  OrderFreeSignature sig;
  sig.ranges = t.ranges();
  std::sort(sig.ranges.begin(), sig.ranges.end());
  std::vector<Range> distinct;
  std::vector<std::size_t> offsets;
  std::size_t width = 0;
  for (const auto& r : sig.ranges)
    if (distinct.empty() || !(distinct.back() == r)) {
      distinct.push_back(r);
      offsets.push_back(width);
      width += r.size();
    }
  std::vector<std::size_t> base(t.arity());
  for (std::size_t p = 0; p < t.arity(); ++p)
    base[p] = offsets[std::find(distinct.begin(), distinct.end(), t.range(p)) - distinct.begin()];
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto a = t.assignment_of(r);
    std::vector<std::uint32_t> h(width, 0);
    for (std::size_t p = 0; p < a.size(); ++p) ++h[base[p] + a[p]];
    sig.buckets[std::move(h)].push_back(t.potential(r));
  }
  for (auto& [h, values] : sig.buckets) std::sort(values.begin(), values.end());
  return sig;
}

struct OrderFreeOptions {
  std::size_t arity_cap = 10;
};

namespace detail {

/// Backtracking search for new position t of `b` taking old position source[t]
/// so that the result equals `a` row by row. Partial assignments are pruned by
/// comparing potential multisets grouped by the labels of the assigned prefix.
class PermutationSearch {
 public:
  PermutationSearch(const PotentialTable& a, const PotentialTable& b) : a_(a), b_(b), n_(a.arity()) {
    std::map<Rational, std::uint32_t> dict;
    ca_ = value_codes(a, dict);
    cb_ = value_codes(b, dict);
    b_assign_.resize(b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) b_assign_[r] = b.assignment_of(r);
    a_prefix_.resize(n_);
    for (std::size_t k = 0; k < n_; ++k) a_prefix_[k] = buckets_a(k);
    source_.assign(n_, 0);
    used_.assign(n_, false);
  }

  std::optional<ArgPermutation> run() {
    if (!extend(0)) return std::nullopt;
    return ArgPermutation{source_};
  }

 private:
  using Buckets = std::vector<std::vector<std::uint32_t>>;

  // Rows of a grouped by the labels at positions 0..k.
  Buckets buckets_a(std::size_t k) const {
    std::size_t groups = a_.rows() / a_.stride(k);
    Buckets out(groups);
    for (std::size_t r = 0; r < a_.rows(); ++r) out[r / a_.stride(k)].push_back(ca_[r]);
    for (auto& v : out) std::sort(v.begin(), v.end());
    return out;
  }

  bool consistent(std::size_t k) const {
    std::size_t groups = a_.rows() / a_.stride(k);
    Buckets out(groups);
    for (std::size_t r = 0; r < b_.rows(); ++r) {
      std::size_t g = 0;
      for (std::size_t t = 0; t <= k; ++t) g = g * a_.range(t).size() + b_assign_[r][source_[t]];
      out[g].push_back(cb_[r]);
    }
    for (std::size_t g = 0; g < groups; ++g) {
      std::sort(out[g].begin(), out[g].end());
      if (out[g] != a_prefix_[k][g]) return false;
    }
    return true;
  }

  bool extend(std::size_t k) {
    if (k == n_) return true;
    for (std::size_t s = 0; s < n_; ++s) {
      if (used_[s] || !(b_.range(s) == a_.range(k))) continue;
      source_[k] = s;
      used_[s] = true;
      if (consistent(k) && extend(k + 1)) return true;
      used_[s] = false;
    }
    return false;
  }

  const PotentialTable& a_;
  const PotentialTable& b_;
  std::size_t n_;
  std::vector<std::uint32_t> ca_, cb_;
  std::vector<std::vector<std::uint32_t>> b_assign_;
  std::vector<Buckets> a_prefix_;
  std::vector<std::size_t> source_;
  std::vector<bool> used_;
};

}  // namespace detail

/// Permutation search for two tables already known to share their
/// order-free signature.
inline std::optional<ArgPermutation> match_same_signature(const PotentialTable& a, const PotentialTable& b,
                                                          const OrderFreeOptions& options = {}) {
  if (a == b) return ArgPermutation::identity(a.arity());
  if (a.arity() > options.arity_cap)
    fail(ErrorKind::arity_cap_exceeded, "permutation search over " + std::to_string(a.arity()) +
                                            " arguments exceeds the cap of " + std::to_string(options.arity_cap));
  return detail::PermutationSearch(a, b).run();
}

/// Some permutation pi with rearrange_arguments(b, pi) == a, if one exists.
inline std::optional<ArgPermutation> potentials_equal_order_independent(const PotentialTable& a, const PotentialTable& b,
                                                                        const OrderFreeOptions& options = {}) {
  if (a.arity() != b.arity() || a.rows() != b.rows()) return std::nullopt;
  if (!(order_free_signature(a) == order_free_signature(b))) return std::nullopt;
  return match_same_signature(a, b, options);
}

}  // namespace acp
