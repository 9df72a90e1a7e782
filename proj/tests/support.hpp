#pragma once

// Shared helpers for the test binaries: fixtures, small-table builders and
// brute-force oracles that do not reuse the library's shortcuts.

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "acp/acp.hpp"

namespace acp::testing {

inline std::string data_path(const std::string& name) { return std::string(ACP_TEST_DATA) + "/" + name; }

inline FactorGraph load_fg(const std::string& name) { return read_fg_file(data_path(name)); }

inline std::vector<Rational> rationals(std::initializer_list<const char*> values) {
  std::vector<Rational> out;
  for (auto v : values) out.push_back(parse_rational(v));
  return out;
}

inline PotentialTable boolean_table(std::size_t arity, std::vector<Rational> values) {
  return PotentialTable(std::vector<Range>(arity, Range::boolean()), std::move(values));
}

inline PotentialTable boolean_table(std::size_t arity, std::initializer_list<const char*> values) {
  return boolean_table(arity, rationals(values));
}

/// Every argument permutation, by direct re-evaluation of the table.
inline std::vector<std::vector<std::size_t>> all_permutations(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Does a(x) == b(x permuted) for every x, where new position i of b takes old position perm[i]?
inline bool permuted_equal(const PotentialTable& a, const PotentialTable& b, const std::vector<std::size_t>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (!(a.range(i) == b.range(perm[i]))) return false;
  std::vector<std::uint32_t> old(perm.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto x = a.assignment_of(r);
    for (std::size_t i = 0; i < perm.size(); ++i) old[perm[i]] = x[i];
    if (a.potential(r) != b.potential(b.row_of(old))) return false;
  }
  return true;
}

inline bool brute_force_equal_up_to_order(const PotentialTable& a, const PotentialTable& b) {
  if (a.arity() != b.arity()) return false;
  for (const auto& p : all_permutations(a.arity()))
    if (permuted_equal(a, b, p)) return true;
  return false;
}

/// Invariance under every permutation of the subset's positions.
inline bool brute_force_commutative(const PotentialTable& t, const std::vector<std::size_t>& subset) {
  for (const auto& p : all_permutations(subset.size())) {
    std::vector<std::size_t> perm(t.arity());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = 0; k < subset.size(); ++k) perm[subset[k]] = subset[p[k]];
    if (!permuted_equal(t, t, perm)) return false;
  }
  return true;
}

/// Random potential drawn from a small pool so that collisions happen.
inline Rational small_value(std::mt19937_64& rng, int pool) {
  return Rational(std::uniform_int_distribution<int>(1, pool)(rng));
}

inline PotentialTable random_table(std::mt19937_64& rng, const std::vector<Range>& ranges, int pool) {
  std::size_t rows = 1;
  for (const auto& r : ranges) rows *= r.size();
  std::vector<Rational> v(rows);
  for (auto& x : v) x = small_value(rng, pool);
  return PotentialTable(ranges, std::move(v));
}

/// A table made symmetric in `subset` by reading every row from its sorted representative.
inline PotentialTable symmetrize(const PotentialTable& t, const std::vector<std::size_t>& subset) {
  std::vector<Rational> v(t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto a = t.assignment_of(r);
    std::vector<std::uint32_t> labels;
    for (auto p : subset) labels.push_back(a[p]);
    std::sort(labels.begin(), labels.end());
    std::vector<std::size_t> sorted_pos = subset;
    std::sort(sorted_pos.begin(), sorted_pos.end());
    for (std::size_t k = 0; k < sorted_pos.size(); ++k) a[sorted_pos[k]] = labels[k];
    v[r] = t.potential(t.row_of(a));
  }
  return PotentialTable(t.ranges(), std::move(v));
}

inline PotentialTable permute_table(const PotentialTable& t, const std::vector<std::size_t>& perm) {
  return rearrange_arguments(t, ArgPermutation{perm});
}

/// Names of the members of each class, for readable assertions.
inline std::vector<std::vector<std::string>> rv_class_names(const FactorGraph& fg, const Grouping& g) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : g.rv_classes) {
    std::vector<std::string> names;
    for (auto v : c) names.push_back(fg.randvar(v).name);
    out.push_back(names);
  }
  return out;
}

inline std::vector<std::vector<std::string>> factor_class_names(const FactorGraph& fg, const Grouping& g) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : g.factor_classes) {
    std::vector<std::string> names;
    for (auto f : c) names.push_back(fg.factor(f).name);
    out.push_back(names);
  }
  return out;
}

/// Exact marginal of one randvar given the graph's evidence, by enumeration.
inline std::vector<Rational> brute_force_marginal(const FactorGraph& fg, std::size_t target) {
  std::vector<Rational> m(fg.randvar(target).range.size(), Rational(0));
  for_each_assignment(fg, [&](const std::vector<std::uint32_t>& a) {
    for (const auto& [v, label] : fg.evidence())
      if (a[v] != label) return;
    m[a[target]] += unnormalized_weight(fg, a);
  });
  Rational z = 0;
  for (const auto& x : m) z += x;
  for (auto& x : m) x /= z;
  return m;
}

/// Same factor functions by name: the unnormalized weight of every full
/// assignment agrees, with randvars matched by name.
inline bool same_weights(const FactorGraph& a, const FactorGraph& b) {
  if (a.num_randvars() != b.num_randvars() || a.num_factors() != b.num_factors()) return false;
  std::vector<std::size_t> to_b(a.num_randvars());
  for (std::size_t v = 0; v < a.num_randvars(); ++v) {
    auto id = b.find_randvar(a.randvar(v).name);
    if (!id || !(b.randvar(*id).range == a.randvar(v).range)) return false;
    to_b[v] = *id;
  }
  bool same = true;
  std::vector<std::uint32_t> ab(b.num_randvars());
  for_each_assignment(a, [&](const std::vector<std::uint32_t>& x) {
    if (!same) return;
    for (std::size_t v = 0; v < x.size(); ++v) ab[to_b[v]] = x[v];
    same = unnormalized_weight(a, x) == unnormalized_weight(b, ab);
  });
  return same;
}

inline std::vector<std::string> sorted_names(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

inline std::vector<std::string> randvar_names(const FactorGraph& fg) {
  std::vector<std::string> out;
  for (const auto& rv : fg.randvars()) out.push_back(rv.name);
  return sorted_names(out);
}

inline std::vector<std::string> factor_names(const FactorGraph& fg) {
  std::vector<std::string> out;
  for (const auto& f : fg.factors()) out.push_back(f.name);
  return sorted_names(out);
}

/// Table whose potentials are a shuffle of 1..rows, so it has no symmetry at all.
inline PotentialTable distinct_table(std::mt19937_64& rng, std::size_t arity) {
  std::vector<Rational> v(std::size_t(1) << arity);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = Rational(static_cast<long>(i + 1));
  std::shuffle(v.begin(), v.end(), rng);
  return boolean_table(arity, std::move(v));
}

/// Small Boolean graph built from k copies of one block plus a commutative hub,
/// with randomly reordered arguments, optional noise factors and evidence.
inline FactorGraph planted_fg(std::mt19937_64& rng, std::size_t k) {
  FactorGraph fg;
  auto t1 = distinct_table(rng, 2), t2 = distinct_table(rng, 2);
  fg.add_randvar("G", Range::boolean());
  for (std::size_t i = 1; i <= k; ++i) {
    fg.add_randvar("P" + std::to_string(i), Range::boolean());
    fg.add_randvar("Q" + std::to_string(i), Range::boolean());
  }
  for (std::size_t i = 1; i <= k; ++i) {
    std::string s = std::to_string(i);
    if (rng() % 2)
      fg.add_factor("a" + s, {"P" + s, "Q" + s}, t1);
    else
      fg.add_factor("a" + s, {"Q" + s, "P" + s}, permute_table(t1, {1, 0}));
    fg.add_factor("b" + s, {"Q" + s, "G"}, t2);
  }
  std::vector<std::size_t> hub_positions(k);
  std::iota(hub_positions.begin(), hub_positions.end(), 0);
  auto hub = symmetrize(random_table(rng, std::vector<Range>(k + 1, Range::boolean()), 20), hub_positions);
  std::vector<std::string> hub_args;
  for (std::size_t i = 1; i <= k; ++i) hub_args.push_back("P" + std::to_string(i));
  hub_args.push_back("G");
  fg.add_factor("hub", hub_args, hub);
  if (rng() % 3 == 0) {
    fg.add_randvar("N", Range::boolean());
    fg.add_factor("noise", {"N", "P1"}, random_table(rng, std::vector<Range>(2, Range::boolean()), 4));
  }
  if (rng() % 3 == 0) fg.set_evidence("G", rng() % 2 ? "true" : "false");
  return fg;
}

/// Random small Boolean graph whose tables draw from a tiny value pool, so
/// accidental equalities and symmetries are common.
inline FactorGraph chaotic_fg(std::mt19937_64& rng, std::size_t n_rvs, std::size_t n_factors) {
  FactorGraph fg;
  for (std::size_t i = 0; i < n_rvs; ++i) fg.add_randvar("V" + std::to_string(i), Range::boolean());
  for (std::size_t f = 0; f < n_factors; ++f) {
    std::size_t arity = 1 + rng() % std::min<std::size_t>(3, n_rvs);
    std::vector<std::size_t> pool(n_rvs);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<std::string> args;
    for (std::size_t k = 0; k < arity; ++k) args.push_back("V" + std::to_string(pool[k]));
    fg.add_factor("f" + std::to_string(f), args, random_table(rng, std::vector<Range>(arity, Range::boolean()), 2));
  }
  return fg;
}

}  // namespace acp::testing
