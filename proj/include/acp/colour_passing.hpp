#pragma once

// Colour refinement over factor graphs: the classic row-by-row variant (CP)
// and the advanced variant (ACP) that matches tables up to argument order and
// lets commutative factors send position 0 to their commutative arguments.

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "acp/core_model.hpp"
#include "acp/symmetry.hpp"

namespace acp {

enum class Algorithm { cp, acp };

inline std::string to_string(Algorithm a) { return a == Algorithm::cp ? "cp" : "acp"; }

struct Grouping {
  Algorithm algorithm = Algorithm::acp;
  std::vector<std::size_t> rv_colour, factor_colour;
  /// Classes are sorted by their smallest member; members ascend.
  std::vector<std::vector<std::size_t>> rv_classes, factor_classes;
  /// Per factor; identity unless ACP matched it against a differently ordered table.
  std::vector<ArgPermutation> rearrangements;
  /// Per factor, the commutative positions (rearranged order); empty if none.
  std::vector<std::vector<std::size_t>> annotations;
  std::size_t iterations = 0;
  double offline_ms = 0;

  std::size_t num_groups() const { return rv_classes.size() + factor_classes.size(); }
};

struct ColourOptions {
  OrderFreeOptions order_free;
};

/// Argument randvars of `f` in rearranged order.
inline std::vector<std::size_t> rearranged_args(const FactorGraph& fg, const Grouping& g, std::size_t f) {
  const auto& args = fg.factor_args(f);
  std::vector<std::size_t> out(args.size());
  for (std::size_t i = 0; i < args.size(); ++i) out[i] = args[g.rearrangements[f].source[i]];
  return out;
}

inline PotentialTable rearranged_table(const FactorGraph& fg, const Grouping& g, std::size_t f) {
  if (g.rearrangements[f].is_identity()) return fg.factor(f).table;
  return rearrange_arguments(fg.factor(f).table, g.rearrangements[f]);
}

/// The graph with every factor stored in its rearranged argument order.
inline FactorGraph rearranged_fg(const FactorGraph& fg, const Grouping& g) {
  FactorGraph out;
  for (const auto& rv : fg.randvars()) out.add_randvar(rv.name, rv.range);
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    std::vector<std::string> names;
    for (auto v : rearranged_args(fg, g, f)) names.push_back(fg.randvar(v).name);
    out.add_factor(fg.factor(f).name, names, rearranged_table(fg, g, f));
  }
  for (const auto& [v, label] : fg.evidence()) out.set_evidence(fg.randvar(v).name, fg.randvar(v).range.label(label));
  return out;
}

namespace detail {

template <class Key>
std::vector<std::size_t> colours_from_keys(const std::vector<Key>& keys) {
  std::map<Key, std::size_t> ids;
  for (const auto& k : keys) ids.emplace(k, 0);
  std::size_t next = 0;
  for (auto& [k, id] : ids) id = next++;
  std::vector<std::size_t> out(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) out[i] = ids.at(keys[i]);
  return out;
}

inline std::vector<std::vector<std::size_t>> classes_of(const std::vector<std::size_t>& colour) {
  std::map<std::size_t, std::vector<std::size_t>> by_colour;
  for (std::size_t i = 0; i < colour.size(); ++i) by_colour[colour[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [c, members] : by_colour) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::size_t count_colours(const std::vector<std::size_t>& colour) {
  std::vector<std::size_t> c = colour;
  std::sort(c.begin(), c.end());
  return static_cast<std::size_t>(std::unique(c.begin(), c.end()) - c.begin());
}

/// Alternating factor / randvar passes until the partition is stable.
inline void pass_to_fixpoint(const FactorGraph& fg, Grouping& g) {
  const std::size_t nf = fg.num_factors(), nv = fg.num_randvars();
  std::vector<std::vector<std::size_t>> args(nf);
  std::vector<std::vector<long>> position_sent(nf);  // per factor, message position per rearranged slot
  for (std::size_t f = 0; f < nf; ++f) {
    args[f] = rearranged_args(fg, g, f);
    position_sent[f].resize(args[f].size());
    for (std::size_t p = 0; p < args[f].size(); ++p) position_sent[f][p] = static_cast<long>(p + 1);
    for (auto p : g.annotations[f]) position_sent[f][p] = 0;
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident(nv);  // (factor, rearranged slot)
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t p = 0; p < args[f].size(); ++p) incident[args[f][p]].push_back({f, p});

  std::size_t groups = count_colours(g.rv_colour) + count_colours(g.factor_colour);
  while (true) {
    ++g.iterations;
    std::vector<std::vector<long>> fsig(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      for (auto v : args[f]) fsig[f].push_back(static_cast<long>(g.rv_colour[v]));
      fsig[f].push_back(static_cast<long>(g.factor_colour[f]));
      // Factors annotated differently must not share a colour.
      fsig[f].push_back(-1);
      for (auto p : g.annotations[f]) fsig[f].push_back(static_cast<long>(p));
    }
    g.factor_colour = colours_from_keys(fsig);

    std::vector<std::vector<long>> vsig(nv);
    for (std::size_t v = 0; v < nv; ++v) {
      std::vector<std::pair<long, long>> msgs;
      for (auto [f, p] : incident[v]) msgs.push_back({static_cast<long>(g.factor_colour[f]), position_sent[f][p]});
      std::sort(msgs.begin(), msgs.end());
      for (auto [c, p] : msgs) {
        vsig[v].push_back(c);
        vsig[v].push_back(p);
      }
      vsig[v].push_back(static_cast<long>(g.rv_colour[v]));
    }
    g.rv_colour = colours_from_keys(vsig);

    std::size_t now = count_colours(g.rv_colour) + count_colours(g.factor_colour);
    if (now == groups) break;
    groups = now;
  }
  g.rv_classes = classes_of(g.rv_colour);
  g.factor_classes = classes_of(g.factor_colour);
}

inline std::vector<std::size_t> initial_rv_colours(const FactorGraph& fg) {
  std::vector<std::pair<std::vector<std::string>, long>> keys;
  for (std::size_t v = 0; v < fg.num_randvars(); ++v) {
    auto it = fg.evidence().find(v);
    keys.push_back({fg.randvar(v).range.labels(), it == fg.evidence().end() ? -1L : static_cast<long>(it->second)});
  }
  return colours_from_keys(keys);
}

}  // namespace detail

/// Colour key: range and observed label (if any).
inline std::vector<std::size_t> initial_rv_colours(const FactorGraph& fg) { return detail::initial_rv_colours(fg); }

/// Colour key: argument ranges and the potentials in canonical row order.
inline std::vector<std::size_t> initial_factor_colours_cp(const FactorGraph& fg) {
  std::vector<std::pair<std::vector<Range>, std::vector<Rational>>> keys;
  for (const auto& f : fg.factors()) keys.push_back({f.table.ranges(), f.table.potentials()});
  return detail::colours_from_keys(keys);
}

struct AcpFactorColours {
  std::vector<std::size_t> colour;
  std::vector<ArgPermutation> rearrangements;
};

/// Factors equal up to argument order share a colour; each is rearranged (at
/// most once) to match the first factor of its colour.
inline AcpFactorColours initial_factor_colours_acp(const FactorGraph& fg, const OrderFreeOptions& options = {}) {
  AcpFactorColours out;
  struct Rep {
    PotentialTable table;
    std::size_t colour;
  };
  std::map<OrderFreeSignature, std::vector<Rep>> buckets;
  std::size_t next = 0;
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    const PotentialTable& t = fg.factor(f).table;
    auto& reps = buckets[order_free_signature(t)];
    std::optional<std::pair<std::size_t, ArgPermutation>> hit;
    for (const auto& rep : reps)
      if (auto pi = match_same_signature(rep.table, t, options)) {
        hit.emplace(rep.colour, std::move(*pi));
        break;
      }
    if (hit) {
      out.colour.push_back(hit->first);
      out.rearrangements.push_back(std::move(hit->second));
    } else {
      reps.push_back({t, next});
      out.colour.push_back(next++);
      out.rearrangements.push_back(ArgPermutation::identity(t.arity()));
    }
  }
  return out;
}

inline Grouping run_cp(const FactorGraph& fg) {
  auto start = std::chrono::steady_clock::now();
  Grouping g;
  g.algorithm = Algorithm::cp;
  g.rv_colour = initial_rv_colours(fg);
  g.factor_colour = initial_factor_colours_cp(fg);
  for (const auto& f : fg.factors()) g.rearrangements.push_back(ArgPermutation::identity(f.args.size()));
  g.annotations.assign(fg.num_factors(), {});
  detail::pass_to_fixpoint(fg, g);
  g.offline_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return g;
}

inline Grouping run_acp(const FactorGraph& fg, const ColourOptions& options = {}) {
  auto start = std::chrono::steady_clock::now();
  Grouping g;
  g.algorithm = Algorithm::acp;
  g.rv_colour = initial_rv_colours(fg);
  auto init = initial_factor_colours_acp(fg, options.order_free);
  g.factor_colour = std::move(init.colour);
  g.rearrangements = std::move(init.rearrangements);
  g.annotations.resize(fg.num_factors());
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    std::vector<std::size_t> degrees;
    for (auto v : rearranged_args(fg, g, f)) degrees.push_back(fg.degree(v));
    g.annotations[f] = choose_commutative_subset(rearranged_table(fg, g, f), degrees);
  }
  detail::pass_to_fixpoint(fg, g);
  g.offline_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return g;
}

inline Grouping run_colour_passing(const FactorGraph& fg, Algorithm a, const ColourOptions& options = {}) {
  return a == Algorithm::cp ? run_cp(fg) : run_acp(fg, options);
}

/// Continues refinement after giving each listed node a colour of its own.
inline Grouping refine(const FactorGraph& fg, Grouping g, const std::vector<std::size_t>& shatter_rvs,
                       const std::vector<std::size_t>& shatter_factors) {
  std::size_t next = 0;
  for (auto c : g.rv_colour) next = std::max(next, c + 1);
  for (auto v : shatter_rvs) g.rv_colour[v] = next++;
  next = 0;
  for (auto c : g.factor_colour) next = std::max(next, c + 1);
  for (auto f : shatter_factors) g.factor_colour[f] = next++;
  detail::pass_to_fixpoint(fg, g);
  return g;
}

}  // namespace acp
