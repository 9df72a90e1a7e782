#pragma once

// Propositional factor graphs, parametric factor graphs and grounding.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "acp/error.hpp"
#include "acp/histogram.hpp"
#include "acp/rational.hpp"

namespace acp {

/// Ordered list of distinct labels. Copies share storage; comparison is by content.
class Range {
 public:
  Range() : labels_(std::make_shared<const std::vector<std::string>>()) {}
  explicit Range(std::vector<std::string> labels) {
    if (labels.empty()) fail(ErrorKind::invalid_argument, "range must not be empty");
    std::set<std::string> seen;
    for (const auto& l : labels)
      if (!seen.insert(l).second) fail(ErrorKind::invalid_argument, "duplicate range label '" + l + "'");
    labels_ = std::make_shared<const std::vector<std::string>>(std::move(labels));
  }

  static Range boolean() { return Range({"true", "false"}); }

  std::size_t size() const { return labels_->size(); }
  const std::string& label(std::size_t i) const { return (*labels_)[i]; }
  const std::vector<std::string>& labels() const { return *labels_; }

  std::optional<std::uint32_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_->size(); ++i)
      if ((*labels_)[i] == label) return static_cast<std::uint32_t>(i);
    return std::nullopt;
  }

  friend bool operator==(const Range& a, const Range& b) {
    return a.labels_ == b.labels_ || *a.labels_ == *b.labels_;
  }
  friend bool operator<(const Range& a, const Range& b) { return *a.labels_ < *b.labels_; }

 private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

/// Row-major table over per-argument ranges; the first argument varies slowest.
class PotentialTable {
 public:
  PotentialTable() = default;
  PotentialTable(std::vector<Range> ranges, std::vector<Rational> potentials)
      : ranges_(std::move(ranges)), potentials_(std::move(potentials)) {
    strides_.assign(ranges_.size(), 1);
    std::size_t rows = 1;
    for (std::size_t i = ranges_.size(); i-- > 0;) {
      strides_[i] = rows;
      rows *= ranges_[i].size();
    }
    if (potentials_.size() != rows)
      fail(ErrorKind::missing_row, "table has " + std::to_string(potentials_.size()) + " potentials, expected " +
                                       std::to_string(rows));
    for (std::size_t r = 0; r < rows; ++r)
      if (potentials_[r] <= 0)
        fail(ErrorKind::non_positive_potential,
             "potential " + format_rational(potentials_[r]) + " at " + describe_row(r));
  }

  std::size_t arity() const { return ranges_.size(); }
  std::size_t rows() const { return potentials_.size(); }
  const Range& range(std::size_t i) const { return ranges_[i]; }
  const std::vector<Range>& ranges() const { return ranges_; }
  const std::vector<Rational>& potentials() const { return potentials_; }
  const Rational& potential(std::size_t row) const { return potentials_[row]; }
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  std::size_t row_of(std::span<const std::uint32_t> assignment) const {
    std::size_t row = 0;
    for (std::size_t i = 0; i < assignment.size(); ++i) row += assignment[i] * strides_[i];
    return row;
  }

  std::vector<std::uint32_t> assignment_of(std::size_t row) const {
    std::vector<std::uint32_t> a(ranges_.size());
    for (std::size_t i = 0; i < ranges_.size(); ++i) {
      a[i] = static_cast<std::uint32_t>(row / strides_[i]);
      row %= strides_[i];
    }
    return a;
  }

  std::string describe_row(std::size_t row) const {
    auto a = assignment_of(row);
    std::string out = "(";
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out += ',';
      out += ranges_[i].label(a[i]);
    }
    return out + ")";
  }

  friend bool operator==(const PotentialTable& a, const PotentialTable& b) {
    return a.ranges_ == b.ranges_ && a.potentials_ == b.potentials_;
  }

 private:
  std::vector<Range> ranges_;
  std::vector<std::size_t> strides_;
  std::vector<Rational> potentials_;
};

struct RandVar {
  std::string name;
  Range range;
};

struct Factor {
  std::string name;
  std::vector<std::string> args;
  PotentialTable table;
};

/// Validates an unordered row list into a canonical table.
inline PotentialTable build_table(const std::vector<Range>& ranges,
                                  const std::vector<std::pair<std::vector<std::string>, Rational>>& rows) {
  std::size_t total = 1;
  for (const auto& r : ranges) total *= r.size();
  std::vector<std::optional<Rational>> slots(total);
  PotentialTable shape(ranges, std::vector<Rational>(total, Rational(1)));
  for (const auto& [labels, value] : rows) {
    if (labels.size() != ranges.size())
      fail(ErrorKind::invalid_argument, "assignment has " + std::to_string(labels.size()) + " labels, expected " +
                                            std::to_string(ranges.size()));
    std::vector<std::uint32_t> a(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto idx = ranges[i].index_of(labels[i]);
      if (!idx) fail(ErrorKind::invalid_argument, "label '" + labels[i] + "' not in range of argument " + std::to_string(i));
      a[i] = *idx;
    }
    std::size_t row = shape.row_of(a);
    if (slots[row]) fail(ErrorKind::duplicate_row, "assignment " + shape.describe_row(row) + " given twice");
    if (value <= 0)
      fail(ErrorKind::non_positive_potential, "potential " + format_rational(value) + " at " + shape.describe_row(row));
    slots[row] = value;
  }
  std::vector<Rational> potentials(total);
  for (std::size_t r = 0; r < total; ++r) {
    if (!slots[r]) fail(ErrorKind::missing_row, "no potential for assignment " + shape.describe_row(r));
    potentials[r] = *slots[r];
  }
  return PotentialTable(ranges, std::move(potentials));
}

class FactorGraph {
 public:
  std::size_t add_randvar(const std::string& name, Range range) {
    if (rv_index_.count(name)) fail(ErrorKind::name_collision, "randvar '" + name + "' declared twice");
    rv_index_.emplace(name, randvars_.size());
    randvars_.push_back({name, std::move(range)});
    incident_.emplace_back();
    return randvars_.size() - 1;
  }

  std::size_t add_factor(const std::string& name, const std::vector<std::string>& args, PotentialTable table) {
    if (factor_index_.count(name)) fail(ErrorKind::name_collision, "factor '" + name + "' declared twice");
    if (args.size() != table.arity())
      fail(ErrorKind::invalid_argument, "factor '" + name + "' has " + std::to_string(args.size()) +
                                            " args but a table of arity " + std::to_string(table.arity()));
    std::vector<std::size_t> ids;
    for (std::size_t p = 0; p < args.size(); ++p) {
      std::size_t v = randvar_id(args[p]);
      if (std::find(ids.begin(), ids.end(), v) != ids.end())
        fail(ErrorKind::invalid_argument, "factor '" + name + "' lists '" + args[p] + "' twice");
      if (!(randvars_[v].range == table.range(p)))
        fail(ErrorKind::invalid_argument, "factor '" + name + "' argument '" + args[p] + "' has a mismatched range");
      ids.push_back(v);
    }
    std::size_t f = factors_.size();
    for (std::size_t p = 0; p < ids.size(); ++p) incident_[ids[p]].push_back({f, p});
    factor_index_.emplace(name, f);
    factors_.push_back({name, args, std::move(table)});
    factor_args_.push_back(std::move(ids));
    return f;
  }

  void set_evidence(const std::string& randvar, const std::string& label) {
    std::size_t v = randvar_id(randvar);
    auto idx = randvars_[v].range.index_of(label);
    if (!idx) fail(ErrorKind::invalid_argument, "evidence label '" + label + "' not in range of '" + randvar + "'");
    evidence_[v] = *idx;
  }
  void clear_evidence() { evidence_.clear(); }

  const std::vector<RandVar>& randvars() const { return randvars_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const RandVar& randvar(std::size_t i) const { return randvars_[i]; }
  const Factor& factor(std::size_t i) const { return factors_[i]; }
  std::size_t num_randvars() const { return randvars_.size(); }
  std::size_t num_factors() const { return factors_.size(); }

  /// Randvar indices of a factor's arguments, in argument order.
  const std::vector<std::size_t>& factor_args(std::size_t f) const { return factor_args_[f]; }
  /// (factor, position) pairs in which a randvar occurs.
  const std::vector<std::pair<std::size_t, std::size_t>>& incident(std::size_t v) const { return incident_[v]; }
  std::size_t degree(std::size_t v) const { return incident_[v].size(); }

  const std::map<std::size_t, std::uint32_t>& evidence() const { return evidence_; }

  std::optional<std::size_t> find_randvar(std::string_view name) const {
    auto it = rv_index_.find(std::string(name));
    if (it == rv_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_factor(std::string_view name) const {
    auto it = factor_index_.find(std::string(name));
    if (it == factor_index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t randvar_id(std::string_view name) const {
    auto v = find_randvar(name);
    if (!v) fail(ErrorKind::unknown_randvar, "unknown randvar '" + std::string(name) + "'");
    return *v;
  }

  std::size_t total_rows() const {
    std::size_t n = 0;
    for (const auto& f : factors_) n += f.table.rows();
    return n;
  }

 private:
  std::vector<RandVar> randvars_;
  std::vector<Factor> factors_;
  std::vector<std::vector<std::size_t>> factor_args_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> incident_;
  std::unordered_map<std::string, std::size_t> rv_index_, factor_index_;
  std::map<std::size_t, std::uint32_t> evidence_;
};

// ---------------------------------------------------------------------------
// Parametric model

struct Logvar {
  std::string name;
  std::vector<std::string> domain;
};

/// A PRV's members are row-major over its logvars' domains.
struct Prv {
  std::string name;
  Range range;
  std::vector<std::string> logvars;
  std::vector<std::string> members;
};

/// A PRV occurrence in a parfactor. `logvars` binds each of the PRV's logvar
/// positions to a logvar of the parfactor; the bound logvar must have the same
/// constants as the PRV's declared one.
struct ParfactorArg {
  std::string prv;
  std::vector<std::string> logvars;
};

struct CrvSpec {
  std::size_t arg_index = 0;
  std::string counted_logvar;
};

/// Table is row-major over args; a counted arg ranges over histograms in
/// canonical order. Members are row-major over `parfactor_logvars`.
struct Parfactor {
  std::string name;
  std::vector<ParfactorArg> args;
  std::optional<CrvSpec> crv;
  std::vector<Rational> potentials;
  std::vector<std::string> members;
};

class ParfactorGraph {
 public:
  std::vector<Logvar> logvars;
  std::vector<Prv> prvs;
  std::vector<Parfactor> parfactors;
  /// Ground randvar name -> observed label.
  std::map<std::string, std::string> evidence;

  const Logvar& logvar(std::string_view name) const {
    for (const auto& l : logvars)
      if (l.name == name) return l;
    fail(ErrorKind::invalid_argument, "unknown logvar '" + std::string(name) + "'");
  }
  const Prv& prv(std::string_view name) const {
    for (const auto& p : prvs)
      if (p.name == name) return p;
    fail(ErrorKind::invalid_argument, "unknown PRV '" + std::string(name) + "'");
  }

  /// Non-counted logvars of a parfactor, in order of first appearance.
  std::vector<std::string> parfactor_logvars(const Parfactor& pf) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < pf.args.size(); ++i)
      for (const auto& l : pf.args[i].logvars) {
        if (pf.crv && pf.crv->arg_index == i && pf.crv->counted_logvar == l) continue;
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
      }
    return out;
  }

  /// Number of values of each arg (histograms for the counted one).
  std::vector<std::size_t> arg_dims(const Parfactor& pf) const {
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < pf.args.size(); ++i) {
      const Prv& p = prv(pf.args[i].prv);
      if (pf.crv && pf.crv->arg_index == i)
        dims.push_back(count_histograms(logvar(pf.crv->counted_logvar).domain.size(), p.range.size()));
      else
        dims.push_back(p.range.size());
    }
    return dims;
  }

  std::size_t total_rows() const {
    std::size_t n = 0;
    for (const auto& pf : parfactors) n += pf.potentials.size();
    return n;
  }

  /// Checks every structural invariant; throws on the first violation.
  void validate() const {
    std::set<std::string> names;
    for (const auto& l : logvars) {
      if (!names.insert(l.name).second) fail(ErrorKind::name_collision, "logvar '" + l.name + "' declared twice");
      if (l.domain.empty()) fail(ErrorKind::invalid_argument, "logvar '" + l.name + "' has an empty domain");
      std::set<std::string> consts(l.domain.begin(), l.domain.end());
      if (consts.size() != l.domain.size())
        fail(ErrorKind::invalid_argument, "logvar '" + l.name + "' repeats a constant");
    }
    names.clear();
    std::set<std::string> ground;
    bool two_logvar_prv = false;
    for (const auto& p : prvs) {
      if (!names.insert(p.name).second) fail(ErrorKind::name_collision, "PRV '" + p.name + "' declared twice");
      if (p.logvars.size() > 2) fail(ErrorKind::fragment_violation, "PRV '" + p.name + "' has more than two logvars");
      two_logvar_prv |= p.logvars.size() == 2;
      std::size_t n = 1;
      for (const auto& l : p.logvars) n *= logvar(l).domain.size();
      if (p.members.size() != n)
        fail(ErrorKind::inconsistent_members, "PRV '" + p.name + "' lists " + std::to_string(p.members.size()) +
                                                  " members, its logvars give " + std::to_string(n));
      for (const auto& m : p.members)
        if (!ground.insert(m).second) fail(ErrorKind::name_collision, "randvar '" + m + "' grounds twice");
    }
    names.clear();
    for (const auto& pf : parfactors) {
      if (!names.insert(pf.name).second) fail(ErrorKind::name_collision, "parfactor '" + pf.name + "' declared twice");
      if (pf.args.empty()) fail(ErrorKind::invalid_argument, "parfactor '" + pf.name + "' has no args");
      for (std::size_t i = 0; i < pf.args.size(); ++i) {
        const auto& a = pf.args[i];
        const Prv& p = prv(a.prv);
        if (a.logvars.size() != p.logvars.size())
          fail(ErrorKind::invalid_argument, "parfactor '" + pf.name + "' binds " + std::to_string(a.logvars.size()) +
                                                " logvars of PRV '" + p.name + "'");
        for (std::size_t k = 0; k < a.logvars.size(); ++k)
          if (logvar(a.logvars[k]).domain != logvar(p.logvars[k]).domain)
            fail(ErrorKind::invalid_argument, "parfactor '" + pf.name + "' binds '" + a.logvars[k] +
                                                  "' whose domain differs from '" + p.logvars[k] + "'");
        if (a.logvars.size() == 2 && a.logvars[0] == a.logvars[1])
          fail(ErrorKind::invalid_argument, "parfactor '" + pf.name + "' binds one logvar twice in '" + p.name + "'");
      }
      if (pf.crv) {
        if (pf.crv->arg_index >= pf.args.size())
          fail(ErrorKind::invalid_argument, "parfactor '" + pf.name + "' counts a missing arg");
        const auto& a = pf.args[pf.crv->arg_index];
        if (a.logvars.size() != 1 || a.logvars[0] != pf.crv->counted_logvar)
          fail(ErrorKind::invalid_argument,
               "parfactor '" + pf.name + "' must count the single logvar of '" + a.prv + "'");
        for (std::size_t i = 0; i < pf.args.size(); ++i)
          if (i != pf.crv->arg_index)
            for (const auto& l : pf.args[i].logvars)
              if (l == pf.crv->counted_logvar)
                fail(ErrorKind::invalid_argument, "counted logvar of '" + pf.name + "' occurs outside the CRV");
      }
      auto dims = arg_dims(pf);
      std::size_t rows = 1;
      for (auto d : dims) rows *= d;
      if (pf.potentials.size() != rows)
        fail(ErrorKind::missing_row, "parfactor '" + pf.name + "' has " + std::to_string(pf.potentials.size()) +
                                         " potentials, expected " + std::to_string(rows));
      for (const auto& v : pf.potentials)
        if (v <= 0) fail(ErrorKind::non_positive_potential, "parfactor '" + pf.name + "' has potential " + format_rational(v));
      auto lvs = parfactor_logvars(pf);
      std::size_t groundings = 1;
      for (const auto& l : lvs) groundings *= logvar(l).domain.size();
      if (pf.members.size() != groundings)
        fail(ErrorKind::inconsistent_members, "parfactor '" + pf.name + "' lists " + std::to_string(pf.members.size()) +
                                                  " members, its logvars give " + std::to_string(groundings));
      std::size_t all_lvs = lvs.size() + (pf.crv ? 1 : 0);
      if (two_logvar_prv && all_lvs > 2)
        fail(ErrorKind::fragment_violation, "parfactor '" + pf.name + "' has " + std::to_string(all_lvs) +
                                                " logvars alongside a two-logvar PRV");
    }
    for (const auto& [name, label] : evidence) {
      if (!ground.count(name)) fail(ErrorKind::unknown_randvar, "evidence on unknown randvar '" + name + "'");
      for (const auto& p : prvs)
        if (std::find(p.members.begin(), p.members.end(), name) != p.members.end() && !p.range.index_of(label))
          fail(ErrorKind::invalid_argument, "evidence label '" + label + "' not in range of '" + name + "'");
    }
  }
};

namespace detail {

inline std::size_t domain_index(const Logvar& lv, const std::string& constant) {
  auto it = std::find(lv.domain.begin(), lv.domain.end(), constant);
  return static_cast<std::size_t>(it - lv.domain.begin());
}

/// Member of `p` bound by `arg` under a constant index per parfactor logvar.
inline const std::string& bound_member(const ParfactorGraph& g, const Prv& p, const ParfactorArg& arg,
                                       const std::vector<std::string>& pf_lvs, std::span<const std::size_t> consts,
                                       const std::string* counted = nullptr, std::size_t counted_const = 0) {
  std::size_t index = 0;
  for (std::size_t k = 0; k < arg.logvars.size(); ++k) {
    std::size_t c;
    if (counted && arg.logvars[k] == *counted) {
      c = counted_const;
    } else {
      auto pos = std::find(pf_lvs.begin(), pf_lvs.end(), arg.logvars[k]) - pf_lvs.begin();
      c = consts[pos];
    }
    index = index * g.logvar(p.logvars[k]).domain.size() + c;
  }
  return p.members[index];
}

}  // namespace detail

inline std::vector<std::string> ground_prv(const Prv& prv) { return prv.members; }

/// Ground factors of one parfactor, in member order.
inline std::vector<Factor> ground_parfactor(const ParfactorGraph& g, const Parfactor& pf) {
  auto lvs = g.parfactor_logvars(pf);
  std::vector<std::size_t> sizes;
  std::size_t groundings = 1;
  for (const auto& l : lvs) {
    sizes.push_back(g.logvar(l).domain.size());
    groundings *= sizes.back();
  }
  if (pf.members.size() != groundings)
    fail(ErrorKind::inconsistent_members, "parfactor '" + pf.name + "' lists " + std::to_string(pf.members.size()) +
                                              " members, its logvars give " + std::to_string(groundings));

  auto dims = g.arg_dims(pf);
  std::vector<std::size_t> pf_strides(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) pf_strides[i - 1] = pf_strides[i] * dims[i];

  // Ground argument layout: the counted arg expands in place into |D| args.
  std::size_t counted_n = pf.crv ? g.logvar(pf.crv->counted_logvar).domain.size() : 0;
  std::vector<Range> ranges;
  for (std::size_t i = 0; i < pf.args.size(); ++i) {
    const Prv& p = g.prv(pf.args[i].prv);
    std::size_t copies = (pf.crv && pf.crv->arg_index == i) ? counted_n : 1;
    for (std::size_t c = 0; c < copies; ++c) ranges.push_back(p.range);
  }
  std::size_t rows = 1;
  for (const auto& r : ranges) rows *= r.size();

  // The table is the same for every grounding.
  PotentialTable shape(ranges, std::vector<Rational>(rows, Rational(1)));
  std::vector<Rational> potentials(rows);
  std::size_t range_size = pf.crv ? g.prv(pf.args[pf.crv->arg_index].prv).range.size() : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto a = shape.assignment_of(r);
    std::size_t row = 0, pos = 0;
    for (std::size_t i = 0; i < pf.args.size(); ++i) {
      if (pf.crv && pf.crv->arg_index == i) {
        Histogram h(range_size, 0);
        for (std::size_t c = 0; c < counted_n; ++c) ++h[a[pos++]];
        row += rank_histogram(h) * pf_strides[i];
      } else {
        row += a[pos++] * pf_strides[i];
      }
    }
    potentials[r] = pf.potentials[row];
  }
  PotentialTable table(ranges, std::move(potentials));

  std::vector<Factor> out;
  out.reserve(groundings);
  std::vector<std::size_t> consts(lvs.size(), 0);
  for (std::size_t m = 0; m < groundings; ++m) {
    std::size_t rest = m;
    for (std::size_t k = lvs.size(); k-- > 0;) {
      consts[k] = rest % sizes[k];
      rest /= sizes[k];
    }
    Factor f{pf.members[m], {}, table};
    for (std::size_t i = 0; i < pf.args.size(); ++i) {
      const Prv& p = g.prv(pf.args[i].prv);
      if (pf.crv && pf.crv->arg_index == i) {
        for (std::size_t c = 0; c < counted_n; ++c)
          f.args.push_back(detail::bound_member(g, p, pf.args[i], lvs, consts, &pf.crv->counted_logvar, c));
      } else {
        f.args.push_back(detail::bound_member(g, p, pf.args[i], lvs, consts));
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

inline FactorGraph ground_pfg(const ParfactorGraph& g) {
  g.validate();
  FactorGraph fg;
  for (const auto& p : g.prvs)
    for (const auto& m : p.members) fg.add_randvar(m, p.range);
  for (const auto& pf : g.parfactors)
    for (auto& f : ground_parfactor(g, pf)) fg.add_factor(f.name, f.args, std::move(f.table));
  for (const auto& [name, label] : g.evidence) fg.set_evidence(name, label);
  return fg;
}

// ---------------------------------------------------------------------------
// Exact semantics by enumeration (small graphs only)

inline Rational unnormalized_weight(const FactorGraph& fg, std::span<const std::uint32_t> assignment) {
  if (assignment.size() != fg.num_randvars())
    fail(ErrorKind::invalid_argument, "assignment must cover every randvar");
  Rational w = 1;
  std::vector<std::uint32_t> local;
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    const auto& args = fg.factor_args(f);
    local.resize(args.size());
    for (std::size_t i = 0; i < args.size(); ++i) local[i] = assignment[args[i]];
    w *= fg.factor(f).table.potential(fg.factor(f).table.row_of(local));
  }
  return w;
}

/// Calls `visit` on every full assignment in range-lexicographic order.
template <class Visit>
void for_each_assignment(const FactorGraph& fg, Visit&& visit) {
  std::vector<std::uint32_t> a(fg.num_randvars(), 0);
  while (true) {
    visit(std::as_const(a));
    std::size_t i = a.size();
    while (i > 0) {
      --i;
      if (++a[i] < fg.randvar(i).range.size()) break;
      a[i] = 0;
      if (i == 0) return;
    }
    if (a.empty()) return;
  }
}

inline Rational partition_function(const FactorGraph& fg) {
  Rational z = 0;
  for_each_assignment(fg, [&](const std::vector<std::uint32_t>& a) { z += unnormalized_weight(fg, a); });
  return z;
}

inline Rational joint_probability(const FactorGraph& fg, std::span<const std::uint32_t> assignment) {
  return unnormalized_weight(fg, assignment) / partition_function(fg);
}

/// Label-keyed convenience overload.
inline Rational joint_probability(const FactorGraph& fg, const std::map<std::string, std::string>& assignment) {
  std::vector<std::uint32_t> a(fg.num_randvars());
  if (assignment.size() != a.size()) fail(ErrorKind::invalid_argument, "assignment must cover every randvar");
  for (const auto& [name, label] : assignment) {
    std::size_t v = fg.randvar_id(name);
    auto idx = fg.randvar(v).range.index_of(label);
    if (!idx) fail(ErrorKind::invalid_argument, "label '" + label + "' not in range of '" + name + "'");
    a[v] = *idx;
  }
  return joint_probability(fg, a);
}

}  // namespace acp
