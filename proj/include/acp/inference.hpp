#pragma once

// Marginal queries. Ground variable elimination is the reference; lifted
// variable elimination answers the same queries on a parfactor graph and
// grounds a logvar domain whenever no lifted step applies. Both work on
// natural-log potentials.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "acp/core_model.hpp"
#include "acp/io.hpp"

namespace acp {

struct Query {
  std::string target;
  /// Randvar -> observed label, added to the evidence stored in the model.
  std::map<std::string, std::string> evidence;
};

struct Marginal {
  std::string target;
  std::vector<std::string> labels;
  std::vector<double> probabilities;

  double at(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return probabilities[i];
    fail(ErrorKind::invalid_argument, "label '" + std::string(label) + "' not in the marginal of '" + target + "'");
  }
};

/// {"target": ..., "distribution": {label: p}}
inline Json marginal_json(const Marginal& m) {
  Json dist = Json::object();
  for (std::size_t i = 0; i < m.labels.size(); ++i) dist[m.labels[i]] = m.probabilities[i];
  return Json{{"target", m.target}, {"distribution", dist}};
}

/// Largest |a - b| / max(|a|, |b|) over labels; NaN propagates.
inline double max_relative_error(const Marginal& a, const Marginal& b) {
  if (a.labels != b.labels) fail(ErrorKind::invalid_argument, "marginals over different labels");
  double worst = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    double x = a.probabilities[i], y = b.probabilities[i];
    double scale = std::max(std::abs(x), std::abs(y));
    double e = scale > 0 ? std::abs(x - y) / scale : (x == y ? 0.0 : std::abs(x - y));
    if (!(e <= worst)) worst = e;
  }
  return worst;
}

inline bool marginals_agree(const Marginal& a, const Marginal& b, double tolerance = 1e-9) {
  return a.labels == b.labels && max_relative_error(a, b) <= tolerance;
}

namespace detail {

inline double log_of(const mpz_class& z) {
  long e = 0;
  double m = mpz_get_d_2exp(&e, z.get_mpz_t());
  return std::log(m) + static_cast<double>(e) * std::log(2.0);
}

inline double log_rational(const Rational& q) { return log_of(q.get_num()) - log_of(q.get_den()); }

inline std::vector<double> log_table(const std::vector<Rational>& potentials) {
  std::vector<double> out;
  out.reserve(potentials.size());
  for (const auto& p : potentials) out.push_back(log_rational(p));
  return out;
}

inline std::vector<std::size_t> row_strides(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (std::size_t i = dims.size(); i-- > 1;) s[i - 1] = s[i] * dims[i];
  return s;
}

inline std::size_t product_of(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

/// One factor of a log-space product: its table, its stride along each
/// result axis (0 where it does not depend on the axis) and an exponent.
struct Term {
  const std::vector<double>* table;
  std::vector<std::size_t> strides;
  double weight = 1.0;
};

inline std::vector<double> product(const std::vector<std::size_t>& dims, const std::vector<Term>& terms) {
  std::size_t rows = product_of(dims);
  std::vector<double> out(rows);
  std::vector<std::size_t> a(dims.size(), 0), off(terms.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) s += terms[t].weight * (*terms[t].table)[off[t]];
    out[r] = s;
    for (std::size_t i = dims.size(); i-- > 0;) {
      if (++a[i] < dims[i]) {
        for (std::size_t t = 0; t < terms.size(); ++t) off[t] += terms[t].strides[i];
        break;
      }
      for (std::size_t t = 0; t < terms.size(); ++t) off[t] -= terms[t].strides[i] * (dims[i] - 1);
      a[i] = 0;
    }
  }
  return out;
}

/// log sum_v exp(t[.., v, ..] + logw[v]) along `axis`; `logw` may be empty.
inline std::vector<double> sum_axis(const std::vector<double>& t, const std::vector<std::size_t>& dims, std::size_t axis,
                                    const std::vector<double>& logw = {}) {
  std::size_t outer = 1, inner = 1, d = dims[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= dims[i];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  std::vector<double> out(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < d; ++v) m = std::max(m, t[(o * d + v) * inner + in] + (logw.empty() ? 0.0 : logw[v]));
      double s = 0;
      for (std::size_t v = 0; v < d; ++v) s += std::exp(t[(o * d + v) * inner + in] + (logw.empty() ? 0.0 : logw[v]) - m);
      out[o * inner + in] = m + std::log(s);
    }
  return out;
}

inline std::vector<double> slice_axis(const std::vector<double>& t, const std::vector<std::size_t>& dims, std::size_t axis,
                                      std::size_t value) {
  std::size_t outer = 1, inner = 1, d = dims[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= dims[i];
  for (std::size_t i = axis + 1; i < dims.size(); ++i) inner *= dims[i];
  std::vector<double> out(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) out[o * inner + in] = t[(o * d + value) * inner + in];
  return out;
}

inline std::vector<double> normalize_log(const std::vector<double>& logp) {
  double m = *std::max_element(logp.begin(), logp.end());
  std::vector<double> p(logp.size());
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] = std::exp(logp[i] - m);
  for (auto& x : p) x /= s;
  return p;
}

struct LogFactor {
  std::vector<std::size_t> vars;
  std::vector<double> table;
};

/// Product of `fs` with `var` summed out.
inline LogFactor eliminate_var(const std::vector<const LogFactor*>& fs, std::size_t var,
                               const std::vector<std::size_t>& card) {
  std::vector<std::size_t> vars;
  for (const auto* f : fs)
    for (auto v : f->vars)
      if (v != var && std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  vars.push_back(var);
  std::vector<std::size_t> dims;
  for (auto v : vars) dims.push_back(card[v]);
  std::vector<Term> terms;
  for (const auto* f : fs) {
    std::vector<std::size_t> fd;
    for (auto v : f->vars) fd.push_back(card[v]);
    auto fs_strides = row_strides(fd);
    Term t{&f->table, std::vector<std::size_t>(vars.size(), 0), 1.0};
    for (std::size_t j = 0; j < f->vars.size(); ++j)
      t.strides[std::find(vars.begin(), vars.end(), f->vars[j]) - vars.begin()] = fs_strides[j];
    terms.push_back(std::move(t));
  }
  auto joint = product(dims, terms);
  LogFactor out{vars, sum_axis(joint, dims, dims.size() - 1)};
  out.vars.pop_back();
  return out;
}

}  // namespace detail

/// Dense sum-product over the ground graph, eliminating in min-degree order.
inline Marginal ve_marginal(const FactorGraph& fg, const Query& q) {
  auto target = fg.find_randvar(q.target);
  if (!target) fail(ErrorKind::unknown_randvar, "unknown randvar '" + q.target + "'");
  std::map<std::size_t, std::uint32_t> evidence = fg.evidence();
  for (const auto& [name, label] : q.evidence) {
    std::size_t v = fg.randvar_id(name);
    auto idx = fg.randvar(v).range.index_of(label);
    if (!idx) fail(ErrorKind::invalid_argument, "evidence label '" + label + "' not in range of '" + name + "'");
    auto it = evidence.find(v);
    if (it != evidence.end() && it->second != *idx)
      fail(ErrorKind::invalid_argument, "conflicting evidence on '" + name + "'");
    evidence[v] = *idx;
  }
  if (evidence.count(*target)) fail(ErrorKind::evidence_on_target, "query target '" + q.target + "' is observed");

  std::size_t n = fg.num_randvars();
  std::vector<std::size_t> card(n);
  for (std::size_t v = 0; v < n; ++v) card[v] = fg.randvar(v).range.size();

  std::vector<detail::LogFactor> factors;
  std::vector<bool> alive;
  std::vector<std::vector<std::size_t>> holding(n);
  auto add = [&](detail::LogFactor f) {
    for (auto v : f.vars) holding[v].push_back(factors.size());
    factors.push_back(std::move(f));
    alive.push_back(true);
  };
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    detail::LogFactor lf{fg.factor_args(f), detail::log_table(fg.factor(f).table.potentials())};
    std::vector<std::size_t> dims;
    for (auto v : lf.vars) dims.push_back(card[v]);
    for (std::size_t i = lf.vars.size(); i-- > 0;) {
      auto it = evidence.find(lf.vars[i]);
      if (it == evidence.end()) continue;
      lf.table = detail::slice_axis(lf.table, dims, i, it->second);
      lf.vars.erase(lf.vars.begin() + static_cast<long>(i));
      dims.erase(dims.begin() + static_cast<long>(i));
    }
    if (!lf.vars.empty()) add(std::move(lf));
  }

  std::set<std::size_t> remaining;
  for (const auto& f : factors)
    for (auto v : f.vars)
      if (v != *target) remaining.insert(v);

  while (!remaining.empty()) {
    std::size_t best = 0, best_degree = 0;
    double best_size = 0;
    bool found = false;
    for (auto v : remaining) {
      std::set<std::size_t> nb;
      for (auto f : holding[v])
        if (alive[f]) nb.insert(factors[f].vars.begin(), factors[f].vars.end());
      nb.erase(v);
      double size = card[v];
      for (auto u : nb) size *= static_cast<double>(card[u]);
      if (!found || nb.size() < best_degree || (nb.size() == best_degree && size < best_size)) {
        found = true;
        best = v;
        best_degree = nb.size();
        best_size = size;
      }
    }
    std::vector<const detail::LogFactor*> fs;
    std::vector<std::size_t> ids;
    for (auto f : holding[best])
      if (alive[f] && std::find(ids.begin(), ids.end(), f) == ids.end()) {
        ids.push_back(f);
        fs.push_back(&factors[f]);
      }
    auto merged = detail::eliminate_var(fs, best, card);
    for (auto f : ids) alive[f] = false;
    remaining.erase(best);
    if (!merged.vars.empty()) add(std::move(merged));
  }

  std::vector<double> logp(card[*target], 0.0);
  for (std::size_t f = 0; f < factors.size(); ++f)
    if (alive[f])
      for (std::size_t x = 0; x < logp.size(); ++x) logp[x] += factors[f].table[x];
  const auto& range = fg.randvar(*target).range;
  return Marginal{q.target, range.labels(), detail::normalize_log(logp)};
}

// ---------------------------------------------------------------------------
// Lifted variable elimination

struct LveOptions {
  /// Ground every logvar domain before eliminating.
  bool force_ground = false;
};

struct LveStats {
  std::size_t splits = 0;
  std::size_t groundings = 0;
  std::size_t multiplications = 0;
  std::size_t count_conversions = 0;
  std::size_t sum_outs = 0;
  std::size_t crv_sum_outs = 0;
  std::size_t max_table = 0;
  /// One line per grounding fallback.
  std::vector<std::string> log;
};

namespace detail::lve {

/// A subset of one logvar domain. Domains are split as constants get singled out.
struct DomainSet {
  std::size_t type;
  std::vector<std::size_t> consts;
};

/// The instances of a PRV whose logvar positions range over the given sets.
struct Piece {
  std::size_t orig;
  std::vector<std::size_t> pos;
  std::size_t range;
  enum class Obs { none, uniform, mixed } obs = Obs::none;
  std::uint32_t label = 0;
};

struct Arg {
  std::size_t piece;
  /// Local logvar per position; -1 where the position is a single constant.
  std::vector<int> lv;
  bool counted = false;
};

/// prod over groundings of the non-counted logvars of exp(table[args]).
/// An empty table marks a structure-only copy used for planning.
struct Pf {
  std::vector<std::size_t> lvs;
  std::vector<Arg> args;
  std::vector<double> table;
};

inline int counted_lv(const Arg& a) {
  for (int l : a.lv)
    if (l >= 0) return l;
  return -1;
}

class Engine {
 public:
  Engine(const ParfactorGraph& g, const std::map<std::string, std::string>& extra_evidence, LveStats& stats)
      : g_(g), stats_(stats) {
    std::map<std::vector<std::string>, std::size_t> type_of_domain;
    std::map<std::string, std::size_t> type_of_lv;
    for (const auto& l : g.logvars) {
      auto [it, fresh] = type_of_domain.emplace(l.domain, types_.size());
      if (fresh) {
        types_.push_back(l.domain);
        std::vector<std::size_t> all(l.domain.size());
        std::iota(all.begin(), all.end(), 0);
        type_sets_.push_back({new_set({it->second, all})});
      }
      type_of_lv[l.name] = it->second;
    }
    for (std::size_t p = 0; p < g.prvs.size(); ++p) {
      std::vector<std::size_t> t;
      for (const auto& l : g.prvs[p].logvars) t.push_back(type_of_lv.at(l));
      prv_types_.push_back(t);
      for (std::size_t m = 0; m < g.prvs[p].members.size(); ++m) member_of_[g.prvs[p].members[m]] = {p, m};
    }
    auto observe = [&](const std::string& name, const std::string& label) {
      auto it = member_of_.find(name);
      if (it == member_of_.end()) fail(ErrorKind::unknown_randvar, "unknown randvar '" + name + "'");
      auto idx = g.prvs[it->second.first].range.index_of(label);
      if (!idx) fail(ErrorKind::invalid_argument, "evidence label '" + label + "' not in range of '" + name + "'");
      auto prev = evidence_.find(name);
      if (prev != evidence_.end() && prev->second != *idx)
        fail(ErrorKind::invalid_argument, "conflicting evidence on '" + name + "'");
      evidence_[name] = *idx;
    };
    for (const auto& [name, label] : g.evidence) observe(name, label);
    for (const auto& [name, label] : extra_evidence) observe(name, label);

    for (const auto& pf : g.parfactors) {
      auto names = g.parfactor_logvars(pf);
      if (pf.crv) names.push_back(pf.crv->counted_logvar);
      Pf out;
      for (const auto& n : names) out.lvs.push_back(type_sets_[type_of_lv.at(n)][0]);
      for (std::size_t i = 0; i < pf.args.size(); ++i) {
        std::size_t orig = prv_index(pf.args[i].prv);
        std::vector<std::size_t> pos;
        for (auto t : prv_types_[orig]) pos.push_back(type_sets_[t][0]);
        Arg a{piece(orig, pos), {}, pf.crv && pf.crv->arg_index == i};
        for (const auto& l : pf.args[i].logvars)
          a.lv.push_back(static_cast<int>(std::find(names.begin(), names.end(), l) - names.begin()));
        out.args.push_back(std::move(a));
      }
      out.table = log_table(pf.potentials);
      add_pf(std::move(out));
    }
  }

  Marginal run(const std::string& target, const LveOptions& options) {
    auto it = member_of_.find(target);
    if (it == member_of_.end()) fail(ErrorKind::unknown_randvar, "unknown randvar '" + target + "'");
    if (evidence_.count(target)) fail(ErrorKind::evidence_on_target, "query target '" + target + "' is observed");
    auto [orig, member] = it->second;

    auto consts = constants_of(orig, member);
    for (std::size_t k = 0; k < consts.size(); ++k) isolate(prv_types_[orig][k], consts[k]);
    std::vector<std::size_t> qpos;
    for (std::size_t k = 0; k < consts.size(); ++k) qpos.push_back(find_set(prv_types_[orig][k], consts[k]));
    query_ = piece(orig, qpos);

    resolve_mixed_evidence();
    absorb_evidence();
    if (options.force_ground)
      for (std::size_t s = 0; s < sets_.size(); ++s)
        if (set_alive_[s] && sets_[s].consts.size() > 1) ground(s);

    eliminate_all();

    std::size_t r = g_.prvs[orig].range.size();
    std::vector<double> logp(r, 0.0);
    for (const auto& slot : pfs_) {
      if (!slot) continue;
      // only the query remains
      for (std::size_t x = 0; x < r; ++x) logp[x] += slot->table[x];
    }
    return Marginal{target, g_.prvs[orig].range.labels(), normalize_log(logp)};
  }

 private:
  const ParfactorGraph& g_;
  LveStats& stats_;
  std::vector<std::vector<std::string>> types_;
  std::vector<std::vector<std::size_t>> type_sets_;
  std::vector<std::vector<std::size_t>> prv_types_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> member_of_;
  std::map<std::string, std::uint32_t> evidence_;
  std::vector<DomainSet> sets_;
  std::vector<bool> set_alive_;
  std::vector<Piece> pieces_;
  std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t> piece_index_;
  std::vector<std::optional<Pf>> pfs_;
  std::vector<std::vector<std::size_t>> occ_;
  std::vector<std::optional<double>> cost_;
  std::vector<bool> cost_valid_;
  std::size_t query_ = 0;

  std::size_t prv_index(const std::string& name) const {
    for (std::size_t p = 0; p < g_.prvs.size(); ++p)
      if (g_.prvs[p].name == name) return p;
    fail(ErrorKind::invalid_argument, "unknown PRV '" + name + "'");
  }

  std::size_t new_set(DomainSet s) {
    sets_.push_back(std::move(s));
    set_alive_.push_back(true);
    return sets_.size() - 1;
  }

  std::size_t size_of(std::size_t s) const { return sets_[s].consts.size(); }

  std::size_t find_set(std::size_t type, std::size_t c) const {
    for (auto s : type_sets_[type])
      if (set_alive_[s] && std::find(sets_[s].consts.begin(), sets_[s].consts.end(), c) != sets_[s].consts.end())
        return s;
    fail(ErrorKind::invalid_argument, "constant outside every domain set");
  }

  std::vector<std::size_t> constants_of(std::size_t orig, std::size_t member) const {
    std::vector<std::size_t> out(prv_types_[orig].size());
    for (std::size_t k = out.size(); k-- > 0;) {
      std::size_t n = types_[prv_types_[orig][k]].size();
      out[k] = member % n;
      member /= n;
    }
    return out;
  }

  template <class Visit>
  void for_each_member(const Piece& p, Visit&& visit) const {
    std::size_t k = p.pos.size();
    std::vector<std::size_t> i(k, 0);
    while (true) {
      std::size_t idx = 0;
      for (std::size_t j = 0; j < k; ++j) idx = idx * types_[prv_types_[p.orig][j]].size() + sets_[p.pos[j]].consts[i[j]];
      if (!visit(g_.prvs[p.orig].members[idx])) return;
      std::size_t j = k;
      while (j > 0) {
        --j;
        if (++i[j] < sets_[p.pos[j]].consts.size()) break;
        i[j] = 0;
        if (j == 0) return;
      }
      if (k == 0) return;
    }
  }

  std::size_t piece(std::size_t orig, const std::vector<std::size_t>& pos) {
    auto key = std::make_pair(orig, pos);
    auto it = piece_index_.find(key);
    if (it != piece_index_.end()) return it->second;
    Piece p{orig, pos, g_.prvs[orig].range.size()};
    if (!evidence_.empty()) {
      bool seen_free = false, seen_obs = false, mixed = false;
      std::uint32_t label = 0;
      for_each_member(p, [&](const std::string& name) {
        auto e = evidence_.find(name);
        if (e == evidence_.end()) {
          seen_free = true;
        } else {
          if (seen_obs && e->second != label) mixed = true;
          seen_obs = true;
          label = e->second;
        }
        mixed |= seen_free && seen_obs;
        return !mixed;
      });
      if (mixed)
        p.obs = Piece::Obs::mixed;
      else if (seen_obs) {
        p.obs = Piece::Obs::uniform;
        p.label = label;
      }
    }
    pieces_.push_back(std::move(p));
    occ_.emplace_back();
    cost_.emplace_back();
    cost_valid_.push_back(false);
    piece_index_.emplace(key, pieces_.size() - 1);
    return pieces_.size() - 1;
  }

  // -- parfactor bookkeeping ------------------------------------------------

  std::vector<std::size_t> dims(const Pf& pf) const {
    std::vector<std::size_t> d;
    for (const auto& a : pf.args) {
      std::size_t r = pieces_[a.piece].range;
      d.push_back(a.counted ? count_histograms(size_of(pf.lvs[counted_lv(a)]), r) : r);
    }
    return d;
  }

  static double rows_of(const std::vector<std::size_t>& d) {
    double n = 1;
    for (auto x : d) n *= static_cast<double>(x);
    return n;
  }

  static std::vector<bool> counted_flags(const Pf& pf) {
    std::vector<bool> c(pf.lvs.size(), false);
    for (const auto& a : pf.args)
      if (a.counted) c[counted_lv(a)] = true;
    return c;
  }

  static bool uses(const Arg& a, int l) { return std::find(a.lv.begin(), a.lv.end(), l) != a.lv.end(); }

  static void erase_logvar(Pf& pf, int l) {
    pf.lvs.erase(pf.lvs.begin() + l);
    for (auto& a : pf.args)
      for (auto& x : a.lv)
        if (x > l) --x;
  }

  /// Singleton logvars become constants; a grounding logvar no arg uses
  /// raises the table to its domain size and disappears.
  void normalize(Pf& pf) const {
    for (std::size_t l = 0; l < pf.lvs.size(); ++l) {
      if (size_of(pf.lvs[l]) != 1) continue;
      for (auto& a : pf.args)
        for (auto& x : a.lv)
          if (x == static_cast<int>(l)) {
            x = -1;
            a.counted = false;
          }
    }
    for (std::size_t l = pf.lvs.size(); l-- > 0;) {
      bool used = false;
      for (const auto& a : pf.args) used |= uses(a, static_cast<int>(l));
      if (used) continue;
      double n = static_cast<double>(size_of(pf.lvs[l]));
      if (n != 1)
        for (auto& x : pf.table) x *= n;
      erase_logvar(pf, static_cast<int>(l));
    }
  }

  void add_pf(Pf pf) {
    normalize(pf);
    if (pf.args.empty()) return;
    if (!pf.table.empty()) stats_.max_table = std::max(stats_.max_table, pf.table.size());
    std::size_t id = pfs_.size();
    for (const auto& a : pf.args) {
      occ_[a.piece].push_back(id);
      cost_valid_[a.piece] = false;
    }
    pfs_.push_back(std::move(pf));
  }

  Pf take_pf(std::size_t id) {
    Pf pf = std::move(*pfs_[id]);
    pfs_[id].reset();
    for (const auto& a : pf.args) {
      auto& o = occ_[a.piece];
      o.erase(std::remove(o.begin(), o.end(), id), o.end());
      cost_valid_[a.piece] = false;
    }
    return pf;
  }

  // -- splitting --------------------------------------------------------------

  /// Replaces set `s` by {c} and the rest, duplicating every parfactor that
  /// ranges over it; a counted argument over `s` gains a constant companion.
  void split(std::size_t s, std::size_t c) {
    DomainSet one{sets_[s].type, {c}}, rest{sets_[s].type, {}};
    for (auto x : sets_[s].consts)
      if (x != c) rest.consts.push_back(x);
    std::size_t a = new_set(std::move(one)), b = new_set(std::move(rest));
    type_sets_[sets_[s].type].push_back(a);
    type_sets_[sets_[s].type].push_back(b);
    set_alive_[s] = false;
    ++stats_.splits;

    std::vector<std::size_t> touched;
    for (std::size_t id = 0; id < pfs_.size(); ++id)
      if (pfs_[id] && std::find(pfs_[id]->lvs.begin(), pfs_[id]->lvs.end(), s) != pfs_[id]->lvs.end())
        touched.push_back(id);
    for (auto id : touched) {
      Pf pf = take_pf(id);
      auto counted = counted_flags(pf);
      std::vector<std::size_t> grounding;
      for (std::size_t l = 0; l < pf.lvs.size(); ++l)
        if (pf.lvs[l] == s && !counted[l]) grounding.push_back(l);
      for (std::size_t mask = 0; mask < (std::size_t(1) << grounding.size()); ++mask) {
        Pf out;
        out.lvs = pf.lvs;
        for (std::size_t k = 0; k < grounding.size(); ++k) out.lvs[grounding[k]] = (mask >> k & 1) ? b : a;
        for (std::size_t l = 0; l < pf.lvs.size(); ++l)
          if (pf.lvs[l] == s && counted[l]) out.lvs[l] = b;
        out.table = expand_counted(pf, out, s, a);
        add_pf(std::move(out));
      }
    }
  }

  /// Fills `out.args` from `pf` under the new logvar sets and returns the table.
  std::vector<double> expand_counted(const Pf& pf, Pf& out, std::size_t s, std::size_t single) {
    auto old_dims = dims(pf);
    auto old_strides = row_strides(old_dims);
    // per new axis: old axis, and for split counted args the companion role
    struct Axis {
      std::size_t old_axis;
      int role;  // 0 direct, 1 companion value, 2 remaining histogram
    };
    std::vector<Axis> axes;
    std::map<std::size_t, std::vector<std::vector<std::size_t>>> lookup;  // old axis -> [v][h_rest] -> old value
    for (std::size_t i = 0; i < pf.args.size(); ++i) {
      const Arg& arg = pf.args[i];
      Piece p = pieces_[arg.piece];
      std::vector<std::size_t> pos = p.pos;
      for (std::size_t k = 0; k < arg.lv.size(); ++k)
        if (arg.lv[k] >= 0) pos[k] = out.lvs[arg.lv[k]];
      if (arg.counted && pf.lvs[counted_lv(arg)] == s) {
        int l = counted_lv(arg);
        std::vector<std::size_t> cpos = p.pos;
        Arg companion{0, arg.lv, false};
        for (std::size_t k = 0; k < arg.lv.size(); ++k)
          if (arg.lv[k] == l) {
            cpos[k] = single;
            companion.lv[k] = -1;
          }
        companion.piece = piece(p.orig, cpos);
        out.args.push_back(std::move(companion));
        axes.push_back({i, 1});
        out.args.push_back(Arg{piece(p.orig, pos), arg.lv, true});
        axes.push_back({i, 2});
        std::size_t n_rest = size_of(out.lvs[l]);
        auto hs = enumerate_histograms(static_cast<std::uint32_t>(n_rest), p.range);
        auto& table = lookup[i];
        table.assign(p.range, std::vector<std::size_t>(hs.size()));
        for (std::size_t v = 0; v < p.range; ++v)
          for (std::size_t h = 0; h < hs.size(); ++h) {
            Histogram full = hs[h];
            ++full[v];
            table[v][h] = rank_histogram(full);
          }
      } else {
        out.args.push_back(Arg{piece(p.orig, pos), arg.lv, arg.counted});
        axes.push_back({i, 0});
      }
    }
    if (lookup.empty()) return pf.table;
    auto new_dims = dims(out);
    std::size_t rows = product_of(new_dims);
    std::vector<double> t(rows);
    std::vector<std::size_t> x(new_dims.size(), 0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t idx = 0;
      for (std::size_t j = 0; j < axes.size(); ++j) {
        if (axes[j].role == 0) idx += x[j] * old_strides[axes[j].old_axis];
        if (axes[j].role == 2) idx += lookup[axes[j].old_axis][x[j - 1]][x[j]] * old_strides[axes[j].old_axis];
      }
      t[r] = pf.table[idx];
      for (std::size_t j = new_dims.size(); j-- > 0;) {
        if (++x[j] < new_dims[j]) break;
        x[j] = 0;
      }
    }
    return t;
  }

  void isolate(std::size_t type, std::size_t c) {
    std::size_t s = find_set(type, c);
    if (size_of(s) > 1) split(s, c);
  }

  void ground(std::size_t s) {
    ++stats_.groundings;
    std::size_t type = sets_[s].type;
    std::vector<std::size_t> consts = sets_[s].consts;
    for (std::size_t i = 0; i + 1 < consts.size(); ++i) isolate(type, consts[i]);
    std::fill(cost_valid_.begin(), cost_valid_.end(), false);
  }

  // -- evidence ---------------------------------------------------------------

  void resolve_mixed_evidence() {
    while (true) {
      std::optional<std::size_t> mixed;
      for (std::size_t p = 0; p < pieces_.size() && !mixed; ++p)
        if (pieces_[p].obs == Piece::Obs::mixed && !occ_[p].empty()) mixed = p;
      if (!mixed) return;
      std::string observed;
      for_each_member(pieces_[*mixed], [&](const std::string& name) {
        if (!evidence_.count(name)) return true;
        observed = name;
        return false;
      });
      auto [orig, member] = member_of_.at(observed);
      auto consts = constants_of(orig, member);
      for (std::size_t k = 0; k < consts.size(); ++k) isolate(prv_types_[orig][k], consts[k]);
    }
  }

  void absorb_evidence() {
    for (std::size_t id = 0; id < pfs_.size(); ++id) {
      if (!pfs_[id]) continue;
      bool observed = false;
      for (const auto& a : pfs_[id]->args) observed |= pieces_[a.piece].obs == Piece::Obs::uniform;
      if (!observed) continue;
      Pf pf = take_pf(id);
      for (std::size_t i = pf.args.size(); i-- > 0;) {
        const Piece& p = pieces_[pf.args[i].piece];
        if (p.obs != Piece::Obs::uniform) continue;
        auto d = dims(pf);
        std::size_t value = p.label;
        int l = pf.args[i].counted ? counted_lv(pf.args[i]) : -1;
        if (l >= 0) {
          Histogram h(p.range, 0);
          h[p.label] = static_cast<std::uint32_t>(size_of(pf.lvs[l]));
          value = rank_histogram(h);
        }
        pf.table = slice_axis(pf.table, d, i, value);
        pf.args.erase(pf.args.begin() + static_cast<long>(i));
        if (l >= 0) erase_logvar(pf, l);
      }
      add_pf(std::move(pf));
    }
  }

  // -- lifted operators ------------------------------------------------------

  /// Parfactor over the union of both argument lists, unifying logvars through
  /// shared PRVs; each side is rescaled for groundings the other side adds.
  std::optional<Pf> multiply(const Pf& x, const Pf& y) const {
    std::vector<int> map(y.lvs.size(), -1);
    std::vector<bool> taken(x.lvs.size(), false);
    std::vector<int> shared(y.args.size(), -1);
    for (std::size_t j = 0; j < y.args.size(); ++j) {
      for (std::size_t i = 0; i < x.args.size(); ++i) {
        if (x.args[i].piece != y.args[j].piece) continue;
        if (x.args[i].counted != y.args[j].counted) return std::nullopt;
        shared[j] = static_cast<int>(i);
        for (std::size_t k = 0; k < y.args[j].lv.size(); ++k) {
          int ly = y.args[j].lv[k], lx = x.args[i].lv[k];
          if (ly < 0) continue;
          if (map[ly] == -1) {
            if (taken[lx]) return std::nullopt;
            map[ly] = lx;
            taken[lx] = true;
          } else if (map[ly] != lx) {
            return std::nullopt;
          }
        }
      }
    }
    Pf out;
    out.lvs = x.lvs;
    out.args = x.args;
    auto cx = counted_flags(x), cy = counted_flags(y);
    double wx = 1, wy = 1;
    for (std::size_t l = 0; l < y.lvs.size(); ++l) {
      if (map[l] != -1) continue;
      map[l] = static_cast<int>(out.lvs.size());
      out.lvs.push_back(y.lvs[l]);
      if (!cy[l]) wx /= static_cast<double>(size_of(y.lvs[l]));
    }
    for (std::size_t l = 0; l < x.lvs.size(); ++l)
      if (!taken[l] && !cx[l]) wy /= static_cast<double>(size_of(x.lvs[l]));
    std::vector<std::size_t> axis_of(y.args.size());
    for (std::size_t j = 0; j < y.args.size(); ++j) {
      if (shared[j] >= 0) {
        axis_of[j] = static_cast<std::size_t>(shared[j]);
        continue;
      }
      Arg a = y.args[j];
      for (auto& l : a.lv)
        if (l >= 0) l = map[l];
      axis_of[j] = out.args.size();
      out.args.push_back(std::move(a));
    }
    if (!x.table.empty()) {
      auto d = dims(out);
      auto xs = row_strides(dims(x)), ys = row_strides(dims(y));
      Term tx{&x.table, std::vector<std::size_t>(d.size(), 0), wx}, ty{&y.table, std::vector<std::size_t>(d.size(), 0), wy};
      for (std::size_t i = 0; i < x.args.size(); ++i) tx.strides[i] = xs[i];
      for (std::size_t j = 0; j < y.args.size(); ++j) ty.strides[axis_of[j]] += ys[j];
      out.table = product(d, {tx, ty});
      stats_.max_table = std::max(stats_.max_table, out.table.size());
    }
    return out;
  }

  /// An argument whose only logvar occurs nowhere else can become a CRV.
  static bool convertible(const Pf& pf, std::size_t i) {
    const Arg& a = pf.args[i];
    if (a.counted) return false;
    int l = -1;
    for (int x : a.lv) {
      if (x < 0) continue;
      if (l >= 0) return false;
      l = x;
    }
    if (l < 0) return false;
    for (std::size_t j = 0; j < pf.args.size(); ++j)
      if (j != i && uses(pf.args[j], l)) return false;
    return true;
  }

  /// prod_x phi(A(x), rest) = prod_v phi(v, rest)^{h_v}
  void count_convert(Pf& pf, std::size_t i) const {
    Arg& a = pf.args[i];
    std::size_t n = size_of(pf.lvs[counted_lv(a)]), r = pieces_[a.piece].range;
    if (!pf.table.empty()) {
      auto d = dims(pf);
      auto hs = enumerate_histograms(static_cast<std::uint32_t>(n), r);
      std::size_t outer = 1, inner = 1;
      for (std::size_t k = 0; k < i; ++k) outer *= d[k];
      for (std::size_t k = i + 1; k < d.size(); ++k) inner *= d[k];
      std::vector<double> t(outer * hs.size() * inner);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t h = 0; h < hs.size(); ++h)
          for (std::size_t in = 0; in < inner; ++in) {
            double s = 0;
            for (std::size_t v = 0; v < r; ++v)
              if (hs[h][v]) s += hs[h][v] * pf.table[(o * r + v) * inner + in];
            t[(o * hs.size() + h) * inner + in] = s;
          }
      pf.table = std::move(t);
      ++stats_.count_conversions;
    }
    a.counted = true;
  }

  /// Multiplies every parfactor containing `p` and sums `p` out, or reports
  /// that no lifted route exists. `cost` receives the largest table touched.
  std::optional<Pf> eliminate(std::size_t p, bool dry, double& cost) {
    std::vector<Pf> work;
    for (auto id : occ_[p]) {
      if (dry)
        work.push_back(Pf{pfs_[id]->lvs, pfs_[id]->args, {}});
      else
        work.push_back(*pfs_[id]);
    }
    auto arg_of = [&](const Pf& pf) -> std::size_t {
      for (std::size_t i = 0; i < pf.args.size(); ++i)
        if (pf.args[i].piece == p) return i;
      return pf.args.size();
    };
    bool any_counted = false;
    for (const auto& pf : work) any_counted |= pf.args[arg_of(pf)].counted;
    cost = 0;
    for (auto& pf : work) {
      std::size_t i = arg_of(pf);
      if (any_counted && !pf.args[i].counted) {
        if (!convertible(pf, i)) return std::nullopt;
        count_convert(pf, i);
      }
      cost = std::max(cost, rows_of(dims(pf)));
    }
    Pf acc = std::move(work[0]);
    for (std::size_t k = 1; k < work.size(); ++k) {
      auto m = multiply(acc, work[k]);
      if (!m) return std::nullopt;
      if (!dry) ++stats_.multiplications;
      acc = std::move(*m);
      cost = std::max(cost, rows_of(dims(acc)));
    }
    std::size_t i = arg_of(acc);
    auto counted = counted_flags(acc);
    for (std::size_t l = 0; l < acc.lvs.size(); ++l) {
      if (counted[l] || (!acc.args[i].counted && uses(acc.args[i], static_cast<int>(l)))) continue;
      std::optional<std::size_t> holder;
      for (std::size_t j = 0; j < acc.args.size(); ++j)
        if (uses(acc.args[j], static_cast<int>(l))) {
          if (holder) return std::nullopt;
          holder = j;
        }
      if (!holder || *holder == i || !convertible(acc, *holder)) return std::nullopt;
      count_convert(acc, *holder);
      cost = std::max(cost, rows_of(dims(acc)));
    }
    auto d = dims(acc);
    if (acc.args[i].counted) {
      int l = counted_lv(acc.args[i]);
      if (!acc.table.empty()) {
        auto hs = enumerate_histograms(static_cast<std::uint32_t>(size_of(acc.lvs[l])), pieces_[p].range);
        std::vector<double> w;
        for (const auto& h : hs) w.push_back(log_multinomial(h));
        acc.table = sum_axis(acc.table, d, i, w);
        ++stats_.crv_sum_outs;
      }
      acc.args.erase(acc.args.begin() + static_cast<long>(i));
      erase_logvar(acc, l);
    } else {
      if (!acc.table.empty()) {
        acc.table = sum_axis(acc.table, d, i);
        ++stats_.sum_outs;
      }
      acc.args.erase(acc.args.begin() + static_cast<long>(i));
    }
    return acc;
  }

  void eliminate_all() {
    while (true) {
      std::optional<std::size_t> best;
      double best_cost = 0;
      bool any = false;
      for (std::size_t p = 0; p < pieces_.size(); ++p) {
        if (p == query_ || occ_[p].empty()) continue;
        any = true;
        if (!cost_valid_[p]) {
          double c = 0;
          cost_[p] = eliminate(p, true, c) ? std::optional<double>(c) : std::nullopt;
          cost_valid_[p] = true;
        }
        if (cost_[p] && (!best || *cost_[p] < best_cost)) {
          best = p;
          best_cost = *cost_[p];
        }
      }
      if (!any) return;
      if (!best) {
        fall_back();
        continue;
      }
      double c = 0;
      auto result = eliminate(*best, false, c);
      std::vector<std::size_t> ids = occ_[*best];
      for (auto id : ids) take_pf(id);
      add_pf(std::move(*result));
    }
  }

  void fall_back() {
    std::optional<std::size_t> pick;
    for (const auto& slot : pfs_) {
      if (!slot) continue;
      for (auto s : slot->lvs)
        if (size_of(s) > 1 && (!pick || size_of(s) < size_of(*pick) || (size_of(s) == size_of(*pick) && s < *pick)))
          pick = s;
    }
    if (!pick) fail(ErrorKind::invalid_argument, "lifted elimination is stuck on a ground model");
    stats_.log.push_back("grounding a domain of " + std::to_string(size_of(*pick)) + " constants of logvar type '" +
                         types_[sets_[*pick].type].front() + "...'");
    ground(*pick);
  }
};

}  // namespace detail::lve

/// Marginal of one ground randvar of `g`, answered on the lifted model.
inline Marginal lve_marginal(const ParfactorGraph& g, const Query& q, const LveOptions& options = {},
                             LveStats* stats = nullptr) {
  g.validate();
  LveStats local;
  detail::lve::Engine engine(g, q.evidence, stats ? *stats : local);
  return engine.run(q.target, options);
}

}  // namespace acp
