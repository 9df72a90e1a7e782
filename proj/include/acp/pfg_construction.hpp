#pragma once

// Turning a converged grouping into a parfactor graph: one PRV per randvar
// class, one parfactor per factor class, logvars introduced by the three
// incidence cases, and a counting argument where a factor holds several
// members of one class.

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "acp/colour_passing.hpp"
#include "acp/core_model.hpp"
#include "acp/histogram.hpp"
#include "acp/io.hpp"
#include "acp/symmetry.hpp"

namespace acp {

/// True iff the parfactor has fewer args than its member factors.
inline bool needs_crv(std::size_t parfactor_args, std::size_t factor_args) { return parfactor_args < factor_args; }

struct CollapsedTable {
  /// Position of the histogram among the collapsed args (the smallest subset position).
  std::size_t crv_index = 0;
  std::vector<Rational> potentials;
};

/// One row per (histogram over `subset`, assignment of the other args); the
/// histogram takes the place of the first subset position.
inline CollapsedTable collapse_table_to_crv(const PotentialTable& t, std::span<const std::size_t> subset) {
  if (!is_commutative(t, subset))
    fail(ErrorKind::not_commutative, "table is not commutative in the counted positions");
  std::vector<std::size_t> sub(subset.begin(), subset.end());
  std::sort(sub.begin(), sub.end());
  const auto m = static_cast<std::uint32_t>(sub.size());
  const std::size_t r = t.range(sub[0]).size();
  const std::size_t nh = count_histograms(m, r);

  std::vector<bool> in_subset(t.arity(), false);
  for (auto p : sub) in_subset[p] = true;
  // Collapsed arg dims in output order.
  std::vector<std::size_t> dims;
  for (std::size_t p = 0; p < t.arity(); ++p) {
    if (p == sub[0]) dims.push_back(nh);
    else if (!in_subset[p]) dims.push_back(t.range(p).size());
  }
  std::size_t rows = 1;
  for (auto d : dims) rows *= d;

  CollapsedTable out;
  out.crv_index = static_cast<std::size_t>(std::count_if(in_subset.begin(), in_subset.begin() + sub[0],
                                                         [](bool b) { return !b; }));
  out.potentials.assign(rows, Rational(0));
  std::vector<bool> filled(rows, false);
  for (std::size_t row = 0; row < t.rows(); ++row) {
    auto a = t.assignment_of(row);
    Histogram h(r, 0);
    for (auto p : sub) ++h[a[p]];
    std::size_t index = 0, k = 0;
    for (std::size_t p = 0; p < t.arity(); ++p) {
      if (p == sub[0]) index = index * dims[k++] + rank_histogram(h);
      else if (!in_subset[p]) index = index * dims[k++] + a[p];
    }
    if (!filled[index]) {
      out.potentials[index] = t.potential(row);
      filled[index] = true;
    }
  }
  return out;
}

struct BuildOptions {
  /// Throw on a grouping that has no parfactor form instead of refining it.
  bool strict = false;
};

struct BuildReport {
  std::size_t refinements = 0;
  /// Per parfactor: "ground", "shared", "distinct" or "two_logvars".
  std::vector<std::string> cases;
  std::size_t rows_before = 0, rows_after = 0;
};

struct BuildResult {
  ParfactorGraph pfg;
  /// The grouping actually used, after any refinement.
  Grouping grouping;
  BuildReport report;
};

namespace detail {

struct Repair {
  ErrorKind kind;
  std::string why;
  std::vector<std::size_t> rvs, factors;
};

/// Union-find over randvars that refuses to put two members of one class in a set.
class MemberLinks {
 public:
  MemberLinks(std::size_t n, const std::vector<std::size_t>& class_of) : parent_(n), at_root_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
    for (std::size_t v = 0; v < n; ++v) at_root_[v][class_of[v]] = v;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return true;
    if (at_root_[a].size() < at_root_[b].size()) std::swap(a, b);
    for (const auto& [cls, rv] : at_root_[b]) {
      auto it = at_root_[a].find(cls);
      if (it != at_root_[a].end() && it->second != rv) return false;
    }
    for (const auto& kv : at_root_[b]) at_root_[a].insert(kv);
    at_root_[b].clear();
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::map<std::size_t, std::size_t>> at_root_;
};

struct SimpleUnionFind {
  std::vector<std::size_t> parent;
  explicit SimpleUnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

enum class SlotKind { group, rank, counted };

struct Slot {
  SlotKind kind;
  /// Group and counted slots: an rv class bound to this slot.
  std::size_t cls = 0;
  /// Rank slots: domain size.
  std::size_t size = 0;
  std::size_t type = 0;
};

struct PfPlan {
  std::vector<std::size_t> factors;
  std::vector<std::size_t> arg_classes;
  std::vector<std::vector<std::size_t>> arg_positions;
  std::optional<std::size_t> counted;  // index into arg_classes
  std::vector<Slot> slots;
  /// Per arg class, slot indices of its axes.
  std::vector<std::vector<std::size_t>> arg_slots;
  /// Per factor (index into factors), the rank on the rank slot if any.
  std::vector<std::size_t> rank;
  std::string case_name;
};

struct Builder {
  const FactorGraph& fg;
  const Grouping& g;
  std::vector<std::size_t> class_of;
  std::vector<std::vector<std::size_t>> args;  // rearranged, per factor
  std::vector<PfPlan> plans;
  std::vector<int> axes;  // per rv class: 0, 1 or 2

  Builder(const FactorGraph& fg_, const Grouping& g_) : fg(fg_), g(g_), class_of(fg_.num_randvars()) {
    for (std::size_t c = 0; c < g.rv_classes.size(); ++c)
      for (auto v : g.rv_classes[c]) class_of[v] = c;
    for (std::size_t f = 0; f < fg.num_factors(); ++f) args.push_back(rearranged_args(fg, g, f));
  }

  std::size_t class_size(std::size_t c) const { return g.rv_classes[c].size(); }

  Repair repair(const PfPlan& plan, ErrorKind kind, std::string why) const {
    Repair r{kind, std::move(why), {}, plan.factors};
    for (auto c : plan.arg_classes)
      if (class_size(c) > 1)
        for (auto v : g.rv_classes[c]) r.rvs.push_back(v);
    return r;
  }

  /// Labels factors by the member of `cls` they hold, numbered by first occurrence.
  std::vector<std::size_t> partition_of(const PfPlan& plan, std::size_t arg) const {
    std::map<std::size_t, std::size_t> ids;
    std::vector<std::size_t> out;
    for (auto f : plan.factors) {
      auto v = args[f][plan.arg_positions[arg][0]];
      out.push_back(ids.emplace(v, ids.size()).first->second);
    }
    return out;
  }

  std::optional<Repair> plan_factor_class(std::size_t k, PfPlan& plan) {
    plan.factors = g.factor_classes[k];
    const std::size_t rep = plan.factors[0];
    const std::size_t nf = plan.factors.size();
    const std::string label = "factor class of '" + fg.factor(rep).name + "'";
    for (auto f : plan.factors)
      for (std::size_t p = 0; p < args[f].size(); ++p)
        if (class_of[args[f][p]] != class_of[args[rep][p]])
          fail(ErrorKind::inconsistent_grouping, label + " mixes randvar classes at position " + std::to_string(p));

    for (std::size_t p = 0; p < args[rep].size(); ++p) {
      std::size_t c = class_of[args[rep][p]];
      auto it = std::find(plan.arg_classes.begin(), plan.arg_classes.end(), c);
      if (it == plan.arg_classes.end()) {
        plan.arg_classes.push_back(c);
        plan.arg_positions.push_back({p});
      } else {
        plan.arg_positions[it - plan.arg_classes.begin()].push_back(p);
      }
    }
    plan.arg_slots.resize(plan.arg_classes.size());

    for (std::size_t i = 0; i < plan.arg_classes.size(); ++i) {
      if (plan.arg_positions[i].size() < 2) continue;
      if (plan.counted) return repair(plan, ErrorKind::fragment_violation, label + " would need two counting arguments");
      const std::size_t c = plan.arg_classes[i];
      if (plan.arg_positions[i].size() != class_size(c))
        return repair(plan, ErrorKind::no_bijection, label + " counts part of a randvar class");
      if (!is_commutative(rearranged_table(fg, g, rep), plan.arg_positions[i]))
        return repair(plan, ErrorKind::not_commutative, label + " is not commutative in the positions of one class");
      plan.counted = i;
      plan.arg_slots[i].push_back(plan.slots.size());
      plan.slots.push_back({SlotKind::counted, c, 0, 0});
    }

    std::vector<std::size_t> full, part;
    for (std::size_t i = 0; i < plan.arg_classes.size(); ++i) {
      if (plan.counted == i || class_size(plan.arg_classes[i]) < 2) continue;
      (class_size(plan.arg_classes[i]) == nf ? full : part).push_back(i);
    }

    if (part.empty()) {
      if (full.empty()) {
        if (nf != 1) return repair(plan, ErrorKind::no_bijection, label + " has groundings no logvar can index");
        plan.case_name = "ground";
        return std::nullopt;
      }
      plan.case_name = "shared";
      std::size_t s = plan.slots.size();
      plan.slots.push_back({SlotKind::group, plan.arg_classes[full[0]], 0, 0});
      for (auto i : full) plan.arg_slots[i].push_back(s);
      return std::nullopt;
    }

    // Classes with identical factor partitions share one logvar.
    std::vector<std::vector<std::size_t>> partitions;
    std::vector<std::size_t> group_slot;
    std::vector<std::size_t> group_of_part;
    for (auto i : part) {
      auto p = partition_of(plan, i);
      auto it = std::find(partitions.begin(), partitions.end(), p);
      if (it == partitions.end()) {
        partitions.push_back(p);
        group_slot.push_back(plan.slots.size());
        plan.slots.push_back({SlotKind::group, plan.arg_classes[i], 0, 0});
        it = partitions.end() - 1;
      }
      plan.arg_slots[i].push_back(group_slot[it - partitions.begin()]);
    }
    auto tuples_bijective = [&] {
      std::set<std::vector<std::size_t>> seen;
      std::size_t product = 1;
      for (const auto& p : partitions) product *= *std::max_element(p.begin(), p.end()) + 1;
      for (std::size_t j = 0; j < nf; ++j) {
        std::vector<std::size_t> t;
        for (const auto& p : partitions) t.push_back(p[j]);
        seen.insert(t);
      }
      return product == nf && seen.size() == nf;
    };

    if (full.empty()) {
      plan.case_name = "distinct";
      if (!tuples_bijective())
        return repair(plan, ErrorKind::no_bijection, label + " is not the product of its argument groundings");
      return std::nullopt;
    }

    plan.case_name = "two_logvars";
    if (partitions.size() > 2)
      return repair(plan, ErrorKind::fragment_violation, label + " would need more than two logvars");
    if (plan.counted) return repair(plan, ErrorKind::fragment_violation, label + " would need three logvars");
    std::size_t second;
    if (partitions.size() == 2) {
      if (!tuples_bijective())
        return repair(plan, ErrorKind::no_bijection, label + " is not the product of its argument groundings");
      second = group_slot[1];
    } else {
      // A fresh axis numbers the factors sharing a member of the partial class.
      const auto& p = partitions[0];
      std::size_t n = *std::max_element(p.begin(), p.end()) + 1;
      std::vector<std::size_t> seen(n, 0);
      for (std::size_t j = 0; j < nf; ++j) plan.rank.push_back(seen[p[j]]++);
      for (auto count : seen)
        if (count * n != nf) fail(ErrorKind::inconsistent_grouping, label + " has uneven member incidence");
      second = plan.slots.size();
      plan.slots.push_back({SlotKind::rank, 0, nf / n, 0});
    }
    for (auto i : full) plan.arg_slots[i] = {group_slot[0], second};
    return std::nullopt;
  }

  /// Links members and classes that share a logvar. Fails on conflicting links.
  std::optional<Repair> link(const PfPlan& plan, MemberLinks& members, SimpleUnionFind& classes) const {
    for (std::size_t s = 0; s < plan.slots.size(); ++s) {
      if (plan.slots[s].kind != SlotKind::group) continue;
      std::vector<std::size_t> bound;
      for (std::size_t i = 0; i < plan.arg_classes.size(); ++i)
        if (plan.arg_slots[i].size() == 1 && plan.arg_slots[i][0] == s) bound.push_back(i);
      for (std::size_t b = 1; b < bound.size(); ++b) {
        classes.unite(plan.arg_classes[bound[0]], plan.arg_classes[bound[b]]);
        for (auto f : plan.factors)
          if (!members.unite(args[f][plan.arg_positions[bound[0]][0]], args[f][plan.arg_positions[bound[b]][0]]))
            return repair(plan, ErrorKind::no_bijection,
                          "factor class of '" + fg.factor(plan.factors[0]).name +
                              "' pairs members inconsistently with another parfactor");
      }
    }
    return std::nullopt;
  }

  /// Either a finished graph or the nodes to shatter.
  std::variant<ParfactorGraph, Repair> attempt(std::vector<std::string>& cases) {
    plans.assign(g.factor_classes.size(), {});
    for (std::size_t k = 0; k < plans.size(); ++k)
      if (auto r = plan_factor_class(k, plans[k])) return *r;

    // Axes per class and adjacency of two-logvar classes.
    axes.assign(g.rv_classes.size(), 0);
    std::vector<std::size_t> adjacent(g.rv_classes.size(), 0);
    for (const auto& plan : plans)
      for (std::size_t i = 0; i < plan.arg_classes.size(); ++i) {
        ++adjacent[plan.arg_classes[i]];
        int n = static_cast<int>(plan.arg_slots[i].size());
        axes[plan.arg_classes[i]] = std::max(axes[plan.arg_classes[i]], n);
      }
    for (std::size_t c = 0; c < axes.size(); ++c)
      if (axes[c] == 0 && class_size(c) > 1) axes[c] = 1;
    bool any_two = false;
    for (std::size_t k = 0; k < plans.size(); ++k)
      for (std::size_t i = 0; i < plans[k].arg_classes.size(); ++i)
        if (plans[k].arg_slots[i].size() == 2) {
          any_two = true;
          if (adjacent[plans[k].arg_classes[i]] != 1)
            return repair(plans[k], ErrorKind::fragment_violation,
                          "a two-logvar randvar class of '" + fg.factor(plans[k].factors[0]).name +
                              "' touches several factor classes");
        }
    if (any_two)
      for (std::size_t k = 0; k < plans.size(); ++k)
        if (plans[k].slots.size() > 2) {
          std::size_t victim = k;
          for (std::size_t j = 0; j < plans.size(); ++j)
            for (const auto& a : plans[j].arg_slots)
              if (a.size() == 2) victim = j;
          return repair(plans[victim], ErrorKind::fragment_violation,
                        "parfactor of '" + fg.factor(plans[k].factors[0]).name +
                            "' has more than two logvars alongside a two-logvar PRV");
        }

    MemberLinks members(fg.num_randvars(), class_of);
    SimpleUnionFind classes(g.rv_classes.size());
    for (const auto& plan : plans)
      if (auto r = link(plan, members, classes)) return *r;

    for (const auto& plan : plans) cases.push_back(plan.case_name);
    return assemble(members, classes);
  }

  ParfactorGraph assemble(MemberLinks& members, SimpleUnionFind& classes) {
    ParfactorGraph out;
    // Domain types: one per linked component of one-axis classes, one per rank slot.
    struct Type {
      std::string name;
      std::vector<std::string> constants;
      std::size_t base_class = 0;
      bool from_class = true;
    };
    std::vector<Type> types;
    std::map<std::size_t, std::size_t> type_of_root;
    auto type_name = [](std::size_t i) {
      static const char* letters[] = {"X", "Y", "Z", "U", "V", "W"};
      return i < 6 ? std::string(letters[i]) : "L" + std::to_string(i + 1);
    };
    auto class_type = [&](std::size_t c) {
      std::size_t root = classes.find(c);
      auto [it, fresh] = type_of_root.emplace(root, types.size());
      if (fresh) types.push_back({type_name(types.size()), {}, root, true});
      return it->second;
    };
    for (auto& plan : plans)
      for (auto& s : plan.slots) {
        if (s.kind == SlotKind::rank) {
          s.type = types.size();
          types.push_back({type_name(types.size()), {}, 0, false});
          auto& t = types.back();
          std::string prefix = t.name;
          std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](char ch) { return static_cast<char>(std::tolower(ch)); });
          if (std::isdigit(static_cast<unsigned char>(prefix.back()))) prefix += "_";
          for (std::size_t i = 0; i < s.size; ++i) t.constants.push_back(prefix + std::to_string(i + 1));
        } else {
          s.type = class_type(s.cls);
        }
      }
    for (std::size_t c = 0; c < g.rv_classes.size(); ++c)
      if (axes[c] == 1) class_type(c);

    // Constants of class types follow the member order of the base class (smallest id).
    std::vector<std::size_t> constant_of(fg.num_randvars(), 0);
    for (auto& t : types) {
      if (!t.from_class) continue;
      for (std::size_t c = 0; c < g.rv_classes.size(); ++c)
        if (classes.find(c) == t.base_class) {
          t.base_class = c;
          break;
        }
      std::string prefix = t.name;
      std::transform(prefix.begin(), prefix.end(), prefix.begin(), [](char ch) { return static_cast<char>(std::tolower(ch)); });
      if (std::isdigit(static_cast<unsigned char>(prefix.back()))) prefix += "_";
      const auto& base = g.rv_classes[t.base_class];
      std::map<std::size_t, std::size_t> index_of_set;
      for (std::size_t i = 0; i < base.size(); ++i) {
        index_of_set[members.find(base[i])] = i;
        t.constants.push_back(prefix + std::to_string(i + 1));
      }
      for (std::size_t c = 0; c < g.rv_classes.size(); ++c)
        if (axes[c] == 1 && classes.find(c) == classes.find(t.base_class))
          for (auto v : g.rv_classes[c]) constant_of[v] = index_of_set.at(members.find(v));
    }

    // Aliases are declared on demand.
    std::set<std::string> declared;
    auto logvar_name = [&](std::size_t type, std::size_t occurrence) {
      std::string name = types[type].name;
      if (occurrence > 0) name += "_" + std::to_string(occurrence + 1);
      if (declared.insert(name).second) out.logvars.push_back({name, types[type].constants});
      return name;
    };
    for (std::size_t t = 0; t < types.size(); ++t) logvar_name(t, 0);

    // PRVs.
    std::vector<std::string> prv_name = prv_names();
    std::vector<std::vector<std::size_t>> prv_types(g.rv_classes.size());
    for (const auto& plan : plans)
      for (std::size_t i = 0; i < plan.arg_classes.size(); ++i)
        if (plan.arg_slots[i].size() == 2)
          prv_types[plan.arg_classes[i]] = {plan.slots[plan.arg_slots[i][0]].type, plan.slots[plan.arg_slots[i][1]].type};
    for (std::size_t c = 0; c < g.rv_classes.size(); ++c) {
      Prv p{prv_name[c], fg.randvar(g.rv_classes[c][0]).range, {}, {}};
      if (axes[c] == 0) {
        p.members = {fg.randvar(g.rv_classes[c][0]).name};
      } else if (axes[c] == 1) {
        std::size_t t = type_of_root.at(classes.find(c));
        p.logvars = {types[t].name};
        p.members.resize(class_size(c));
        for (auto v : g.rv_classes[c]) p.members[constant_of[v]] = fg.randvar(v).name;
      } else {
        auto [t1, t2] = std::pair{prv_types[c][0], prv_types[c][1]};
        p.logvars = {types[t1].name, logvar_name(t2, t1 == t2 ? 1 : 0)};
        p.members.resize(class_size(c));
      }
      out.prvs.push_back(std::move(p));
    }

    // Parfactors.
    std::set<std::string> used;
    for (const auto& f : fg.factors()) used.insert(f.name);
    for (std::size_t k = 0; k < plans.size(); ++k) {
      const auto& plan = plans[k];
      const std::size_t rep = plan.factors[0];
      Parfactor pf;
      pf.name = "g" + std::to_string(k + 1);
      while (used.count(pf.name)) pf.name += "_";
      used.insert(pf.name);

      std::vector<std::string> slot_name(plan.slots.size());
      std::map<std::size_t, std::size_t> occurrences;
      for (std::size_t s = 0; s < plan.slots.size(); ++s)
        slot_name[s] = logvar_name(plan.slots[s].type, occurrences[plan.slots[s].type]++);

      for (std::size_t i = 0; i < plan.arg_classes.size(); ++i) {
        ParfactorArg a{prv_name[plan.arg_classes[i]], {}};
        for (auto s : plan.arg_slots[i]) a.logvars.push_back(slot_name[s]);
        if (plan.counted == i) pf.crv = CrvSpec{i, slot_name[plan.arg_slots[i][0]]};
        pf.args.push_back(std::move(a));
      }

      auto table = rearranged_table(fg, g, rep);
      if (plan.counted) {
        auto collapsed = collapse_table_to_crv(table, plan.arg_positions[*plan.counted]);
        if (collapsed.crv_index != *plan.counted)
          fail(ErrorKind::inconsistent_grouping, "counting argument landed at an unexpected position");
        pf.potentials = std::move(collapsed.potentials);
      } else {
        pf.potentials = table.potentials();
      }

      // Members, row-major over the parfactor's logvars.
      auto lvs = out.parfactor_logvars(pf);
      std::vector<std::size_t> sizes;
      std::vector<std::size_t> slot_of_lv;
      for (const auto& l : lvs) {
        sizes.push_back(out.logvar(l).domain.size());
        slot_of_lv.push_back(static_cast<std::size_t>(std::find(slot_name.begin(), slot_name.end(), l) - slot_name.begin()));
      }
      std::size_t groundings = 1;
      for (auto s : sizes) groundings *= s;
      if (groundings != plan.factors.size())
        fail(ErrorKind::inconsistent_grouping, "parfactor '" + pf.name + "' grounds to the wrong number of factors");
      pf.members.assign(groundings, "");
      for (std::size_t j = 0; j < plan.factors.size(); ++j) {
        const std::size_t f = plan.factors[j];
        std::size_t index = 0;
        for (std::size_t l = 0; l < lvs.size(); ++l) {
          const Slot& s = plan.slots[slot_of_lv[l]];
          std::size_t constant;
          if (s.kind == SlotKind::rank) {
            constant = plan.rank[j];
          } else {
            std::size_t arg = 0;
            while (!(plan.arg_slots[arg].size() == 1 && plan.arg_slots[arg][0] == slot_of_lv[l])) ++arg;
            constant = constant_of[args[f][plan.arg_positions[arg][0]]];
          }
          index = index * sizes[l] + constant;
        }
        if (!pf.members[index].empty())
          fail(ErrorKind::inconsistent_grouping, "parfactor '" + pf.name + "' maps two factors to one grounding");
        pf.members[index] = fg.factor(f).name;

        // Two-logvar PRVs take their members from the factors they appear in.
        for (std::size_t i = 0; i < plan.arg_classes.size(); ++i) {
          if (plan.arg_slots[i].size() != 2) continue;
          auto& p = out.prvs[plan.arg_classes[i]];
          std::size_t c1 = 0, c2 = 0;
          for (std::size_t l = 0; l < lvs.size(); ++l) {
            std::size_t stride = 1;
            for (std::size_t m = l + 1; m < lvs.size(); ++m) stride *= sizes[m];
            std::size_t constant = index / stride % sizes[l];
            if (slot_of_lv[l] == plan.arg_slots[i][0]) c1 = constant;
            if (slot_of_lv[l] == plan.arg_slots[i][1]) c2 = constant;
          }
          p.members[c1 * out.logvar(p.logvars[1]).domain.size() + c2] =
              fg.randvar(args[f][plan.arg_positions[i][0]]).name;
        }
      }
      out.parfactors.push_back(std::move(pf));
    }
    for (const auto& [v, label] : fg.evidence()) out.evidence[fg.randvar(v).name] = fg.randvar(v).range.label(label);
    return out;
  }

  /// Singleton classes keep their randvar's name; larger classes take the
  /// members' common prefix when it is usable, else a fallback letter.
  std::vector<std::string> prv_names() const {
    std::set<std::string> taken;
    for (const auto& rv : fg.randvars()) taken.insert(rv.name);
    std::vector<std::string> out(g.rv_classes.size());
    for (std::size_t c = 0; c < g.rv_classes.size(); ++c)
      if (class_size(c) == 1) out[c] = fg.randvar(g.rv_classes[c][0]).name;
    std::set<std::string> used;
    for (const auto& n : out)
      if (!n.empty()) used.insert(n);
    static const char* fallback[] = {"R", "S", "T", "U", "V", "W"};
    std::size_t next_fallback = 0, next_numbered = 1;
    for (std::size_t c = 0; c < g.rv_classes.size(); ++c) {
      if (class_size(c) == 1) continue;
      std::string prefix = fg.randvar(g.rv_classes[c][0]).name;
      for (auto v : g.rv_classes[c]) {
        const auto& n = fg.randvar(v).name;
        std::size_t k = 0;
        while (k < prefix.size() && k < n.size() && prefix[k] == n[k]) ++k;
        prefix.resize(k);
      }
      while (!prefix.empty() && (std::isdigit(static_cast<unsigned char>(prefix.back())) || prefix.back() == '_' ||
                                 prefix.back() == '(' || prefix.back() == '.'))
        prefix.pop_back();
      if (!prefix.empty() && !used.count(prefix) && !taken.count(prefix)) {
        out[c] = prefix;
      } else {
        std::string name;
        do {
          name = next_fallback < 6 ? fallback[next_fallback++] : "P" + std::to_string(next_numbered++);
        } while (used.count(name) || taken.count(name));
        out[c] = name;
      }
      used.insert(out[c]);
    }
    return out;
  }
};

}  // namespace detail

/// Builds the parfactor graph of a grouping. A grouping without a parfactor
/// form inside the domain-liftable fragment is refined (or rejected when strict).
inline BuildResult build_pfg(const FactorGraph& fg, Grouping grouping, const BuildOptions& options = {}) {
  BuildResult result;
  while (true) {
    detail::Builder b(fg, grouping);
    std::vector<std::string> cases;
    auto outcome = b.attempt(cases);
    if (auto* pfg = std::get_if<ParfactorGraph>(&outcome)) {
      result.pfg = std::move(*pfg);
      result.report.cases = std::move(cases);
      break;
    }
    auto& r = std::get<detail::Repair>(outcome);
    if (options.strict) fail(r.kind, r.why);
    grouping = refine(fg, std::move(grouping), r.rvs, r.factors);
    ++result.report.refinements;
  }
  result.pfg.validate();
  result.grouping = std::move(grouping);
  result.report.rows_before = fg.total_rows();
  result.report.rows_after = result.pfg.total_rows();
  return result;
}

/// Colour passing followed by construction.
inline BuildResult compress(const FactorGraph& fg, Algorithm algorithm, const ColourOptions& colour = {},
                            const BuildOptions& build = {}) {
  return build_pfg(fg, run_colour_passing(fg, algorithm, colour), build);
}

/// Class lists, annotations, rearrangements and construction figures.
inline Json grouping_stats_json(const FactorGraph& fg, const BuildResult& r) {
  const Grouping& g = r.grouping;
  Json out;
  out["algorithm"] = to_string(g.algorithm);
  out["iterations"] = g.iterations;
  out["offline_ms"] = g.offline_ms;
  out["refinements"] = r.report.refinements;
  out["rv_classes"] = Json::array();
  for (const auto& c : g.rv_classes) {
    Json names = Json::array();
    for (auto v : c) names.push_back(fg.randvar(v).name);
    out["rv_classes"].push_back(names);
  }
  out["factor_classes"] = Json::array();
  for (const auto& c : g.factor_classes) {
    Json names = Json::array();
    for (auto f : c) names.push_back(fg.factor(f).name);
    out["factor_classes"].push_back(names);
  }
  out["annotations"] = Json::object();
  out["rearrangements"] = Json::object();
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    if (!g.annotations[f].empty()) out["annotations"][fg.factor(f).name] = g.annotations[f];
    if (!g.rearrangements[f].is_identity()) out["rearrangements"][fg.factor(f).name] = g.rearrangements[f].source;
  }
  out["num_groups"] = g.num_groups();
  out["rows_before"] = r.report.rows_before;
  out["rows_after"] = r.report.rows_after;
  out["cases"] = Json::object();
  for (std::size_t k = 0; k < r.pfg.parfactors.size(); ++k) out["cases"][r.pfg.parfactors[k].name] = r.report.cases[k];
  return out;
}

}  // namespace acp
