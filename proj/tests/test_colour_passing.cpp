#include <gtest/gtest.h>

#include "support.hpp"

using namespace acp;
using acp::testing::boolean_table;
using acp::testing::factor_class_names;
using acp::testing::load_fg;
using acp::testing::rv_class_names;

namespace {

using Names = std::vector<std::vector<std::string>>;

bool all_singletons(const Grouping& g) {
  for (const auto& c : g.rv_classes)
    if (c.size() != 1) return false;
  for (const auto& c : g.factor_classes)
    if (c.size() != 1) return false;
  return true;
}

void expect_well_formed(const FactorGraph& fg, const Grouping& g) {
  std::vector<int> seen(fg.num_randvars(), 0);
  for (const auto& c : g.rv_classes)
    for (auto v : c) {
      ++seen[v];
      EXPECT_EQ(fg.randvar(v).range, fg.randvar(c[0]).range);
      EXPECT_EQ(fg.evidence().count(v) ? fg.evidence().at(v) : 99u, fg.evidence().count(c[0]) ? fg.evidence().at(c[0]) : 99u);
    }
  for (auto s : seen) EXPECT_EQ(s, 1);
  std::vector<int> fseen(fg.num_factors(), 0);
  for (const auto& c : g.factor_classes)
    for (auto f : c) {
      ++fseen[f];
      EXPECT_EQ(rearranged_table(fg, g, f), rearranged_table(fg, g, c[0]));
      EXPECT_EQ(g.annotations[f], g.annotations[c[0]]);
    }
  for (auto s : fseen) EXPECT_EQ(s, 1);
}

/// Random FG with distinct potentials everywhere, so nothing can be grouped.
FactorGraph asymmetric_fg(std::mt19937_64& rng, std::size_t n) {
  FactorGraph fg;
  for (std::size_t i = 0; i < n; ++i) fg.add_randvar("R" + std::to_string(i), Range::boolean());
  int next = 1;
  for (std::size_t f = 0; f < n; ++f) {
    std::size_t arity = 1 + rng() % 3;
    std::vector<std::string> args;
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = 0; k < arity && k < n; ++k) args.push_back("R" + std::to_string(pool[k]));
    std::vector<Rational> v(std::size_t(1) << args.size());
    for (auto& x : v) x = next++;
    fg.add_factor("f" + std::to_string(f), args, boolean_table(args.size(), v));
  }
  return fg;
}

/// Copies of one block with randomly reordered factor arguments.
FactorGraph replicated_fg(std::mt19937_64& rng, std::size_t copies) {
  FactorGraph fg;
  auto distinct = [&](std::size_t arity) {
    std::vector<Rational> v(std::size_t(1) << arity);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Rational(static_cast<long>(i + 1));
    std::shuffle(v.begin(), v.end(), rng);
    return boolean_table(arity, v);
  };
  auto t1 = distinct(2), t2 = distinct(3);
  fg.add_randvar("H", Range::boolean());
  for (std::size_t c = 0; c < copies; ++c) {
    std::string s = std::to_string(c);
    fg.add_randvar("P" + s, Range::boolean());
    fg.add_randvar("Q" + s, Range::boolean());
    fg.add_randvar("S" + s, Range::boolean());
    if (rng() % 2)
      fg.add_factor("a" + s, {"P" + s, "Q" + s}, t1);
    else
      fg.add_factor("a" + s, {"Q" + s, "P" + s}, acp::testing::permute_table(t1, {1, 0}));
    std::vector<std::size_t> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::string> args{"Q" + s, "S" + s, "H"}, permuted(3);
    for (std::size_t i = 0; i < 3; ++i) permuted[i] = args[perm[i]];
    fg.add_factor("b" + s, permuted, acp::testing::permute_table(t2, perm));
  }
  return fg;
}

}  // namespace

TEST(InitialColours, Randvars) {
  auto fg = load_fg("shared_tables.json");
  auto c = initial_rv_colours(fg);
  EXPECT_EQ(c[0], c[1]);
  EXPECT_EQ(c[1], c[2]);
  fg.set_evidence("A", "true");
  c = initial_rv_colours(fg);
  EXPECT_NE(c[fg.randvar_id("A")], c[fg.randvar_id("B")]);

  FactorGraph mixed;
  mixed.add_randvar("X", Range::boolean());
  mixed.add_randvar("Y", Range({"a", "b", "c"}));
  c = initial_rv_colours(mixed);
  EXPECT_NE(c[0], c[1]);
}

TEST(InitialColours, FactorsRowByRow) {
  auto c = initial_factor_colours_cp(load_fg("shared_tables.json"));
  EXPECT_EQ(c[0], c[1]);
  c = initial_factor_colours_cp(load_fg("permuted_pair.json"));
  EXPECT_NE(c[0], c[1]);
}

TEST(InitialColours, FactorsOrderIndependent) {
  auto fg = load_fg("permuted_pair.json");
  auto c = initial_factor_colours_acp(fg);
  EXPECT_EQ(c.colour[0], c.colour[1]);
  EXPECT_TRUE(c.rearrangements[0].is_identity());
  EXPECT_EQ(c.rearrangements[1].source, (std::vector<std::size_t>{1, 0}));

  auto chain = load_fg("four_node_chain.json");
  c = initial_factor_colours_acp(chain);
  EXPECT_EQ(c.colour[0], c.colour[2]);
  EXPECT_NE(c.colour[0], c.colour[1]);
  EXPECT_EQ(c.rearrangements[2].source, (std::vector<std::size_t>{1, 0}));

  std::mt19937_64 rng(2);
  auto distinct = asymmetric_fg(rng, 6);
  auto d = initial_factor_colours_acp(distinct);
  EXPECT_EQ(detail::count_colours(d.colour), distinct.num_factors());
}

TEST(RunCp, SharedTablesGroup) {
  auto fg = load_fg("shared_tables.json");
  auto g = run_cp(fg);
  EXPECT_EQ(rv_class_names(fg, g), (Names{{"A", "C"}, {"B"}}));
  EXPECT_EQ(factor_class_names(fg, g), (Names{{"phi1", "phi2"}}));
  expect_well_formed(fg, g);
}

TEST(RunCp, EmployeesAndPermutedPairStaySingletons) {
  for (const char* name : {"employees.json", "permuted_pair.json", "four_node_chain.json"}) {
    auto fg = load_fg(name);
    auto g = run_cp(fg);
    EXPECT_TRUE(all_singletons(g)) << name;
    expect_well_formed(fg, g);
  }
}

TEST(RunAcp, FourNodeChain) {
  auto fg = load_fg("four_node_chain.json");
  auto g = run_acp(fg);
  EXPECT_EQ(rv_class_names(fg, g), (Names{{"A", "D"}, {"B", "C"}}));
  EXPECT_EQ(factor_class_names(fg, g), (Names{{"phi1", "phi3"}, {"phi2"}}));
  EXPECT_EQ(g.annotations[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(g.annotations[0].empty());
  expect_well_formed(fg, g);
}

TEST(RunAcp, Employees) {
  auto fg = load_fg("employees.json");
  auto g = run_acp(fg);
  EXPECT_EQ(rv_class_names(fg, g), (Names{{"ComA", "ComB"}, {"Rev"}, {"SalA", "SalB"}}));
  EXPECT_EQ(factor_class_names(fg, g), (Names{{"f1", "f2"}, {"f3"}, {"f4", "f5"}}));
  EXPECT_EQ(g.annotations[*fg.find_factor("f3")], (std::vector<std::size_t>{0, 1}));
  expect_well_formed(fg, g);
}

TEST(RunAcp, PermutedPair) {
  auto fg = load_fg("permuted_pair.json");
  auto g = run_acp(fg);
  EXPECT_EQ(rv_class_names(fg, g), (Names{{"A", "C"}, {"B"}}));
  EXPECT_EQ(factor_class_names(fg, g), (Names{{"phi1", "phi2"}}));
}

TEST(RunAcp, NoSymmetriesNoGroups) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto fg = asymmetric_fg(rng, 5 + trial % 4);
    auto g = run_acp(fg);
    // distinct potentials keep factors apart; randvars may still coincide only by structure
    EXPECT_EQ(g.factor_classes.size(), fg.num_factors());
    expect_well_formed(fg, g);
  }
}

TEST(Properties, TerminationDeterminismAndCoarseness) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    auto fg = replicated_fg(rng, 2 + trial % 4);
    for (auto a : {Algorithm::cp, Algorithm::acp}) {
      auto g = run_colour_passing(fg, a);
      EXPECT_LE(g.iterations, fg.num_randvars() + fg.num_factors() + 1);
      expect_well_formed(fg, g);
      auto again = run_colour_passing(fg_from_json(fg_to_json(fg)), a);
      EXPECT_EQ(again.rv_colour, g.rv_colour);
      EXPECT_EQ(again.factor_colour, g.factor_colour);
      EXPECT_EQ(again.annotations, g.annotations);
      EXPECT_EQ(again.rearrangements, g.rearrangements);
    }
    auto cp = run_cp(fg), acp = run_acp(fg);
    EXPECT_LE(acp.num_groups(), cp.num_groups());
    // every copy of the block collapses into the same classes
    EXPECT_EQ(acp.rv_classes.size(), 4u) << trial;
    EXPECT_EQ(acp.factor_classes.size(), 2u) << trial;
  }
}

TEST(Properties, RearrangedGraphNeedsNoFurtherRearrangement) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto fg = replicated_fg(rng, 3);
    auto g = run_acp(fg);
    auto g2 = run_acp(rearranged_fg(fg, g));
    for (const auto& pi : g2.rearrangements) EXPECT_TRUE(pi.is_identity());
    EXPECT_EQ(g2.rv_colour, g.rv_colour);
  }
}

TEST(Refine, ShatteredNodesLeaveTheirClass) {
  auto fg = load_fg("employees.json");
  auto g = run_acp(fg);
  auto r = refine(fg, g, {fg.randvar_id("ComA")}, {});
  EXPECT_GT(r.num_groups(), g.num_groups());
  for (const auto& c : r.rv_classes)
    if (std::find(c.begin(), c.end(), fg.randvar_id("ComA")) != c.end()) {
      EXPECT_EQ(c.size(), 1u);
    }
  expect_well_formed(fg, r);
}
