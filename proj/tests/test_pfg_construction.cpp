#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace acp;
using acp::testing::boolean_table;
using acp::testing::load_fg;
using acp::testing::rationals;

namespace {

const Parfactor& parfactor_with(const ParfactorGraph& g, const std::string& member) {
  for (const auto& pf : g.parfactors)
    if (std::find(pf.members.begin(), pf.members.end(), member) != pf.members.end()) return pf;
  throw std::runtime_error("no parfactor grounds to " + member);
}

const Prv& prv_with(const ParfactorGraph& g, const std::string& member) {
  for (const auto& p : g.prvs)
    if (std::find(p.members.begin(), p.members.end(), member) != p.members.end()) return p;
  throw std::runtime_error("no PRV grounds to " + member);
}

std::string describe(const ParfactorGraph& g, const Parfactor& pf) {
  std::string out = pf.name + "(";
  for (std::size_t i = 0; i < pf.args.size(); ++i) {
    if (i) out += ", ";
    bool counted = pf.crv && pf.crv->arg_index == i;
    if (counted) out += "#" + pf.crv->counted_logvar + "[";
    out += pf.args[i].prv;
    if (!pf.args[i].logvars.empty()) {
      out += "(";
      for (std::size_t k = 0; k < pf.args[i].logvars.size(); ++k) out += (k ? "," : "") + pf.args[i].logvars[k];
      out += ")";
    }
    if (counted) out += "]";
  }
  (void)g;
  return out + ")";
}

/// Factor names of `pf` that contain ground randvar `rv`.
std::set<std::string> incidence(const ParfactorGraph& g, const Parfactor& pf, const std::string& rv) {
  std::set<std::string> out;
  for (const auto& f : ground_parfactor(g, pf))
    if (std::find(f.args.begin(), f.args.end(), rv) != f.args.end()) out.insert(f.name);
  return out;
}

/// Randvar classes by name for a PFG: PRV members.
std::vector<std::vector<std::string>> prv_members(const ParfactorGraph& g) {
  std::vector<std::vector<std::string>> out;
  for (const auto& p : g.prvs) out.push_back(acp::testing::sorted_names(p.members));
  std::sort(out.begin(), out.end());
  return out;
}

void expect_equivalent(const FactorGraph& fg, const BuildResult& r) {
  auto ground = ground_pfg(r.pfg);
  EXPECT_EQ(acp::testing::randvar_names(ground), acp::testing::randvar_names(fg));
  EXPECT_EQ(acp::testing::factor_names(ground), acp::testing::factor_names(fg));
  EXPECT_TRUE(acp::testing::same_weights(fg, ground));
  EXPECT_LE(r.report.rows_after, r.report.rows_before);
  EXPECT_EQ(ground.evidence().size(), fg.evidence().size());
}

/// One parameterless R plus two-member classes a, b, wired as `pairs` (index into a, index into b).
FactorGraph incidence_fg(const std::vector<std::pair<int, int>>& pairs, int b_size) {
  FactorGraph fg;
  fg.add_randvar("R", Range::boolean());
  fg.add_randvar("Sa1", Range::boolean());
  fg.add_randvar("Sa2", Range::boolean());
  for (int j = 1; j <= b_size; ++j) fg.add_randvar("Tb" + std::to_string(j), Range::boolean());
  auto t = boolean_table(3, {"1", "2", "3", "4", "5", "6", "7", "8"});
  int k = 0;
  for (auto [a, b] : pairs)
    fg.add_factor("phi" + std::to_string(++k), {"R", "Sa" + std::to_string(a), "Tb" + std::to_string(b)}, t);
  return fg;
}

}  // namespace

TEST(NeedsCrv, Examples) {
  EXPECT_TRUE(needs_crv(1, 2));
  EXPECT_FALSE(needs_crv(2, 2));
  EXPECT_FALSE(needs_crv(1, 1));
}

TEST(CollapseTable, CommutativePair) {
  auto t = load_fg("commutative_pair.json").factor(0).table;
  std::vector<std::size_t> sub{0, 1};
  auto c = collapse_table_to_crv(t, sub);
  EXPECT_EQ(c.crv_index, 0u);
  EXPECT_EQ(c.potentials, rationals({"1", "2", "3"}));
}

TEST(CollapseTable, HubKeepsRevenue) {
  auto fg = load_fg("employees.json");
  std::vector<std::size_t> sub{0, 1};
  auto c = collapse_table_to_crv(fg.factor(*fg.find_factor("f3")).table, sub);
  ASSERT_EQ(c.potentials.size(), 6u);
  // ([2,0],t) ([2,0],f) ([1,1],t) ([1,1],f) ([0,2],t) ([0,2],f)
  EXPECT_EQ(c.potentials, rationals({"5", "1", "3", "2", "1", "4"}));
}

TEST(CollapseTable, ConstantAndErrors) {
  auto t = boolean_table(3, {"2", "2", "2", "2", "2", "2", "2", "2"});
  std::vector<std::size_t> sub{1, 2};
  auto c = collapse_table_to_crv(t, sub);
  EXPECT_EQ(c.crv_index, 1u);
  EXPECT_EQ(c.potentials, std::vector<Rational>(6, Rational(2)));
  std::vector<std::size_t> ab{0, 1};
  try {
    collapse_table_to_crv(load_fg("permuted_pair.json").factor(0).table, ab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_commutative);
  }
}

TEST(CollapseTable, GroundingRestoresTheTable) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 2 + trial % 3;
    std::vector<std::size_t> counted(n - (trial % 2));
    std::iota(counted.begin(), counted.end(), 0);
    if (counted.size() < 2) continue;
    auto t = acp::testing::symmetrize(acp::testing::random_table(rng, std::vector<Range>(n, Range::boolean()), 9), counted);
    auto c = collapse_table_to_crv(t, counted);
    ParfactorGraph g;
    std::vector<std::string> dom, members;
    for (std::size_t i = 0; i < counted.size(); ++i) {
      dom.push_back("x" + std::to_string(i + 1));
      members.push_back("C" + std::to_string(i + 1));
    }
    g.logvars = {{"X", dom}};
    g.prvs = {{"C", Range::boolean(), {"X"}, members}};
    Parfactor pf{"phi", {{"C", {"X"}}}, CrvSpec{0, "X"}, c.potentials, {"phi"}};
    if (counted.size() < n) {
      g.prvs.push_back({"D", Range::boolean(), {}, {"D"}});
      pf.args.push_back({"D", {}});
    }
    g.parfactors.push_back(pf);
    auto ground = ground_parfactor(g, g.parfactors[0]);
    ASSERT_EQ(ground.size(), 1u);
    EXPECT_EQ(ground[0].table, t);
  }
}

TEST(BuildPfg, FourNodeChain) {
  auto fg = load_fg("four_node_chain.json");
  auto r = build_pfg(fg, run_acp(fg));
  EXPECT_EQ(r.report.refinements, 0u);
  ASSERT_EQ(r.pfg.logvars.size(), 1u);
  EXPECT_EQ(r.pfg.logvars[0].domain.size(), 2u);
  EXPECT_EQ(prv_members(r.pfg), (std::vector<std::vector<std::string>>{{"A", "D"}, {"B", "C"}}));
  EXPECT_EQ(prv_with(r.pfg, "A").name, "R");
  EXPECT_EQ(prv_with(r.pfg, "B").name, "S");
  EXPECT_EQ(describe(r.pfg, parfactor_with(r.pfg, "phi1")), "g1(R(X), S(X))");
  EXPECT_EQ(describe(r.pfg, parfactor_with(r.pfg, "phi2")), "g2(#X[S(X)])");
  EXPECT_EQ(parfactor_with(r.pfg, "phi2").potentials, rationals({"5", "6", "7"}));
  expect_equivalent(fg, r);
  // The partition function survives compression.
  EXPECT_EQ(partition_function(fg), partition_function(ground_pfg(r.pfg)));
}

TEST(BuildPfg, FourNodeChainGolden) {
  auto fg = load_fg("four_node_chain.json");
  auto r = build_pfg(fg, run_acp(fg));
  EXPECT_EQ(pfg_to_json(r.pfg), read_json_file(acp::testing::data_path("four_node_chain.pfg.json")));
}

TEST(BuildPfg, Employees) {
  auto fg = load_fg("employees.json");
  auto r = build_pfg(fg, run_acp(fg));
  EXPECT_EQ(r.report.refinements, 0u);
  EXPECT_EQ(prv_with(r.pfg, "ComA").name, "Com");
  EXPECT_EQ(prv_with(r.pfg, "ComA").members, (std::vector<std::string>{"ComA", "ComB"}));
  EXPECT_EQ(prv_with(r.pfg, "SalA").name, "Sal");
  EXPECT_EQ(describe(r.pfg, parfactor_with(r.pfg, "f1")), "g1(Com(X))");
  EXPECT_EQ(describe(r.pfg, parfactor_with(r.pfg, "f3")), "g2(#X[Com(X)], Rev)");
  EXPECT_EQ(describe(r.pfg, parfactor_with(r.pfg, "f4")), "g3(Com(X), Rev, Sal(X))");
  EXPECT_EQ(parfactor_with(r.pfg, "f3").potentials, rationals({"5", "1", "3", "2", "1", "4"}));
  expect_equivalent(fg, r);
  EXPECT_EQ(r.report.rows_before, 2u + 2u + 8u + 8u + 8u);
  EXPECT_EQ(r.report.rows_after, 2u + 6u + 8u);
}

TEST(BuildPfg, SingletonsGiveTheGraphBack) {
  auto fg = load_fg("permuted_pair.json");
  auto r = build_pfg(fg, run_cp(fg));
  for (const auto& p : r.pfg.prvs) EXPECT_TRUE(p.logvars.empty());
  for (const auto& pf : r.pfg.parfactors) EXPECT_FALSE(pf.crv);
  EXPECT_TRUE(r.pfg.logvars.empty());
  auto ground = ground_pfg(r.pfg);
  ASSERT_EQ(ground.num_factors(), fg.num_factors());
  for (std::size_t f = 0; f < fg.num_factors(); ++f) {
    EXPECT_EQ(ground.factor(f).args, fg.factor(f).args);
    EXPECT_EQ(ground.factor(f).table, fg.factor(f).table);
  }
}

TEST(IntroduceLogvars, SharedLogvar) {
  auto fg = incidence_fg({{1, 1}, {2, 2}}, 2);
  auto r = build_pfg(fg, run_acp(fg));
  const auto& pf = parfactor_with(r.pfg, "phi1");
  EXPECT_EQ(describe(r.pfg, pf), "g1(R, Sa(X), Tb(X))");
  EXPECT_EQ(r.report.cases[0], "shared");
  EXPECT_EQ(r.pfg.logvar("X").domain.size(), 2u);
  expect_equivalent(fg, r);
}

TEST(IntroduceLogvars, DistinctLogvars) {
  auto fg = incidence_fg({{1, 1}, {1, 2}, {2, 1}, {2, 2}}, 2);
  auto r = build_pfg(fg, run_acp(fg));
  const auto& pf = parfactor_with(r.pfg, "phi1");
  EXPECT_EQ(describe(r.pfg, pf), "g1(R, Sa(X), Tb(Y))");
  EXPECT_EQ(r.report.cases[0], "distinct");
  EXPECT_EQ(pf.members.size(), 4u);
  expect_equivalent(fg, r);
}

TEST(IntroduceLogvars, TwoLogvarPrv) {
  auto fg = incidence_fg({{1, 1}, {1, 2}, {2, 3}, {2, 4}}, 4);
  auto r = build_pfg(fg, run_acp(fg));
  const auto& pf = parfactor_with(r.pfg, "phi1");
  EXPECT_EQ(describe(r.pfg, pf), "g1(R, Sa(X), Tb(X,Y))");
  EXPECT_EQ(r.report.cases[0], "two_logvars");
  EXPECT_EQ(prv_with(r.pfg, "Tb1").logvars.size(), 2u);
  EXPECT_EQ(r.pfg.logvar("X").domain.size() * r.pfg.logvar("Y").domain.size(), 4u);
  expect_equivalent(fg, r);
}

TEST(IntroduceLogvars, FreeGroundingsAreRefinedAway) {
  // f1(A,B) and f2(B,A) with one table agree row by row, so CP groups A with
  // B, but no counting argument can express the non-commutative table.
  FactorGraph fg;
  fg.add_randvar("A", Range::boolean());
  fg.add_randvar("B", Range::boolean());
  auto t = boolean_table(2, {"1", "2", "3", "4"});
  fg.add_factor("f1", {"A", "B"}, t);
  fg.add_factor("f2", {"B", "A"}, t);
  auto g = run_cp(fg);
  ASSERT_EQ(g.rv_classes.size(), 1u);
  try {
    build_pfg(fg, g, BuildOptions{true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_commutative);
  }
  auto r = build_pfg(fg, g);
  EXPECT_GE(r.report.refinements, 1u);
  expect_equivalent(fg, r);
}

TEST(IntroduceLogvars, PartialCountIsRefinedAway) {
  // Four interchangeable randvars, but each factor sees only two of them.
  FactorGraph fg;
  for (int i = 1; i <= 4; ++i) fg.add_randvar("C" + std::to_string(i), Range::boolean());
  auto t = boolean_table(2, {"1", "2", "2", "3"});
  fg.add_factor("f1", {"C1", "C2"}, t);
  fg.add_factor("f2", {"C3", "C4"}, t);
  auto g = run_acp(fg);
  ASSERT_EQ(g.rv_classes.size(), 1u);
  EXPECT_THROW(build_pfg(fg, g, BuildOptions{true}), Error);
  auto r = build_pfg(fg, g);
  EXPECT_GE(r.report.refinements, 1u);
  expect_equivalent(fg, r);
}

TEST(Properties, EquivalenceOnPlantedGraphs) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    auto fg = acp::testing::planted_fg(rng, 2 + trial % 3);
    for (auto a : {Algorithm::acp, Algorithm::cp}) {
      auto r = compress(fg, a);
      expect_equivalent(fg, r);
      auto back = pfg_from_json(pfg_to_json(r.pfg));
      EXPECT_EQ(pfg_to_json(back), pfg_to_json(r.pfg));
    }
    // the planted block needs no repair under ACP
    EXPECT_EQ(compress(fg, Algorithm::acp).report.refinements, 0u) << trial;
  }
}

TEST(Properties, EquivalenceOnChaoticGraphs) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 150; ++trial) {
    auto fg = acp::testing::chaotic_fg(rng, 3 + trial % 8, 2 + trial % 9);
    if (trial % 4 == 0) fg.set_evidence("V0", "true");
    for (auto a : {Algorithm::acp, Algorithm::cp}) {
      auto r = compress(fg, a);
      expect_equivalent(fg, r);
    }
  }
}

TEST(Properties, SharedLogvarsMatchIncidence) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 80; ++trial) {
    auto fg = trial % 2 ? acp::testing::planted_fg(rng, 2 + trial % 3) : acp::testing::chaotic_fg(rng, 6, 8);
    auto r = compress(fg, Algorithm::acp);
    const auto& g = r.pfg;
    for (const auto& pf : g.parfactors)
      for (std::size_t a = 0; a < pf.args.size(); ++a)
        for (std::size_t b = a + 1; b < pf.args.size(); ++b) {
          const auto& A = pf.args[a];
          const auto& B = pf.args[b];
          if (A.logvars.size() != 1 || B.logvars.size() != 1) continue;
          if (pf.crv && (pf.crv->arg_index == a || pf.crv->arg_index == b)) continue;
          const auto& pa = g.prv(A.prv);
          const auto& pb = g.prv(B.prv);
          if (A.logvars[0] == B.logvars[0]) {
            for (std::size_t x = 0; x < pa.members.size(); ++x)
              EXPECT_EQ(incidence(g, pf, pa.members[x]), incidence(g, pf, pb.members[x]));
          } else {
            for (const auto& ma : pa.members)
              for (const auto& mb : pb.members) EXPECT_NE(incidence(g, pf, ma), incidence(g, pf, mb));
          }
        }
  }
}

TEST(Properties, FragmentCompliance) {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 80; ++trial) {
    auto fg = acp::testing::chaotic_fg(rng, 4 + trial % 6, 3 + trial % 7);
    auto r = compress(fg, Algorithm::acp);
    bool two_logvar_prv = false;
    for (const auto& p : r.pfg.prvs) two_logvar_prv |= p.logvars.size() == 2;
    if (!two_logvar_prv) continue;
    for (const auto& pf : r.pfg.parfactors) EXPECT_LE(r.pfg.parfactor_logvars(pf).size() + (pf.crv ? 1 : 0), 2u);
  }
}

TEST(Stats, JsonCarriesClassesAndRows) {
  auto fg = load_fg("employees.json");
  auto r = compress(fg, Algorithm::acp);
  auto j = grouping_stats_json(fg, r);
  EXPECT_EQ(j["algorithm"], "acp");
  EXPECT_EQ(j["rv_classes"].size(), 3u);
  EXPECT_EQ(j["factor_classes"].size(), 3u);
  EXPECT_EQ(j["rows_before"], 28u);
  EXPECT_EQ(j["rows_after"], 16u);
  EXPECT_EQ(j["annotations"]["f3"], Json::array({0, 1}));
}
