// acp_cli: compress, ground, query and benchmark factor graphs.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "acp/acp.hpp"

namespace {

constexpr int exit_validation = 2;
constexpr int exit_disagreement = 3;

std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty() || !acp::detail::all_digits(item))
      acp::fail(acp::ErrorKind::invalid_argument, "bad --d-grid entry '" + item + "'");
    out.push_back(std::stoul(item));
  }
  return out;
}

std::map<std::string, std::string> parse_evidence(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      acp::fail(acp::ErrorKind::invalid_argument, "evidence must read NAME=VALUE, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compress factor graphs with (advanced) colour passing and run exact queries"};
  app.require_subcommand(1);

  std::string in, out, stats, algorithm = "acp";
  auto* compress = app.add_subcommand("compress", "Build a parfactor graph from a factor graph");
  compress->add_option("--in", in, "Factor graph JSON")->required();
  compress->add_option("--algorithm", algorithm, "cp or acp")->check(CLI::IsMember({"cp", "acp"}));
  compress->add_option("--out", out, "Parfactor graph JSON")->required();
  compress->add_option("--stats", stats, "Grouping statistics JSON");

  auto* ground = app.add_subcommand("ground", "Expand a parfactor graph into a factor graph");
  ground->add_option("--in", in, "Parfactor graph JSON")->required();
  ground->add_option("--out", out, "Factor graph JSON")->required();

  std::string model, target;
  std::vector<std::string> evidence;
  auto* query = app.add_subcommand("query", "Marginal of one randvar");
  query->add_option("--model", model, "Factor graph or parfactor graph JSON")->required();
  query->add_option("--target", target, "Query randvar")->required();
  query->add_option("--evidence", evidence, "NAME=VALUE observations");

  std::string family, grid = "2,4,8";
  std::size_t k = 1, seeds = 5, queries = 2;
  double p = 0.03;
  auto* bench = app.add_subcommand("bench", "Time VE and lifted VE on synthetic families");
  bench->add_option("--family", family, "commutative or permuted")
      ->required()
      ->check(CLI::IsMember({"commutative", "permuted"}));
  bench->add_option("--d-grid", grid, "Comma-separated domain sizes")->capture_default_str();
  auto* k_opt = bench->add_option("--k", k, "Commutative factors per graph")->capture_default_str();
  auto* p_opt = bench->add_option("--p", p, "Fraction of permuted factors")->capture_default_str();
  k_opt->excludes(p_opt);
  bench->add_option("--seeds", seeds, "Instances per domain size")->capture_default_str();
  bench->add_option("--queries", queries, "Queries per instance")->capture_default_str();
  bench->add_option("--out", out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : exit_validation;
  }

  try {
    if (*compress) {
      auto fg = acp::read_fg_file(in);
      auto alg = algorithm == "cp" ? acp::Algorithm::cp : acp::Algorithm::acp;
      auto r = acp::compress(fg, alg);
      acp::write_json_file(out, acp::pfg_to_json(r.pfg));
      if (!stats.empty()) acp::write_json_file(stats, acp::grouping_stats_json(fg, r));
      std::cout << r.pfg.parfactors.size() << " parfactors, " << r.grouping.num_groups() << " groups\n";
    } else if (*ground) {
      auto pfg = acp::read_pfg_file(in);
      pfg.validate();
      acp::write_json_file(out, acp::fg_to_json(acp::ground_pfg(pfg)));
    } else if (*query) {
      acp::Query q{target, parse_evidence(evidence)};
      auto m = acp::read_model_file(model);
      auto result = std::holds_alternative<acp::FactorGraph>(m)
                        ? acp::ve_marginal(std::get<acp::FactorGraph>(m), q)
                        : acp::lve_marginal(std::get<acp::ParfactorGraph>(m), q);
      std::cout << acp::marginal_json(result).dump() << "\n";
    } else if (*bench) {
      acp::BenchConfig cfg;
      cfg.family = acp::parse_family(family);
      if (cfg.family == acp::Family::commutative && p_opt->count() > 0)
        acp::fail(acp::ErrorKind::invalid_argument, "--p applies to the permuted family");
      if (cfg.family == acp::Family::permuted && k_opt->count() > 0)
        acp::fail(acp::ErrorKind::invalid_argument, "--k applies to the commutative family");
      cfg.d_grid = parse_grid(grid);
      cfg.k = k;
      cfg.p = p;
      cfg.seeds = seeds;
      cfg.queries_per_fg = queries;
      auto run = acp::run_benchmark(cfg, &std::cerr);
      acp::write_csv_file(out, run.records);
      std::cout << run.records.size() << " records written to " << out << "\n";
      if (!run.disagreements.empty()) return exit_disagreement;
    }
  } catch (const acp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  }
  return 0;
}
