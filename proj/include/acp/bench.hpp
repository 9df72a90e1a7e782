#pragma once

// Synthetic benchmark families, timing and the amortisation ratio alpha.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acp/core_model.hpp"
#include "acp/error.hpp"
#include "acp/histogram.hpp"
#include "acp/inference.hpp"
#include "acp/pfg_construction.hpp"
#include "acp/symmetry.hpp"

namespace acp {

enum class Family { commutative, permuted };

inline std::string to_string(Family f) { return f == Family::commutative ? "commutative" : "permuted"; }

inline Family parse_family(const std::string& s) {
  if (s == "commutative") return Family::commutative;
  if (s == "permuted") return Family::permuted;
  fail(ErrorKind::invalid_argument, "unknown family '" + s + "'");
}

struct BenchConfig {
  Family family = Family::commutative;
  std::vector<std::size_t> d_grid{2, 4, 8};
  /// Commutative factors per graph (commutative family).
  std::size_t k = 1;
  /// Fraction of factors with permuted arguments (permuted family).
  double p = 0.03;
  std::size_t seeds = 5;
  std::size_t queries_per_fg = 2;
  std::uint64_t first_seed = 0;

  void validate() const {
    if (d_grid.empty()) fail(ErrorKind::invalid_argument, "empty d grid");
    for (auto d : d_grid)
      if (d < 2) fail(ErrorKind::invalid_argument, "d must be at least 2");
    if (family == Family::commutative && k < 1) fail(ErrorKind::invalid_argument, "k must be at least 1");
    if (family == Family::permuted && !(p >= 0.0 && p <= 1.0)) fail(ErrorKind::invalid_argument, "p must lie in [0, 1]");
    if (seeds < 1) fail(ErrorKind::invalid_argument, "seeds must be at least 1");
    if (queries_per_fg < 1) fail(ErrorKind::invalid_argument, "queries_per_fg must be at least 1");
  }
};

struct BenchRecord {
  Family family = Family::commutative;
  std::size_t d = 0;
  double param = 0;
  std::uint64_t seed = 0;
  double offline_cp_ms = 0;
  double offline_acp_ms = 0;
  double query_ve_ms = 0;
  double query_lve_cp_ms = 0;
  double query_lve_acp_ms = 0;
  std::size_t groups_cp = 0;
  std::size_t groups_acp = 0;
  std::optional<double> alpha;
};

struct BenchRun {
  std::vector<BenchRecord> records;
  /// One line per instance dropped because the three marginals disagreed.
  std::vector<std::string> disagreements;
};

/// Offline overhead divided by online gain per query.
inline Rational alpha(const Rational& delta_offline_ms, const Rational& delta_gain_ms) {
  if (sgn(delta_gain_ms) <= 0) fail(ErrorKind::non_positive_gain, "ACP gave no query speedup");
  return delta_offline_ms / delta_gain_ms;
}

inline std::optional<double> alpha_or_null(double delta_offline_ms, double delta_gain_ms) {
  if (!(delta_gain_ms > 0)) return std::nullopt;
  return alpha(Rational(delta_offline_ms), Rational(delta_gain_ms)).get_d();
}

namespace detail::bench {

inline std::size_t floor_log2(std::size_t d) { return std::bit_width(d) - 1; }

class Draw {
 public:
  Draw(std::uint64_t seed, std::uint64_t family, std::uint64_t d, std::uint64_t param) {
    std::seed_seq seq{seed, family, d, param};
    rng_.seed(seq);
  }
  std::mt19937_64& rng() { return rng_; }

  /// Decimal in [0.1, 10] with three fractional digits.
  Rational potential() { return Rational(static_cast<long>(uniform(100, 10000)), 1000); }

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  /// Random Boolean table with no pair of commutative arguments.
  PotentialTable asymmetric(std::size_t arity) {
    for (;;) {
      std::vector<Rational> v(std::size_t(1) << arity);
      for (auto& x : v) x = potential();
      PotentialTable t(std::vector<Range>(arity, Range::boolean()), std::move(v));
      if (!has_commutative_pair(t)) return t;
    }
  }

  /// Boolean table over `leaves` commutative arguments followed by one free argument.
  PotentialTable hub(std::size_t leaves) {
    for (;;) {
      std::vector<Rational> by_count(2 * (leaves + 1));
      for (auto& x : by_count) x = potential();
      const std::size_t arity = leaves + 1;
      std::vector<Rational> v(std::size_t(1) << arity);
      for (std::size_t r = 0; r < v.size(); ++r) {
        // first argument is the most significant bit; label 0 is "true"
        std::size_t falses = std::popcount(r >> 1);
        v[r] = by_count[2 * falses + (r & 1)];
      }
      PotentialTable t(std::vector<Range>(arity, Range::boolean()), std::move(v));
      std::vector<std::size_t> last_pair{leaves - 1, leaves};
      if (!is_commutative(t, last_pair)) return t;
    }
  }

 private:
  static bool has_commutative_pair(const PotentialTable& t) {
    for (std::size_t i = 0; i < t.arity(); ++i)
      for (std::size_t j = i + 1; j < t.arity(); ++j) {
        std::vector<std::size_t> s{i, j};
        if (is_commutative(t, s)) return true;
      }
    return false;
  }

  std::mt19937_64 rng_;
};

inline std::string idx(const std::string& stem, std::size_t i) { return stem + std::to_string(i); }
inline std::string idx(const std::string& stem, std::size_t j, std::size_t i) {
  return stem + std::to_string(j) + "_" + std::to_string(i);
}

}  // namespace detail::bench

/// Employee-style blocks: d leaves Com_i feed a hub commutative over them plus Rev,
/// each leaf carries Sal_i and an equal-length padding chain. Each further
/// commutative factor gets its own d leaves.
inline FactorGraph gen_commutative_fg(std::size_t d, std::size_t k, std::uint64_t seed) {
  using namespace detail::bench;
  if (d < 2) fail(ErrorKind::invalid_argument, "d must be at least 2");
  if (k < 1) fail(ErrorKind::invalid_argument, "k must be at least 1");
  Draw draw(seed, 1, d, k);
  const std::size_t lg = floor_log2(d);
  const std::size_t chain = draw.uniform(0, lg > 1 ? lg - 1 : 0);

  auto t_com = draw.asymmetric(1);
  auto t_hub = draw.hub(d);
  auto t_sal = draw.asymmetric(3);
  std::vector<PotentialTable> t_link;
  for (std::size_t l = 0; l < chain; ++l) t_link.push_back(draw.asymmetric(2));

  FactorGraph fg;
  const auto b = Range::boolean();
  for (std::size_t i = 1; i <= d; ++i) fg.add_randvar(idx("Com", i), b);
  fg.add_randvar("Rev", b);
  for (std::size_t i = 1; i <= d; ++i) fg.add_randvar(idx("Sal", i), b);
  for (std::size_t i = 1; i <= d; ++i)
    for (std::size_t l = 1; l <= chain; ++l) fg.add_randvar(idx("Ch", l, i), b);

  for (std::size_t i = 1; i <= d; ++i) fg.add_factor(idx("fcom", i), {idx("Com", i)}, t_com);
  std::vector<std::string> hub_args;
  for (std::size_t i = 1; i <= d; ++i) hub_args.push_back(idx("Com", i));
  hub_args.push_back("Rev");
  fg.add_factor("hub1", hub_args, t_hub);
  for (std::size_t i = 1; i <= d; ++i) fg.add_factor(idx("fsal", i), {idx("Com", i), "Rev", idx("Sal", i)}, t_sal);
  for (std::size_t i = 1; i <= d; ++i) {
    std::string prev = idx("Sal", i);
    for (std::size_t l = 1; l <= chain; ++l) {
      fg.add_factor(idx("fch", l, i), {prev, idx("Ch", l, i)}, t_link[l - 1]);
      prev = idx("Ch", l, i);
    }
  }

  for (std::size_t j = 2; j <= k; ++j) {
    auto t_leaf = draw.asymmetric(1);
    auto t_extra = draw.hub(d);
    std::vector<std::string> args;
    for (std::size_t i = 1; i <= d; ++i) {
      fg.add_randvar(idx("L", j, i), b);
      fg.add_factor(idx("fl", j, i), {idx("L", j, i)}, t_leaf);
      args.push_back(idx("L", j, i));
    }
    args.push_back("Rev");
    fg.add_factor(idx("hub", j), args, t_extra);
  }
  return fg;
}

/// d individuals, each with randvars A..E, an optional padding chain and two
/// factors sharing a global G; ceil(p * #factors) factors get their arguments
/// permuted.
inline FactorGraph gen_permuted_fg(std::size_t d, double p, std::uint64_t seed) {
  using namespace detail::bench;
  if (d < 2) fail(ErrorKind::invalid_argument, "d must be at least 2");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::invalid_argument, "p must lie in [0, 1]");
  // p only picks the permuted factors, so every p shares one underlying model
  Draw draw(seed, 2, d, 0);
  const std::size_t lg = floor_log2(d);
  const std::size_t chain = draw.uniform(0, lg > 3 ? lg - 3 : 0);

  auto t_phi = draw.asymmetric(4);
  auto t_psi = draw.asymmetric(3);
  std::vector<PotentialTable> t_link;
  for (std::size_t l = 0; l < chain; ++l) t_link.push_back(draw.asymmetric(2));

  struct Spec {
    std::string name;
    std::vector<std::string> args;
    const PotentialTable* table;
  };
  std::vector<Spec> factors;
  FactorGraph fg;
  const auto b = Range::boolean();
  for (std::size_t i = 1; i <= d; ++i) {
    for (const char* s : {"A", "B", "C", "D", "E"}) fg.add_randvar(idx(s, i), b);
    for (std::size_t l = 1; l <= chain; ++l) fg.add_randvar(idx("P", l, i), b);
  }
  fg.add_randvar("G", b);
  for (std::size_t i = 1; i <= d; ++i) {
    factors.push_back({idx("phi", i), {idx("A", i), idx("B", i), idx("C", i), "G"}, &t_phi});
    factors.push_back({idx("psi", i), {idx("C", i), idx("D", i), idx("E", i)}, &t_psi});
    std::string prev = idx("E", i);
    for (std::size_t l = 1; l <= chain; ++l) {
      factors.push_back({idx("fp", l, i), {prev, idx("P", l, i)}, &t_link[l - 1]});
      prev = idx("P", l, i);
    }
  }

  const std::size_t m = factors.size();
  const auto permuted = static_cast<std::size_t>(std::ceil(p * static_cast<double>(m) - 1e-9));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), draw.rng());
  std::vector<bool> flip(m, false);
  for (std::size_t i = 0; i < permuted; ++i) flip[order[i]] = true;

  for (std::size_t f = 0; f < m; ++f) {
    const auto& s = factors[f];
    if (!flip[f]) {
      fg.add_factor(s.name, s.args, *s.table);
      continue;
    }
    auto pi = ArgPermutation::identity(s.args.size());
    while (pi.is_identity()) std::shuffle(pi.source.begin(), pi.source.end(), draw.rng());
    std::vector<std::string> args(s.args.size());
    for (std::size_t i = 0; i < args.size(); ++i) args[i] = s.args[pi.source[i]];
    fg.add_factor(s.name, args, rearrange_arguments(*s.table, pi));
  }
  return fg;
}

inline FactorGraph generate(Family family, std::size_t d, double param, std::uint64_t seed) {
  return family == Family::commutative ? gen_commutative_fg(d, static_cast<std::size_t>(param), seed)
                                       : gen_permuted_fg(d, param, seed);
}

/// Median over `reps` runs of the mean time of `f`, batching calls shorter than 2 ms.
template <class F>
double median_ms(F&& f, int reps = 3) {
  using clock = std::chrono::steady_clock;
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    auto start = clock::now();
    std::size_t calls = 0;
    do {
      f();
      ++calls;
    } while (clock::now() - start < std::chrono::milliseconds(2));
    std::chrono::duration<double, std::milli> spent = clock::now() - start;
    times.push_back(spent.count() / static_cast<double>(calls));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

/// First and last declared randvars, then evenly spaced ones in between.
inline std::vector<std::string> benchmark_queries(const FactorGraph& fg, std::size_t count) {
  const std::size_t n = fg.num_randvars();
  std::vector<std::string> out;
  if (count == 1 || n == 1) {
    out.push_back(fg.randvar(0).name);
    return out;
  }
  for (std::size_t q = 0; q < count && q < n; ++q) out.push_back(fg.randvar(q * (n - 1) / (count - 1)).name);
  return out;
}

/// One instance. Returns nullopt and fills `why` when the marginals disagree.
inline std::optional<BenchRecord> bench_instance(Family family, std::size_t d, double param, std::uint64_t seed,
                                                 std::size_t queries, std::string* why = nullptr) {
  auto fg = generate(family, d, param, seed);
  BenchRecord rec;
  rec.family = family;
  rec.d = d;
  rec.param = param;
  rec.seed = seed;

  auto cp = compress(fg, Algorithm::cp);
  auto acp = compress(fg, Algorithm::acp);
  rec.offline_cp_ms = median_ms([&] { compress(fg, Algorithm::cp); });
  rec.offline_acp_ms = median_ms([&] { compress(fg, Algorithm::acp); });
  rec.groups_cp = cp.grouping.num_groups();
  rec.groups_acp = acp.grouping.num_groups();

  auto targets = benchmark_queries(fg, queries);
  for (const auto& target : targets) {
    Query q{target, {}};
    auto ve = ve_marginal(fg, q);
    auto lcp = lve_marginal(cp.pfg, q);
    auto lacp = lve_marginal(acp.pfg, q);
    if (!marginals_agree(ve, lcp) || !marginals_agree(ve, lacp)) {
      if (why) {
        std::ostringstream s;
        s << to_string(family) << " d=" << d << " param=" << param << " seed=" << seed << " target=" << target
          << " err_cp=" << max_relative_error(ve, lcp) << " err_acp=" << max_relative_error(ve, lacp);
        *why = s.str();
      }
      return std::nullopt;
    }
    rec.query_ve_ms += median_ms([&] { ve_marginal(fg, q); });
    rec.query_lve_cp_ms += median_ms([&] { lve_marginal(cp.pfg, q); });
    rec.query_lve_acp_ms += median_ms([&] { lve_marginal(acp.pfg, q); });
  }
  const auto n = static_cast<double>(targets.size());
  rec.query_ve_ms /= n;
  rec.query_lve_cp_ms /= n;
  rec.query_lve_acp_ms /= n;
  rec.alpha = alpha_or_null(rec.offline_acp_ms - rec.offline_cp_ms, rec.query_lve_cp_ms - rec.query_lve_acp_ms);
  return rec;
}

inline BenchRun run_benchmark(const BenchConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  BenchRun run;
  const double param = cfg.family == Family::commutative ? static_cast<double>(cfg.k) : cfg.p;
  for (auto d : cfg.d_grid)
    for (std::uint64_t s = cfg.first_seed; s < cfg.first_seed + cfg.seeds; ++s) {
      std::string why;
      auto rec = bench_instance(cfg.family, d, param, s, cfg.queries_per_fg, &why);
      if (rec) {
        run.records.push_back(*rec);
      } else {
        run.disagreements.push_back(why);
        if (log) *log << "marginal disagreement, record dropped: " << why << "\n";
      }
    }
  return run;
}

inline const char* csv_header() {
  return "family,d,param,seed,offline_cp_ms,offline_acp_ms,query_ve_ms,query_lve_cp_ms,query_lve_acp_ms,groups_cp,"
         "groups_acp,alpha";
}

inline std::string csv_line(const BenchRecord& r) {
  std::ostringstream s;
  s << to_string(r.family) << ',' << r.d << ',' << r.param << ',' << r.seed << std::fixed << std::setprecision(6) << ','
    << r.offline_cp_ms << ',' << r.offline_acp_ms << ',' << r.query_ve_ms << ',' << r.query_lve_cp_ms << ','
    << r.query_lve_acp_ms << ',' << r.groups_cp << ',' << r.groups_acp << ',';
  if (r.alpha) s << *r.alpha;
  return s.str();
}

inline void write_csv(std::ostream& out, const std::vector<BenchRecord>& records) {
  out << csv_header() << "\n";
  for (const auto& r : records) out << csv_line(r) << "\n";
}

inline void write_csv_file(const std::string& path, const std::vector<BenchRecord>& records) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::invalid_argument, "cannot write " + path);
  write_csv(out, records);
}

}  // namespace acp
