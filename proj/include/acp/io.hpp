#pragma once

// JSON encoding of factor graphs and parfactor graphs.
// A document with a top-level "logvars" key is a parfactor graph.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "acp/core_model.hpp"

namespace acp {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    fail(ErrorKind::parse, std::string(where) + " lacks \"" + key + "\"");
  return j.at(key);
}

inline std::string require_string(const Json& j, const char* what) {
  if (!j.is_string()) fail(ErrorKind::parse, std::string(what) + " must be a string");
  return j.get<std::string>();
}

inline std::vector<std::string> require_strings(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::parse, std::string(what) + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(require_string(e, what));
  return out;
}

inline Rational read_potential(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  fail(ErrorKind::parse, "potential must be a decimal string");
}

inline Json rows_json(const std::vector<std::vector<std::string>>& labels, const std::vector<Rational>& potentials) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < potentials.size(); ++r)
    rows.push_back(Json{{"assignment", labels[r]}, {"potential", format_rational(potentials[r])}});
  return rows;
}

inline Json evidence_json(const std::vector<std::pair<std::string, std::string>>& ev) {
  Json out = Json::array();
  for (const auto& [rv, value] : ev) out.push_back(Json{{"randvar", rv}, {"value", value}});
  return out;
}

inline std::vector<std::pair<std::string, std::string>> read_evidence(const Json& doc) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!doc.contains("evidence")) return out;
  const Json& ev = doc.at("evidence");
  if (!ev.is_array()) fail(ErrorKind::parse, "\"evidence\" must be an array");
  for (const auto& e : ev)
    out.emplace_back(require_string(require(e, "randvar", "evidence entry"), "evidence randvar"),
                     require_string(require(e, "value", "evidence entry"), "evidence value"));
  return out;
}

}  // namespace detail

inline FactorGraph fg_from_json(const Json& doc) {
  FactorGraph fg;
  for (const auto& rv : detail::require(doc, "randvars", "document"))
    fg.add_randvar(detail::require_string(detail::require(rv, "name", "randvar"), "randvar name"),
                   Range(detail::require_strings(detail::require(rv, "range", "randvar"), "range")));
  for (const auto& f : detail::require(doc, "factors", "document")) {
    std::string name = detail::require_string(detail::require(f, "name", "factor"), "factor name");
    auto args = detail::require_strings(detail::require(f, "args", "factor"), "factor args");
    std::vector<Range> ranges;
    for (const auto& a : args) ranges.push_back(fg.randvar(fg.randvar_id(a)).range);
    std::vector<std::pair<std::vector<std::string>, Rational>> rows;
    for (const auto& row : detail::require(f, "rows", "factor"))
      rows.emplace_back(detail::require_strings(detail::require(row, "assignment", "row"), "assignment"),
                        detail::read_potential(detail::require(row, "potential", "row")));
    try {
      fg.add_factor(name, args, build_table(ranges, rows));
    } catch (const Error& e) {
      throw Error(e.kind(), "factor '" + name + "': " + e.what());
    }
  }
  for (const auto& [rv, value] : detail::read_evidence(doc)) fg.set_evidence(rv, value);
  return fg;
}

inline Json fg_to_json(const FactorGraph& fg) {
  Json doc;
  doc["randvars"] = Json::array();
  for (const auto& rv : fg.randvars()) doc["randvars"].push_back(Json{{"name", rv.name}, {"range", rv.range.labels()}});
  doc["factors"] = Json::array();
  for (const auto& f : fg.factors()) {
    std::vector<std::vector<std::string>> labels;
    for (std::size_t r = 0; r < f.table.rows(); ++r) {
      auto a = f.table.assignment_of(r);
      std::vector<std::string> row;
      for (std::size_t i = 0; i < a.size(); ++i) row.push_back(f.table.range(i).label(a[i]));
      labels.push_back(std::move(row));
    }
    doc["factors"].push_back(
        Json{{"name", f.name}, {"args", f.args}, {"rows", detail::rows_json(labels, f.table.potentials())}});
  }
  std::vector<std::pair<std::string, std::string>> ev;
  for (const auto& [v, label] : fg.evidence()) ev.emplace_back(fg.randvar(v).name, fg.randvar(v).range.label(label));
  doc["evidence"] = detail::evidence_json(ev);
  return doc;
}

inline ParfactorGraph pfg_from_json(const Json& doc) {
  ParfactorGraph g;
  for (const auto& l : detail::require(doc, "logvars", "document"))
    g.logvars.push_back({detail::require_string(detail::require(l, "name", "logvar"), "logvar name"),
                         detail::require_strings(detail::require(l, "domain", "logvar"), "logvar domain")});
  for (const auto& rv : detail::require(doc, "randvars", "document")) {
    Prv p;
    p.name = detail::require_string(detail::require(rv, "name", "randvar"), "randvar name");
    p.range = Range(detail::require_strings(detail::require(rv, "range", "randvar"), "range"));
    if (rv.contains("logvars")) p.logvars = detail::require_strings(rv.at("logvars"), "randvar logvars");
    p.members = rv.contains("members") ? detail::require_strings(rv.at("members"), "randvar members")
                                       : std::vector<std::string>{p.name};
    g.prvs.push_back(std::move(p));
  }
  for (const auto& f : detail::require(doc, "factors", "document")) {
    Parfactor pf;
    pf.name = detail::require_string(detail::require(f, "name", "factor"), "factor name");
    auto args = detail::require_strings(detail::require(f, "args", "factor"), "factor args");
    std::vector<std::vector<std::string>> bindings;
    if (f.contains("arg_logvars")) {
      for (const auto& b : f.at("arg_logvars")) bindings.push_back(detail::require_strings(b, "arg_logvars entry"));
      if (bindings.size() != args.size()) fail(ErrorKind::parse, "factor '" + pf.name + "': arg_logvars length mismatch");
    }
    for (std::size_t i = 0; i < args.size(); ++i)
      pf.args.push_back({args[i], bindings.empty() ? g.prv(args[i]).logvars : bindings[i]});
    if (f.contains("crv")) {
      const Json& c = f.at("crv");
      const Json& idx = detail::require(c, "arg_index", "crv");
      if (!idx.is_number_unsigned() && !idx.is_number_integer()) fail(ErrorKind::parse, "crv arg_index must be an integer");
      pf.crv = CrvSpec{idx.get<std::size_t>(),
                       detail::require_string(detail::require(c, "counted_logvar", "crv"), "counted_logvar")};
    }
    pf.members = f.contains("members") ? detail::require_strings(f.at("members"), "factor members")
                                       : std::vector<std::string>{pf.name};
    if (pf.crv && pf.crv->arg_index >= pf.args.size())
      fail(ErrorKind::parse, "factor '" + pf.name + "': crv arg_index out of range");

    // Rows keyed by labels (or histogram strings for the counted arg).
    std::vector<std::size_t> dims;
    std::vector<Range> ranges;
    std::vector<std::size_t> counted_n(args.size(), 0);
    for (std::size_t i = 0; i < args.size(); ++i) {
      ranges.push_back(g.prv(args[i]).range);
      if (pf.crv && pf.crv->arg_index == i) {
        counted_n[i] = g.logvar(pf.crv->counted_logvar).domain.size();
        dims.push_back(count_histograms(counted_n[i], ranges[i].size()));
      } else {
        dims.push_back(ranges[i].size());
      }
    }
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    std::vector<std::optional<Rational>> slots(total);
    for (const auto& row : detail::require(f, "rows", "factor")) {
      auto labels = detail::require_strings(detail::require(row, "assignment", "row"), "assignment");
      if (labels.size() != args.size()) fail(ErrorKind::parse, "factor '" + pf.name + "': assignment length mismatch");
      std::size_t index = 0;
      for (std::size_t i = 0; i < args.size(); ++i) {
        std::size_t v;
        if (pf.crv && pf.crv->arg_index == i) {
          Histogram h = parse_histogram(labels[i]);
          std::uint64_t sum = 0;
          for (auto c : h) sum += c;
          if (h.size() != ranges[i].size() || sum != counted_n[i])
            fail(ErrorKind::invalid_argument, "factor '" + pf.name + "': histogram " + labels[i] + " does not fit");
          v = rank_histogram(h);
        } else {
          auto idx = ranges[i].index_of(labels[i]);
          if (!idx) fail(ErrorKind::invalid_argument, "factor '" + pf.name + "': label '" + labels[i] + "' not in range");
          v = *idx;
        }
        index = index * dims[i] + v;
      }
      if (slots[index]) fail(ErrorKind::duplicate_row, "factor '" + pf.name + "': row given twice");
      Rational value = detail::read_potential(detail::require(row, "potential", "row"));
      if (value <= 0)
        fail(ErrorKind::non_positive_potential, "factor '" + pf.name + "': potential " + format_rational(value));
      slots[index] = value;
    }
    for (std::size_t r = 0; r < total; ++r) {
      if (!slots[r]) fail(ErrorKind::missing_row, "factor '" + pf.name + "': row " + std::to_string(r) + " missing");
      pf.potentials.push_back(*slots[r]);
    }
    g.parfactors.push_back(std::move(pf));
  }
  for (const auto& [rv, value] : detail::read_evidence(doc)) g.evidence[rv] = value;
  g.validate();
  return g;
}

inline Json pfg_to_json(const ParfactorGraph& g) {
  Json doc;
  doc["logvars"] = Json::array();
  for (const auto& l : g.logvars) doc["logvars"].push_back(Json{{"name", l.name}, {"domain", l.domain}});
  doc["randvars"] = Json::array();
  for (const auto& p : g.prvs)
    doc["randvars"].push_back(
        Json{{"name", p.name}, {"range", p.range.labels()}, {"logvars", p.logvars}, {"members", p.members}});
  doc["factors"] = Json::array();
  for (const auto& pf : g.parfactors) {
    Json f;
    f["name"] = pf.name;
    std::vector<std::string> args;
    Json bindings = Json::array();
    for (const auto& a : pf.args) {
      args.push_back(a.prv);
      bindings.push_back(a.logvars);
    }
    f["args"] = args;
    f["arg_logvars"] = bindings;
    if (pf.crv) f["crv"] = Json{{"arg_index", pf.crv->arg_index}, {"counted_logvar", pf.crv->counted_logvar}};
    f["members"] = pf.members;

    auto dims = g.arg_dims(pf);
    std::vector<std::vector<std::string>> value_labels(pf.args.size());
    for (std::size_t i = 0; i < pf.args.size(); ++i) {
      const Prv& p = g.prv(pf.args[i].prv);
      if (pf.crv && pf.crv->arg_index == i) {
        for (const auto& h : enumerate_histograms(static_cast<std::uint32_t>(g.logvar(pf.crv->counted_logvar).domain.size()),
                                                  p.range.size()))
          value_labels[i].push_back(format_histogram(h));
      } else {
        value_labels[i] = p.range.labels();
      }
    }
    std::vector<std::vector<std::string>> labels;
    for (std::size_t r = 0; r < pf.potentials.size(); ++r) {
      std::vector<std::string> row(pf.args.size());
      std::size_t rest = r;
      for (std::size_t i = pf.args.size(); i-- > 0;) {
        row[i] = value_labels[i][rest % dims[i]];
        rest /= dims[i];
      }
      labels.push_back(std::move(row));
    }
    f["rows"] = detail::rows_json(labels, pf.potentials);
    doc["factors"].push_back(std::move(f));
  }
  std::vector<std::pair<std::string, std::string>> ev(g.evidence.begin(), g.evidence.end());
  doc["evidence"] = detail::evidence_json(ev);
  return doc;
}

inline bool is_pfg_document(const Json& doc) { return doc.is_object() && doc.contains("logvars"); }

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::parse, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "'" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::parse, "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

inline FactorGraph read_fg_file(const std::string& path) { return fg_from_json(read_json_file(path)); }
inline ParfactorGraph read_pfg_file(const std::string& path) { return pfg_from_json(read_json_file(path)); }

using Model = std::variant<FactorGraph, ParfactorGraph>;

inline Model read_model_file(const std::string& path) {
  Json doc = read_json_file(path);
  if (is_pfg_document(doc)) return pfg_from_json(doc);
  return fg_from_json(doc);
}

}  // namespace acp
