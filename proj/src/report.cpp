#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "fairicl/errors.hpp"
#include "fairicl/harness.hpp"
#include "fairicl/keyvalue.hpp"

namespace fairicl {

namespace {

constexpr std::array<const char*, 9> kSummaryMetrics{
    "accuracy", "precision", "recall", "f1", "pi", "psi", "di", "kappa", "e"};

double metric_value(const MetricsBundle& m, std::string_view name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "f1") return m.f1;
  if (name == "pi") return m.pi;
  if (name == "psi") return m.psi;
  if (name == "di") return m.di;
  if (name == "kappa") return m.kappa;
  return m.e;
}

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string cell_key(std::string_view method, std::uint64_t seed, std::size_t repeat) {
  return std::string(method) + "/" + std::to_string(seed) + "/" + std::to_string(repeat);
}

void compare(std::vector<std::string>& diffs, const std::string& where, const std::string& field,
             double expected, double actual) {
  const bool same = (std::isinf(expected) && std::isinf(actual) && (expected > 0) == (actual > 0)) ||
                    std::abs(expected - actual) <= 1e-12;
  if (!same) {
    std::ostringstream os;
    os << std::setprecision(17) << where << ": " << field << " report=" << expected
       << " recomputed=" << actual;
    diffs.push_back(os.str());
  }
}

void compare_bundles(std::vector<std::string>& diffs, const std::string& where,
                     const MetricsBundle& reported, const MetricsBundle& recomputed) {
  compare(diffs, where, "count", static_cast<double>(reported.count),
          static_cast<double>(recomputed.count));
  compare(diffs, where, "invalid", static_cast<double>(reported.invalid),
          static_cast<double>(recomputed.invalid));
  for (const auto* name : kSummaryMetrics) {
    compare(diffs, where, name, metric_value(reported, name), metric_value(recomputed, name));
  }
  if (reported.degenerate_group != recomputed.degenerate_group) {
    diffs.push_back(where + ": degenerate_group differs");
  }
  for (int g = 0; g < 2; ++g) {
    const auto& a = reported.confusion[g];
    const auto& b = recomputed.confusion[g];
    if (std::tie(a.tp, a.fp, a.tn, a.fn, a.invalid, a.n) !=
        std::tie(b.tp, b.fp, b.tn, b.fn, b.invalid, b.n)) {
      diffs.push_back(where + ": confusion for z=" + std::to_string(g) + " differs");
    }
  }
}

}  // namespace

nlohmann::json to_json(const CellReport& cell) {
  nlohmann::json j{{"seed", cell.seed},
                   {"repeat", cell.repeat},
                   {"method", std::string(to_string(cell.method))},
                   {"status", cell.ok ? "ok" : "failed"},
                   {"requests", cell.requests}};
  if (!cell.ok) {
    j["error"] = cell.error;
    return j;
  }
  j["metrics"] = to_json(cell.metrics);
  nlohmann::json batches = nlohmann::json::array();
  for (const auto& b : cell.batches) {
    batches.push_back({{"batch", b.batch},
                       {"ice_ids", b.ice_ids},
                       {"requests", b.requests},
                       {"metrics", to_json(b.metrics)}});
  }
  j["batches"] = std::move(batches);
  return j;
}

nlohmann::json report_json(const RunReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) cells.push_back(to_json(c));
  return {{"format", "fairicl-report"},
          {"version", 1},
          {"config", to_json(report.config)},
          {"predictions", "predictions.csv"},
          {"cells", std::move(cells)}};
}

std::string predictions_csv(const std::vector<CellReport>& cells) {
  std::string out = "id,y,z,y_hat,method,seed,repeat\n";
  for (const auto& c : cells) {
    if (!c.ok) continue;
    const auto method = std::string(to_string(c.method));
    for (std::size_t i = 0; i < c.test_ids.size(); ++i) {
      out += std::to_string(c.test_ids[i]) + ',' + std::to_string(c.y[i]) + ',' +
             std::to_string(c.z[i]) + ',' + std::string(to_string(c.y_hat[i])) + ',' + method +
             ',' + std::to_string(c.seed) + ',' + std::to_string(c.repeat) + '\n';
    }
  }
  return out;
}

void write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", report_json(report).dump(2) + "\n");
  write_text(dir / "predictions.csv", predictions_csv(report.cells));

  nlohmann::json traces = nlohmann::json::array();
  for (const auto& c : report.cells) {
    if (c.traces.empty()) continue;
    nlohmann::json per_batch = nlohmann::json::array();
    for (const auto& t : c.traces) per_batch.push_back(to_json(t));
    traces.push_back({{"seed", c.seed}, {"repeat", c.repeat}, {"traces", std::move(per_batch)}});
  }
  write_text(dir / "traces.json", traces.dump(2) + "\n");

  nlohmann::json contexts = nlohmann::json::array();
  for (std::size_t s = 0; s < report.contexts.size(); ++s) {
    nlohmann::json batches = nlohmann::json::array();
    for (const auto& ctx : report.contexts[s]) batches.push_back(to_json(ctx));
    contexts.push_back({{"seed", report.config.seeds.at(s)}, {"batches", std::move(batches)}});
  }
  write_text(dir / "contexts.json", contexts.dump(2) + "\n");

  const auto summary = aggregate(report.cells);
  write_text(dir / "summary.json", to_json(summary).dump(2) + "\n");
  write_text(dir / "summary.txt", format_summary_table(summary));

  nlohmann::json cell_seconds = nlohmann::json::object();
  for (const auto& [key, seconds] : report.stats.cell_seconds) cell_seconds[key] = seconds;
  write_text(dir / "run_stats.json", nlohmann::json{{"seconds", report.stats.seconds},
                                                    {"cache_hits", report.stats.cache_hits},
                                                    {"backend_calls", report.stats.backend_calls},
                                                    {"cell_seconds", std::move(cell_seconds)}}
                                             .dump(2) + "\n");
}

std::vector<MethodSummary> aggregate(const std::vector<CellReport>& cells) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::vector<double>> values;  // "<method index>/<metric>"
  auto summary_for = [&](Method method) -> MethodSummary& {
    for (auto& s : out) {
      if (s.method == method) return s;
    }
    out.emplace_back().method = method;
    return out.back();
  };
  for (const auto& c : cells) {
    auto& s = summary_for(c.method);
    ++s.cells;
    if (!c.ok) {
      ++s.failed_cells;
      continue;
    }
    if (c.metrics.degenerate_group) ++s.degenerate_cells;
    for (const auto& b : c.batches) {
      if (b.metrics.degenerate_group) ++s.degenerate_batches;
    }
    for (const auto* name : kSummaryMetrics) {
      values[std::to_string(static_cast<int>(c.method)) + "/" + name].push_back(
          metric_value(c.metrics, name));
    }
  }
  for (auto& s : out) {
    for (const auto* name : kSummaryMetrics) {
      const auto it = values.find(std::to_string(static_cast<int>(s.method)) + "/" + name);
      if (it == values.end()) continue;
      const auto& xs = it->second;
      MetricSummary m;
      m.n = xs.size();
      for (double x : xs) m.mean += x;
      m.mean /= static_cast<double>(m.n);
      if (m.n > 1 && std::isfinite(m.mean)) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / static_cast<double>(m.n - 1));
      }
      s.metrics[name] = m;
    }
  }
  return out;
}

std::vector<MethodSummary> aggregate_report(const nlohmann::json& report) {
  std::vector<CellReport> cells;
  for (const auto& j : report.at("cells")) {
    CellReport c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.repeat = j.at("repeat").get<std::size_t>();
    c.method = method_from_string(j.at("method").get<std::string>());
    c.ok = j.at("status") == "ok";
    if (c.ok) {
      c.metrics = metrics_from_json(j.at("metrics"));
      for (const auto& b : j.at("batches")) {
        c.batches.push_back({b.at("batch").get<std::size_t>(), {}, b.at("requests").get<std::uint64_t>(),
                             metrics_from_json(b.at("metrics"))});
      }
    } else {
      c.error = j.value("error", "");
    }
    cells.push_back(std::move(c));
  }
  return aggregate(cells);
}

nlohmann::json to_json(const std::vector<MethodSummary>& summary) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : summary) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, m] : s.metrics) {
      metrics[name] = {{"mean", number_or_inf(m.mean)}, {"sd", number_or_inf(m.sd)}, {"n", m.n}};
    }
    out.push_back({{"method", std::string(to_string(s.method))},
                   {"cells", s.cells},
                   {"failed_cells", s.failed_cells},
                   {"degenerate_cells", s.degenerate_cells},
                   {"degenerate_batches", s.degenerate_batches},
                   {"metrics", std::move(metrics)}});
  }
  return out;
}

std::string format_summary_table(const std::vector<MethodSummary>& summary) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "method";
  for (const auto* name : kSummaryMetrics) os << std::right << std::setw(17) << name;
  os << std::right << std::setw(8) << "cells" << std::setw(8) << "failed" << std::setw(12)
     << "degenerate" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& s : summary) {
    os << std::left << std::setw(12) << to_string(s.method) << std::right;
    for (const auto* name : kSummaryMetrics) {
      const auto it = s.metrics.find(name);
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(3);
      if (it == s.metrics.end()) {
        cell << "-";
      } else if (std::isinf(it->second.mean)) {
        cell << "inf";
      } else {
        cell << it->second.mean << " +- " << it->second.sd;
      }
      os << std::setw(17) << cell.str();
    }
    os << std::setw(8) << s.cells << std::setw(8) << s.failed_cells << std::setw(12)
       << s.degenerate_batches << '\n';
  }
  return os.str();
}

DumpCheckResult dump_check(const std::filesystem::path& dir) {
  const auto report = nlohmann::json::parse(read_file((dir / "report.json").string()));
  const auto csv = read_file((dir / "predictions.csv").string());

  std::map<std::string, LabeledOutcomes> dumped;
  std::istringstream lines(csv);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "id,y,z,y_hat,method,seed,repeat") {
        throw SchemaError("predictions.csv: unexpected header '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw SchemaError("predictions.csv line " + std::to_string(line_no) + ": expected 7 fields");
    }
    try {
      auto& o = dumped[fields[4] + "/" + fields[5] + "/" + fields[6]];
      o.y.push_back(std::stoi(fields[1]));
      o.z.push_back(std::stoi(fields[2]));
      o.y_hat.push_back(label_from_string(fields[3]));
    } catch (const std::exception& e) {
      throw SchemaError("predictions.csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  DumpCheckResult result;
  std::set<std::string> seen;
  for (const auto& cell : report.at("cells")) {
    if (cell.at("status") != "ok") continue;
    const auto key = cell_key(cell.at("method").get<std::string>(), cell.at("seed").get<std::uint64_t>(),
                              cell.at("repeat").get<std::size_t>());
    seen.insert(key);
    const auto it = dumped.find(key);
    if (it == dumped.end()) {
      result.diffs.push_back(key + ": no rows in predictions.csv");
      continue;
    }
    const auto& o = it->second;
    const auto reported = metrics_from_json(cell.at("metrics"));
    compare_bundles(result.diffs, key, reported, classification_report(o, reported.alpha, reported.rho));

    std::size_t offset = 0;
    for (const auto& b : cell.at("batches")) {
      const auto bm = metrics_from_json(b.at("metrics"));
      const auto where = key + " batch " + std::to_string(b.at("batch").get<std::size_t>());
      if (offset + bm.count > o.y.size()) {
        result.diffs.push_back(where + ": batch extends past the dumped rows");
        break;
      }
      const auto lo = static_cast<std::ptrdiff_t>(offset);
      const auto hi = static_cast<std::ptrdiff_t>(offset + bm.count);
      LabeledOutcomes slice{{o.y.begin() + lo, o.y.begin() + hi},
                            {o.y_hat.begin() + lo, o.y_hat.begin() + hi},
                            {o.z.begin() + lo, o.z.begin() + hi}};
      compare_bundles(result.diffs, where, bm, classification_report(slice, bm.alpha, bm.rho));
      offset += bm.count;
    }
    if (offset != o.y.size()) result.diffs.push_back(key + ": batches do not cover the dump");
    ++result.cells_checked;
  }
  for (const auto& [key, o] : dumped) {
    if (!seen.contains(key)) result.diffs.push_back(key + ": rows without a successful report cell");
  }
  return result;
}

}  // namespace fairicl
