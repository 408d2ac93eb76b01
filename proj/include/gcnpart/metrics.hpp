#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcnpart/error.hpp"

namespace gcnpart {

/// Measured traffic of one partitioner on one dataset, averaged over epochs.
struct RunSummary {
  std::string dataset;
  std::string partitioner;
  double avg_volume = 0.0;
  double max_volume = 0.0;
  double avg_msgs = 0.0;
  double max_msgs = 0.0;
  std::optional<double> runtime_seconds;  // only when timing was requested
  double balance_ratio = 0.0;
};

struct ComparisonRow {
  std::string dataset;
  std::string partitioner;
  double avg_volume_norm = 1.0;
  double max_volume_norm = 1.0;
  double avg_msgs_norm = 1.0;
  double max_msgs_norm = 1.0;
  std::optional<double> runtime_ratio;  // informational: simulated timing
  double balance_ratio = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<ComparisonRow> geometric_means;  // dataset = "geomean"
  std::optional<ComparisonRow> hp_over_gp;     // dataset = "geomean", partitioner = "hp/gp"
};

/// exp(mean(log x)); every x must be positive.
inline double geometric_mean(std::span<const double> values) {
  detail::require(!values.empty(), "metrics", "geometric mean of no values");
  double sum = 0.0;
  for (double v : values) {
    detail::require(v > 0.0, "metrics", "geometric mean needs positive values");
    sum += std::log(v);
  }
  return std::exp(sum / static_cast<double>(values.size()));
}

namespace detail {

/// value / baseline; 1 when both are zero (no traffic either way).
inline double normalized(double value, double baseline) {
  if (baseline == 0.0) return value == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return value / baseline;
}

/// Geometric mean that tolerates zeros by returning 0 when any value is 0.
inline double geomean_or_zero(const std::vector<double>& values) {
  for (double v : values) {
    if (v == 0.0) return 0.0;
  }
  return geometric_mean(values);
}

}  // namespace detail

/// Normalizes every run against the "rp" run of the same dataset and adds
/// per-partitioner geometric means across datasets.
inline Comparison compare(std::span<const RunSummary> runs) {
  std::map<std::string, const RunSummary*> baseline;
  for (const auto& r : runs) {
    if (r.partitioner == "rp") baseline[r.dataset] = &r;
  }
  Comparison out;
  std::vector<std::string> order;
  for (const auto& r : runs) {
    const auto it = baseline.find(r.dataset);
    detail::require(it != baseline.end(), "metrics", "missing RP baseline for dataset '" + r.dataset + "'");
    const RunSummary& rp = *it->second;
    ComparisonRow row;
    row.dataset = r.dataset;
    row.partitioner = r.partitioner;
    row.avg_volume_norm = detail::normalized(r.avg_volume, rp.avg_volume);
    row.max_volume_norm = detail::normalized(r.max_volume, rp.max_volume);
    row.avg_msgs_norm = detail::normalized(r.avg_msgs, rp.avg_msgs);
    row.max_msgs_norm = detail::normalized(r.max_msgs, rp.max_msgs);
    if (r.runtime_seconds && rp.runtime_seconds && *rp.runtime_seconds > 0.0) {
      row.runtime_ratio = *r.runtime_seconds / *rp.runtime_seconds;
    }
    row.balance_ratio = r.balance_ratio;
    out.rows.push_back(row);
    if (std::find(order.begin(), order.end(), r.partitioner) == order.end()) order.push_back(r.partitioner);
  }
  for (const auto& name : order) {
    std::vector<double> av, mv, am, mm, rt, bal;
    bool all_timed = true;
    for (const auto& row : out.rows) {
      if (row.partitioner != name) continue;
      av.push_back(row.avg_volume_norm);
      mv.push_back(row.max_volume_norm);
      am.push_back(row.avg_msgs_norm);
      mm.push_back(row.max_msgs_norm);
      bal.push_back(row.balance_ratio);
      if (row.runtime_ratio) {
        rt.push_back(*row.runtime_ratio);
      } else {
        all_timed = false;
      }
    }
    ComparisonRow g;
    g.dataset = "geomean";
    g.partitioner = name;
    g.avg_volume_norm = detail::geomean_or_zero(av);
    g.max_volume_norm = detail::geomean_or_zero(mv);
    g.avg_msgs_norm = detail::geomean_or_zero(am);
    g.max_msgs_norm = detail::geomean_or_zero(mm);
    if (all_timed && !rt.empty()) g.runtime_ratio = detail::geomean_or_zero(rt);
    g.balance_ratio = *std::max_element(bal.begin(), bal.end());
    out.geometric_means.push_back(g);
  }
  const ComparisonRow* hp = nullptr;
  const ComparisonRow* gp = nullptr;
  for (const auto& g : out.geometric_means) {
    if (g.partitioner == "hp") hp = &g;
    if (g.partitioner == "gp") gp = &g;
  }
  if (hp && gp) {
    ComparisonRow r;
    r.dataset = "geomean";
    r.partitioner = "hp/gp";
    r.avg_volume_norm = detail::normalized(hp->avg_volume_norm, gp->avg_volume_norm);
    r.max_volume_norm = detail::normalized(hp->max_volume_norm, gp->max_volume_norm);
    r.avg_msgs_norm = detail::normalized(hp->avg_msgs_norm, gp->avg_msgs_norm);
    r.max_msgs_norm = detail::normalized(hp->max_msgs_norm, gp->max_msgs_norm);
    if (hp->runtime_ratio && gp->runtime_ratio) r.runtime_ratio = *hp->runtime_ratio / *gp->runtime_ratio;
    r.balance_ratio = std::max(hp->balance_ratio, gp->balance_ratio);
    out.hp_over_gp = r;
  }
  return out;
}

inline constexpr const char* kComparisonCsvHeader =
    "dataset,partitioner,avg_volume_norm,max_volume_norm,avg_msgs_norm,max_msgs_norm,runtime_ratio,balance_ratio";

namespace detail {

inline std::string format_real(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// One row per line under kComparisonCsvHeader; runtime_ratio is "NA" unless
/// timing was recorded.
inline void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << kComparisonCsvHeader << '\n';
  auto emit = [&](const ComparisonRow& r) {
    out << r.dataset << ',' << r.partitioner << ',' << detail::format_real(r.avg_volume_norm) << ','
        << detail::format_real(r.max_volume_norm) << ',' << detail::format_real(r.avg_msgs_norm) << ','
        << detail::format_real(r.max_msgs_norm) << ','
        << (r.runtime_ratio ? detail::format_real(*r.runtime_ratio) : std::string("NA")) << ','
        << detail::format_real(r.balance_ratio) << '\n';
  };
  for (const auto& r : c.rows) emit(r);
  for (const auto& r : c.geometric_means) emit(r);
  if (c.hp_over_gp) emit(*c.hp_over_gp);
}

inline nlohmann::ordered_json to_json(const ComparisonRow& r) {
  nlohmann::ordered_json j;
  j["dataset"] = r.dataset;
  j["partitioner"] = r.partitioner;
  j["avg_volume_norm"] = r.avg_volume_norm;
  j["max_volume_norm"] = r.max_volume_norm;
  j["avg_msgs_norm"] = r.avg_msgs_norm;
  j["max_msgs_norm"] = r.max_msgs_norm;
  j["runtime_ratio"] = r.runtime_ratio ? nlohmann::ordered_json(*r.runtime_ratio) : nlohmann::ordered_json();
  j["runtime_informational"] = true;
  j["balance_ratio"] = r.balance_ratio;
  return j;
}

inline nlohmann::ordered_json to_json(const Comparison& c) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : c.rows) j["rows"].push_back(to_json(r));
  j["geometric_means"] = nlohmann::ordered_json::array();
  for (const auto& r : c.geometric_means) j["geometric_means"].push_back(to_json(r));
  j["hp_over_gp"] = c.hp_over_gp ? to_json(*c.hp_over_gp) : nlohmann::ordered_json();
  return j;
}

}  // namespace gcnpart
