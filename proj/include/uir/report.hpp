#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "uir/metrics.hpp"
#include "uir/tensor.hpp"

namespace uir {

// Everything needed to rerun and to report one pipeline stage sequence: the
// fully resolved config, the metric history, and per-stage wall-clock.
// Wall-clock goes to its own file so the metrics file stays byte-reproducible.
struct RunRecord {
  std::string name;
  nlohmann::json resolved_config;
  std::vector<MetricReport> history;
  std::map<std::string, double> wall_clock_seconds;
};

inline nlohmann::json metrics_to_json(const std::vector<MetricReport>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& report : history) {
    for (const auto& [kind, m] : report.per_kind) {
      nlohmann::json row;
      row["stage"] = report.stage;
      row["kind"] = kind;
      row["psnr"] = m.psnr;
      row["ssim"] = m.ssim;
      row["samples"] = m.samples;
      arr.push_back(row);
    }
  }
  return arr;
}

inline std::vector<MetricReport> metrics_from_json(const nlohmann::json& arr) {
  std::vector<MetricReport> history;
  for (const auto& row : arr) {
    const std::string stage = row.at("stage").get<std::string>();
    if (history.empty() || history.back().stage != stage) {
      MetricReport r;
      r.stage = stage;
      history.push_back(r);
    }
    KindMetrics m;
    m.psnr = row.at("psnr").get<double>();
    m.ssim = row.at("ssim").get<double>();
    m.samples = row.at("samples").get<int64_t>();
    history.back().per_kind[row.at("kind").get<std::string>()] = m;
  }
  return history;
}

// Aligned table, one row per stage, one PSNR/SSIM column per kind, cells
// formatted as "31.25/0.8886".
inline std::string render_table(const std::vector<MetricReport>& history) {
  std::vector<std::string> kinds;
  for (const auto& report : history)
    for (const auto& [kind, m] : report.per_kind)
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);

  size_t stage_w = 5;
  for (const auto& r : history) stage_w = std::max(stage_w, r.stage.size());

  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(stage_w), "stage");
  out += buf;
  for (const auto& k : kinds) {
    std::snprintf(buf, sizeof(buf), "  %-14s", k.c_str());
    out += buf;
  }
  out += '\n';
  out += std::string(stage_w + kinds.size() * 16, '-');
  out += '\n';
  for (const auto& r : history) {
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(stage_w), r.stage.c_str());
    out += buf;
    for (const auto& k : kinds) {
      auto it = r.per_kind.find(k);
      if (it == r.per_kind.end()) {
        std::snprintf(buf, sizeof(buf), "  %-14s", "-");
      } else {
        char cell[32];
        std::snprintf(cell, sizeof(cell), "%.2f/%.4f", it->second.psnr, it->second.ssim);
        std::snprintf(buf, sizeof(buf), "  %-14s", cell);
      }
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw IoError("failed writing '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return s;
}

// Emits <dir>/config, <dir>/metrics, <dir>/report.txt and <dir>/run.json.
inline void write_report(const RunRecord& record, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());

  write_text_file(dir + "/config", record.resolved_config.dump(2) + "\n");
  write_text_file(dir + "/metrics", metrics_to_json(record.history).dump(2) + "\n");
  write_text_file(dir + "/report.txt", render_table(record.history));

  nlohmann::json run;
  run["name"] = record.name;
  run["wall_clock_seconds"] = record.wall_clock_seconds;
  write_text_file(dir + "/run.json", run.dump(2) + "\n");
}

}  // namespace uir
