#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "damarl/common.hpp"

namespace damarl {

struct EpisodeRecord {
  int episode = 0;
  double mean_return = 0.0;
  int collisions = 0;
  int touches = 0;
  std::string outcome;  // empty for scenarios without terminal outcomes
};

struct RunSeries {
  nlohmann::json config;  // the stream's header record
  std::vector<EpisodeRecord> episodes;
};

// Parses a metrics.jsonl training stream (header record + episode records).
inline RunSeries load_metrics(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("metrics: cannot open " + file.string());
  RunSeries s;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("metrics: " + file.string() + " line " +
                        std::to_string(line_no) + " is not valid JSON");
    }
    const std::string type = rec.value("type", "");
    if (type == "header") {
      s.config = rec.value("config", nlohmann::json::object());
    } else if (type == "episode") {
      EpisodeRecord e;
      e.episode = rec.at("episode").get<int>();
      e.mean_return = rec.at("mean_return").get<double>();
      e.collisions = rec.value("collisions", 0);
      e.touches = rec.value("touches", 0);
      e.outcome = rec.value("outcome", "");
      s.episodes.push_back(std::move(e));
    }
  }
  return s;
}

inline std::vector<double> mean_return_curve(const RunSeries& s) {
  std::vector<double> curve;
  curve.reserve(s.episodes.size());
  for (const EpisodeRecord& e : s.episodes) curve.push_back(e.mean_return);
  return curve;
}

// Mean of the last `window` entries (the whole curve if shorter).
inline double tail_mean(const std::vector<double>& curve, int window) {
  if (curve.empty()) throw SizeError("tail_mean: empty curve");
  if (window <= 0) throw ConfigError("tail_mean: window must be positive");
  const std::size_t n = std::min<std::size_t>(window, curve.size());
  double sum = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) sum += curve[i];
  return sum / n;
}

// Centered-on-the-past rolling mean with the given window (1 = identity).
inline std::vector<double> rolling_mean(const std::vector<double>& curve,
                                        int window) {
  if (window <= 0) throw ConfigError("rolling_mean: window must be positive");
  std::vector<double> out(curve.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    acc += curve[i];
    if (i >= static_cast<std::size_t>(window)) acc -= curve[i - window];
    out[i] = acc / std::min<std::size_t>(i + 1, window);
  }
  return out;
}

struct Aggregate {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std: one run aggregates to zero band
  std::size_t runs = 0;
};

// Pointwise mean/std across runs, truncated to the shortest curve.
inline Aggregate aggregate_curves(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) throw SizeError("aggregate_curves: no curves");
  std::size_t len = curves[0].size();
  for (const auto& c : curves) len = std::min(len, c.size());
  if (len == 0) throw SizeError("aggregate_curves: empty curve");
  Aggregate a;
  a.runs = curves.size();
  a.mean.resize(len);
  a.stddev.resize(len);
  for (std::size_t t = 0; t < len; ++t) {
    double s = 0.0;
    for (const auto& c : curves) s += c[t];
    const double m = s / curves.size();
    // two-pass form: no cancellation, and a single run gives exactly zero
    double dev2 = 0.0;
    for (const auto& c : curves) dev2 += (c[t] - m) * (c[t] - m);
    a.mean[t] = m;
    a.stddev[t] = std::sqrt(dev2 / curves.size());
  }
  return a;
}

inline void write_curve_csv(const std::filesystem::path& file, const Aggregate& a) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("export: cannot write " + file.string());
  out.precision(17);
  out << "episode,mean_return,std,runs\n";
  for (std::size_t t = 0; t < a.mean.size(); ++t)
    out << t << ',' << a.mean[t] << ',' << a.stddev[t] << ',' << a.runs << '\n';
}

// Generic small CSV writer: header plus string rows the caller formats.
inline void write_rows_csv(const std::filesystem::path& file,
                           const std::string& header,
                           const std::vector<std::string>& rows) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw ConfigError("export: cannot write " + file.string());
  out << header << '\n';
  for (const std::string& r : rows) out << r << '\n';
}

}  // namespace damarl
