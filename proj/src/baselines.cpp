#include "gmraim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmraim/error.hpp"

namespace gmraim {

void ClusteringParams::validate() const {
  if (window < 4) throw Error(ErrorCode::kInvalidConfig, "clustering.window must be >= 4");
  if (!(theta > 0.0)) throw Error(ErrorCode::kInvalidConfig, "clustering.theta must be > 0");
  if (max_iterations < 1) throw Error(ErrorCode::kInvalidConfig, "clustering.max_iterations must be >= 1");
}

void EcodParams::validate() const {
  if (lag < 1) throw Error(ErrorCode::kInvalidConfig, "ecod.lag must be >= 1");
  if (!std::isfinite(threshold)) throw Error(ErrorCode::kInvalidConfig, "ecod.threshold must be finite");
}

namespace {

double pam_cost(std::span<const double> x, double m0, double m1) {
  double cost = 0.0;
  for (double v : x) cost += std::min(std::abs(v - m0), std::abs(v - m1));
  return cost;
}

}  // namespace

KMedoidsResult kmedoids_1d(std::span<const double> values, int max_iterations) {
  KMedoidsResult r;
  if (values.empty()) return r;
  std::size_t medoid[2] = {
      static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin()),
      static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin())};
  double cost = pam_cost(values, values[medoid[0]], values[medoid[1]]);
  for (int iter = 0; iter < max_iterations; ++iter) {
    double best = cost;
    int best_slot = -1;
    std::size_t best_point = 0;
    for (int slot = 0; slot < 2; ++slot) {
      for (std::size_t o = 0; o < values.size(); ++o) {
        if (o == medoid[0] || o == medoid[1]) continue;
        const double m0 = slot == 0 ? values[o] : values[medoid[0]];
        const double m1 = slot == 1 ? values[o] : values[medoid[1]];
        const double c = pam_cost(values, m0, m1);
        if (c < best - 1e-12) {
          best = c;
          best_slot = slot;
          best_point = o;
        }
      }
    }
    if (best_slot < 0) break;
    medoid[best_slot] = best_point;
    cost = best;
  }
  r.low = std::min(values[medoid[0]], values[medoid[1]]);
  r.high = std::max(values[medoid[0]], values[medoid[1]]);
  r.cost = cost;
  for (double v : values) {
    if (std::abs(v - r.low) <= std::abs(v - r.high)) {
      ++r.low_count;
    } else {
      ++r.high_count;
    }
  }
  return r;
}

double ClusteringAnalysis::score(std::size_t i) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [ap, sep] : entries[i].separation) best = std::max(best, sep);
  return best;
}

std::set<ApId> ClusteringAnalysis::flagged(std::size_t i, double theta) const {
  std::set<ApId> out;
  for (const auto& [ap, sep] : entries[i].separation) {
    if (sep > theta) out.insert(ap);
  }
  return out;
}

ClusteringAnalysis analyze_clustering(const Trace& trace, const ClusteringParams& params) {
  if (params.window < 4) throw Error(ErrorCode::kInvalidConfig, "clustering.window must be >= 4");
  if (params.max_iterations < 1) throw Error(ErrorCode::kInvalidConfig, "clustering.max_iterations must be >= 1");
  const std::size_t w = static_cast<std::size_t>(params.window);
  if (trace.size() < w) {
    throw Error(ErrorCode::kWindowTooLarge, "trace has " + std::to_string(trace.size()) +
                                                 " scans, clustering window is " + std::to_string(w));
  }
  ClusteringAnalysis out;
  out.entries.resize(trace.size());
  std::vector<double> window;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    auto& entry = out.entries[i];
    entry.t = trace[i].t;
    if (i + 1 < w) continue;
    entry.evaluated = true;
    std::set<ApId> aps;
    for (std::size_t k = i + 1 - w; k <= i; ++k) {
      for (const auto& [ap, rss] : trace[k].rssi) aps.insert(ap);
    }
    for (const auto& ap : aps) {
      window.clear();
      for (std::size_t k = i + 1 - w; k <= i; ++k) {
        auto it = trace[k].rssi.find(ap);
        if (it != trace[k].rssi.end()) window.push_back(it->second);
      }
      if (window.size() < kMinClusterSamples) continue;
      const auto r = kmedoids_1d(window, params.max_iterations);
      if (r.low_count >= 2 && r.high_count >= 2) entry.separation.emplace(ap, r.separation());
    }
  }
  return out;
}

std::vector<BaselineVerdict> kmedoid_detect(const Trace& trace, const ClusteringParams& params) {
  params.validate();
  const auto analysis = analyze_clustering(trace, params);
  std::vector<BaselineVerdict> out;
  out.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    BaselineVerdict v;
    v.t = trace[i].t;
    v.rogue = analysis.flagged(i, params.theta);
    v.alarm = !v.rogue.empty();
    v.score = analysis.score(i);
    out.push_back(std::move(v));
  }
  return out;
}

DiffMatrix lag_differences(const Trace& trace, int lag) {
  if (lag < 1) throw Error(ErrorCode::kInvalidConfig, "ecod.lag must be >= 1");
  DiffMatrix x;
  std::set<ApId> aps;
  for (const auto& scan : trace) {
    for (const auto& [ap, rss] : scan.rssi) aps.insert(ap);
  }
  x.columns.assign(aps.begin(), aps.end());
  x.rows = trace.size();
  x.values.assign(x.rows * x.columns.size(), std::numeric_limits<double>::quiet_NaN());
  const std::size_t l = static_cast<std::size_t>(lag);
  for (std::size_t i = l; i < trace.size(); ++i) {
    for (std::size_t c = 0; c < x.columns.size(); ++c) {
      auto now = trace[i].rssi.find(x.columns[c]);
      auto before = trace[i - l].rssi.find(x.columns[c]);
      if (now != trace[i].rssi.end() && before != trace[i - l].rssi.end()) {
        x.values[i * x.columns.size() + c] = now->second - before->second;
      }
    }
  }
  return x;
}

std::vector<double> ecod_scores(const DiffMatrix& x) {
  const std::size_t cols = x.columns.size();
  std::vector<double> left(x.rows, 0.0), right(x.rows, 0.0), skewed(x.rows, 0.0);
  std::vector<double> sorted;
  for (std::size_t c = 0; c < cols; ++c) {
    sorted.clear();
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (!std::isnan(x.at(r, c))) sorted.push_back(x.at(r, c));
    }
    if (sorted.empty()) continue;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double mean = 0.0;
    for (double v : sorted) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : sorted) {
      m2 += (v - mean) * (v - mean);
      m3 += (v - mean) * (v - mean) * (v - mean);
    }
    m2 /= n;
    m3 /= n;
    const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double v = x.at(r, c);
      if (std::isnan(v)) continue;
      const double below = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
      const double above =
          static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), v));
      const double tail_left = -std::log(below / n);
      const double tail_right = -std::log(above / n);
      left[r] += tail_left;
      right[r] += tail_right;
      skewed[r] += skew < 0.0 ? tail_left : tail_right;
    }
  }
  std::vector<double> scores(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) scores[r] = std::max({left[r], right[r], skewed[r]});
  return scores;
}

std::vector<double> ecod_trace_scores(const Trace& trace, const EcodParams& params) {
  return ecod_scores(lag_differences(trace, params.lag));
}

std::vector<BaselineVerdict> ecod_detect(const Trace& trace, const EcodParams& params) {
  params.validate();
  const auto scores = ecod_trace_scores(trace, params);
  std::vector<BaselineVerdict> out;
  out.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out.push_back({trace[i].t, scores[i] > params.threshold, scores[i], {}});
  }
  return out;
}

}  // namespace gmraim
