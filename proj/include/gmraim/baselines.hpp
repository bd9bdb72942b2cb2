#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "gmraim/geo.hpp"

namespace gmraim {

struct ClusteringParams {
  int window = 30;
  double theta = 5.0;
  int max_iterations = 50;

  void validate() const;
};

struct EcodParams {
  double threshold = 10.0;
  int lag = 1;

  void validate() const;
};

struct KMedoidsResult {
  double low = 0.0;   // smaller medoid
  double high = 0.0;  // larger medoid
  std::size_t low_count = 0;
  std::size_t high_count = 0;
  double cost = 0.0;

  double separation() const { return high - low; }
};

/// Two-medoid PAM on scalar data. Medoids start at the minimum and maximum;
/// each pass applies the best cost-reducing swap until none remains.
KMedoidsResult kmedoids_1d(std::span<const double> values, int max_iterations);

/// Minimum number of present readings in a window for an AP to be clustered.
constexpr std::size_t kMinClusterSamples = 4;

struct BaselineVerdict {
  std::int64_t t = 0;
  bool alarm = false;
  double score = 0.0;
  std::set<ApId> rogue;
};

/// Per-timestamp, per-AP medoid separations; re-thresholdable without re-clustering.
struct ClusteringAnalysis {
  struct Entry {
    std::int64_t t = 0;
    bool evaluated = false;                // false for the first W-1 scans
    std::map<ApId, double> separation;     // APs with two clusters of >= 2 members
  };
  std::vector<Entry> entries;

  /// Largest qualifying separation at scan i, or -infinity.
  double score(std::size_t i) const;
  bool alarm(std::size_t i, double theta) const { return score(i) > theta; }
  std::set<ApId> flagged(std::size_t i, double theta) const;
};

ClusteringAnalysis analyze_clustering(const Trace& trace, const ClusteringParams& params);
std::vector<BaselineVerdict> kmedoid_detect(const Trace& trace, const ClusteringParams& params);

/// Row-major matrix with NaN marking missing cells.
struct DiffMatrix {
  std::size_t rows = 0;
  std::vector<ApId> columns;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
};

/// Row i holds RSS_j(t_i) - RSS_j(t_{i-lag}); rows before `lag` are all missing.
DiffMatrix lag_differences(const Trace& trace, int lag);

/// max(O_left, O_right, O_skew) per row.
std::vector<double> ecod_scores(const DiffMatrix& x);

std::vector<double> ecod_trace_scores(const Trace& trace, const EcodParams& params);
std::vector<BaselineVerdict> ecod_detect(const Trace& trace, const EcodParams& params);

}  // namespace gmraim
