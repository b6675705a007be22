#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "depts/rng.hpp"

namespace depts {

using Index = std::int64_t;

/// A uni-variate series on an integer time grid: values[i] sits at t0 + i.
struct Series {
  std::string id;
  Eigen::VectorXd values;
  Index t0 = 0;

  Index size() const { return values.size(); }
  /// One past the last global index.
  Index end() const { return t0 + values.size(); }
  double at(Index t) const { return values[t - t0]; }

  /// Values over the global range [begin, end).
  Eigen::VectorXd slice(Index begin, Index end) const;
};

/// Throws DataError unless values is non-empty and finite.
void validate(const Series& series);

/// Global, exclusive split points: train [t0, train_end), val [train_end,
/// val_end), test [val_end, test_end).
struct SplitSpec {
  Index train_end = 0;
  Index val_end = 0;
  Index test_end = 0;
};

struct SplitSeries {
  Series train;
  Series val;
  Series test;
};

SplitSeries split(const Series& series, const SplitSpec& spec);

struct WindowSample {
  Index anchor = 0;
  Eigen::VectorXd lookback;  // x[anchor - L, anchor)
  Eigen::VectorXd target;    // x[anchor, anchor + H)
  std::size_t series_index = 0;
};

/// Long-format CSV with header `series_id,t,value`. Series appear in the
/// order of their first row.
std::vector<Series> load_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, std::span<const Series> series);

/// Valid anchors for windows inside `region`: the lookback starts at or after
/// region.t0, the target ends at or before region.end(), and the anchor lies in
/// the most recent `horizon_len` points. Returns {first, last} inclusive;
/// first > last when there is none.
std::pair<Index, Index> anchor_range(const Series& region, Index lookback, Index horizon,
                                     Index horizon_len);

/// Draws `count` windows with anchors uniform over anchor_range.
std::vector<WindowSample> sample_windows(const Series& region, Index lookback, Index horizon,
                                         Index horizon_len, Index count, Rng& rng,
                                         std::size_t series_index = 0);

/// Multi-series variant: each sample picks a series uniformly, then an anchor.
std::vector<WindowSample> sample_windows(std::span<const Series> regions, Index lookback,
                                         Index horizon, Index horizon_len, Index count, Rng& rng);

/// Window anchored at `anchor` with history drawn from `series`.
WindowSample window_at(const Series& series, Index anchor, Index lookback, Index horizon,
                       std::size_t series_index = 0);

}  // namespace depts
