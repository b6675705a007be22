#include "depts/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "depts/errors.hpp"
#include "depts/text_io.hpp"

namespace depts {

Eigen::VectorXd Series::slice(Index begin, Index stop) const {
  if (begin < t0 || stop > end() || begin > stop) {
    throw DataError("slice [" + std::to_string(begin) + ", " + std::to_string(stop) +
                    ") outside series '" + id + "'");
  }
  return values.segment(begin - t0, stop - begin);
}

void validate(const Series& series) {
  if (series.values.size() == 0) throw DataError("series '" + series.id + "' is empty");
  if (!series.values.allFinite()) throw DataError("series '" + series.id + "' has non-finite values");
}

SplitSeries split(const Series& series, const SplitSpec& spec) {
  if (!(series.t0 < spec.train_end && spec.train_end <= spec.val_end &&
        spec.val_end <= spec.test_end && spec.test_end <= series.end())) {
    throw DataError("split " + std::to_string(spec.train_end) + "/" + std::to_string(spec.val_end) +
                    "/" + std::to_string(spec.test_end) + " out of range for series '" + series.id +
                    "' covering [" + std::to_string(series.t0) + ", " +
                    std::to_string(series.end()) + ")");
  }
  auto part = [&](Index begin, Index stop) {
    return Series{series.id, series.slice(begin, stop), begin};
  };
  return {part(series.t0, spec.train_end), part(spec.train_end, spec.val_end),
          part(spec.val_end, spec.test_end)};
}

std::vector<Series> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (trim(line) != "series_id,t,value") {
    throw DataError(path.string() + ": expected header 'series_id,t,value'");
  }

  struct Pending {
    Index t0 = 0;
    std::vector<double> values;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> by_id;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_fields(row, ',');
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 3) throw DataError(where + ": expected 3 fields");

    const std::string id(fields[0]);
    const auto t = parse_int(fields[1], where);
    const auto value = parse_double(fields[2], where);
    if (!std::isfinite(value)) throw DataError(where + ": non-finite value");

    auto [it, inserted] = by_id.try_emplace(id);
    auto& pending = it->second;
    if (inserted) {
      order.push_back(id);
      pending.t0 = t;
    } else {
      const Index expected = pending.t0 + static_cast<Index>(pending.values.size());
      if (t < expected) throw DataError(where + ": duplicate or unsorted t for series '" + id + "'");
      if (t > expected) throw DataError(where + ": gap in t for series '" + id + "'");
    }
    pending.values.push_back(value);
  }

  std::vector<Series> out;
  out.reserve(order.size());
  for (const auto& id : order) {
    auto& pending = by_id[id];
    Series s{id, Eigen::Map<Eigen::VectorXd>(pending.values.data(), pending.values.size()),
             pending.t0};
    out.push_back(std::move(s));
  }
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const Series> series) {
  std::ostringstream os;
  os << "series_id,t,value\n";
  for (const auto& s : series) {
    for (Index i = 0; i < s.size(); ++i) {
      os << s.id << ',' << s.t0 + i << ',' << format_double(s.values[i]) << '\n';
    }
  }
  write_file_atomic(path, os.str());
}

std::pair<Index, Index> anchor_range(const Series& region, Index lookback, Index horizon,
                                     Index horizon_len) {
  const Index first = std::max(region.t0 + lookback, region.end() - horizon_len);
  const Index last = region.end() - horizon;
  return {first, last};
}

WindowSample window_at(const Series& series, Index anchor, Index lookback, Index horizon,
                       std::size_t series_index) {
  return {anchor, series.slice(anchor - lookback, anchor), series.slice(anchor, anchor + horizon),
          series_index};
}

std::vector<WindowSample> sample_windows(const Series& region, Index lookback, Index horizon,
                                         Index horizon_len, Index count, Rng& rng,
                                         std::size_t series_index) {
  std::vector<WindowSample> out;
  if (count == 0) return out;
  if (lookback < 1 || horizon < 1) throw DataError("lookback and horizon must be >= 1");
  const auto [first, last] = anchor_range(region, lookback, horizon, horizon_len);
  if (first > last) {
    throw DataError("series '" + region.id + "' has no valid window anchors for L=" +
                    std::to_string(lookback) + ", H=" + std::to_string(horizon));
  }
  const auto span = static_cast<std::uint64_t>(last - first + 1);
  out.reserve(count);
  for (Index i = 0; i < count; ++i) {
    const Index anchor = first + static_cast<Index>(rng.below(span));
    out.push_back(window_at(region, anchor, lookback, horizon, series_index));
  }
  return out;
}

std::vector<WindowSample> sample_windows(std::span<const Series> regions, Index lookback,
                                         Index horizon, Index horizon_len, Index count, Rng& rng) {
  std::vector<WindowSample> out;
  if (count == 0) return out;
  if (regions.empty()) throw DataError("no series to sample from");
  if (lookback < 1 || horizon < 1) throw DataError("lookback and horizon must be >= 1");

  std::vector<std::pair<Index, Index>> ranges;
  for (const auto& r : regions) {
    ranges.push_back(anchor_range(r, lookback, horizon, horizon_len));
    if (ranges.back().first > ranges.back().second) {
      throw DataError("series '" + r.id + "' has no valid window anchors for L=" +
                      std::to_string(lookback) + ", H=" + std::to_string(horizon));
    }
  }
  out.reserve(count);
  for (Index i = 0; i < count; ++i) {
    const auto s = static_cast<std::size_t>(rng.below(regions.size()));
    const auto [first, last] = ranges[s];
    const Index anchor = first + static_cast<Index>(rng.below(last - first + 1));
    out.push_back(window_at(regions[s], anchor, lookback, horizon, s));
  }
  return out;
}

}  // namespace depts
