#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probident/tensor.hpp"

namespace probident {

/// Problems with input data: unreadable files, bad cells, missing values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

enum class InputKind { flat, image };

inline constexpr std::string_view to_string(InputKind k) noexcept { return k == InputKind::flat ? "flat" : "image"; }

struct RawTable {
  std::vector<std::string> feature_names;
  Tensor features;  // [N, F]
  std::vector<double> targets;
  std::optional<ImageShape> image_shape;

  std::size_t samples() const noexcept { return targets.size(); }
  std::size_t feature_count() const noexcept { return features.dim(1); }
};

struct Dataset {
  Tensor x_train;  // [n, F] or [n, H, W, C], standardised
  Tensor x_val;
  Tensor y_train;  // [n, 1] raw targets
  Tensor y_val;
  Tensor y_train_onehot;  // [n, U]
  Tensor y_val_onehot;
  std::vector<double> classes;  // sorted distinct target values; index = one-hot column
  std::size_t unique_count = 0;
  InputKind input_kind = InputKind::flat;
  std::size_t total_samples = 0;
  std::size_t feature_count = 0;

  Shape sample_shape() const { return Shape(x_train.shape().begin() + 1, x_train.shape().end()); }
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

// from_chars is locale-independent
inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses "H,W,C" (also accepts 'x' separators).
inline ImageShape parse_image_shape(std::string_view text) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == ',' || text[i] == 'x') {
      auto part = detail::trim(text.substr(start, i - start));
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc{} || ptr != part.data() + part.size() || v == 0) {
        throw std::invalid_argument("image shape must be H,W,C with positive integers, got '" + std::string(text) + "'");
      }
      dims.push_back(v);
      start = i + 1;
    }
  }
  if (dims.size() != 3) throw std::invalid_argument("image shape must have three dimensions");
  return {dims[0], dims[1], dims[2]};
}

/// Loads a headered numeric CSV. `target_column` is a header name, or a
/// zero-based column index when no header matches.
inline RawTable load_csv(const std::string& path, const std::string& target_column,
                         std::optional<ImageShape> image_shape = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty; a header row is required");
  std::vector<std::string> header;
  for (auto c : detail::split_csv_line(line)) header.emplace_back(detail::trim(c));

  std::optional<std::size_t> target;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == target_column) target = i;
  }
  if (!target) {
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(target_column.data(), target_column.data() + target_column.size(), idx);
    if (ec == std::errc{} && ptr == target_column.data() + target_column.size() && idx < header.size()) target = idx;
  }
  if (!target) throw DataError("target column '" + target_column + "' not found in header");
  if (header.size() < 2) throw DataError("need at least one feature column besides the target");

  RawTable table;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != *target) table.feature_names.push_back(header[i]);
  }
  const std::size_t f = header.size() - 1;
  std::vector<double> features;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      auto cell = detail::trim(cells[i]);
      if (cell.empty() || cell == "?" || cell == "NA" || cell == "NaN" || cell == "nan") {
        throw DataError("line " + std::to_string(line_no) + ", column '" + header[i] +
                        "': missing value (imputation is out of scope)");
      }
      auto v = detail::parse_number(cell);
      if (!v) {
        throw DataError("line " + std::to_string(line_no) + ", column '" + header[i] + "': cannot parse '" +
                        std::string(cell) + "' as a number");
      }
      if (i == *target) {
        table.targets.push_back(*v);
      } else {
        features.push_back(*v);
      }
    }
  }
  if (table.targets.size() < 2) throw DataError("need at least two samples");
  if (image_shape && image_shape->size() != f) {
    throw DataError("image shape " + std::to_string(image_shape->height) + "x" + std::to_string(image_shape->width) +
                    "x" + std::to_string(image_shape->channels) + " does not match " + std::to_string(f) +
                    " feature columns");
  }
  table.features = Tensor({table.targets.size(), f}, std::move(features));
  table.image_shape = image_shape;
  return table;
}

// ---------------------------------------------------------------------------
// Targets

/// Number of distinct target values, using exact equality.
inline std::size_t unique_targets(std::span<const double> targets) {
  return std::set<double>(targets.begin(), targets.end()).size();
}

using ValueIndex = std::map<double, std::size_t>;

inline ValueIndex build_value_index(std::span<const double> targets) {
  ValueIndex index;
  for (double v : std::set<double>(targets.begin(), targets.end())) index.emplace(v, index.size());
  return index;
}

inline Tensor one_hot(std::span<const double> targets, std::size_t unique_count, const ValueIndex& index) {
  Tensor out({targets.size(), unique_count}, 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto it = index.find(targets[i]);
    if (it == index.end() || it->second >= unique_count) {
      throw DataError("one_hot: target value " + std::to_string(targets[i]) + " is not in the value index");
    }
    out.at(i, it->second) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Per-feature z-scores with training-set statistics (population std).
/// Constant training features map to zero in both sets.
inline std::pair<Tensor, Tensor> standardize(Tensor train, Tensor val) {
  const std::size_t f = train.row_size();
  if (val.row_size() != f) throw std::invalid_argument("standardize: feature count mismatch");
  const std::size_t n = train.dim(0);
  for (std::size_t j = 0; j < f; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += train[i * f + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = train[i * f + j] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    auto apply = [&](Tensor& t) {
      for (std::size_t i = 0; i < t.dim(0); ++i) {
        double& x = t[i * f + j];
        x = sd > 0.0 ? (x - mean) / sd : 0.0;
      }
    };
    apply(train);
    apply(val);
  }
  return {std::move(train), std::move(val)};
}

inline constexpr std::size_t kSampleCap = 1000;

/// Training and validation sizes for N samples.
inline std::pair<std::size_t, std::size_t> split_sizes(std::size_t n) {
  if (n >= 2 * kSampleCap) return {kSampleCap, kSampleCap};
  return {n - n / 2, n / 2};
}

/// Shuffles, splits 50/50 (capped at 1000 each), standardises and one-hot
/// encodes. U and the one-hot index cover every sample, not only the split.
inline Dataset split(const RawTable& raw, std::uint64_t seed) {
  const std::size_t n = raw.samples();
  if (n < 2) throw DataError("split: need at least two samples");
  const ValueIndex index = build_value_index(raw.targets);
  const std::size_t u = index.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto [n_train, n_val] = split_sizes(n);
  std::span<const std::size_t> train_idx(order.data(), n_train);
  std::span<const std::size_t> val_idx(order.data() + n_train, n_val);

  auto targets_of = [&](std::span<const std::size_t> idx) {
    std::vector<double> t;
    for (std::size_t i : idx) t.push_back(raw.targets[i]);
    return t;
  };
  const auto t_train = targets_of(train_idx);
  const auto t_val = targets_of(val_idx);

  Dataset ds;
  auto [xt, xv] = standardize(raw.features.gather_rows(train_idx), raw.features.gather_rows(val_idx));
  if (raw.image_shape) {
    const auto& s = *raw.image_shape;
    ds.x_train = std::move(xt).reshaped({n_train, s.height, s.width, s.channels});
    ds.x_val = std::move(xv).reshaped({n_val, s.height, s.width, s.channels});
    ds.input_kind = InputKind::image;
  } else {
    ds.x_train = std::move(xt);
    ds.x_val = std::move(xv);
  }
  ds.y_train = Tensor({n_train, 1}, t_train);
  ds.y_val = Tensor({n_val, 1}, t_val);
  ds.y_train_onehot = one_hot(t_train, u, index);
  ds.y_val_onehot = one_hot(t_val, u, index);
  for (const auto& [value, _] : index) ds.classes.push_back(value);
  ds.unique_count = u;
  ds.total_samples = n;
  ds.feature_count = raw.feature_count();
  return ds;
}

}  // namespace probident
