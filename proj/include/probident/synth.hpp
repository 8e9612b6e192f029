#pragma once

// Small synthetic datasets written as headered CSV.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "probident/data.hpp"

namespace probident {

struct SynthTable {
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;  // features followed by the target
  std::optional<ImageShape> image_shape;
};

enum class SynthKind { blobs, linreg, digits8x8 };

struct SynthSpec {
  SynthKind kind = SynthKind::blobs;
  std::size_t classes = 3;  // blobs only
};

/// "blobs-K", "linreg" or "digits8x8".
inline SynthSpec parse_synth_kind(std::string_view kind) {
  if (kind == "linreg") return {SynthKind::linreg, 0};
  if (kind == "digits8x8") return {SynthKind::digits8x8, 10};
  if (kind.starts_with("blobs-")) {
    auto num = kind.substr(6);
    std::size_t k = 0;
    auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), k);
    if (ec == std::errc{} && p == num.data() + num.size() && k >= 2) return {SynthKind::blobs, k};
  }
  throw std::invalid_argument("unknown synthetic kind '" + std::string(kind) +
                              "' (expected blobs-K with K >= 2, linreg or digits8x8)");
}

namespace detail {

inline std::vector<std::string> numbered(std::string_view prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

// Isotropic unit-variance clusters around centres drawn in [-4, 4]^4.
inline SynthTable make_blobs(std::size_t classes, std::size_t n, std::mt19937_64& rng) {
  constexpr std::size_t features = 4;
  std::uniform_real_distribution<double> centre(-4.0, 4.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::array<double, features>> centres(classes);
  for (auto& c : centres)
    for (double& v : c) v = centre(rng);
  SynthTable t;
  t.feature_names = numbered("x", features);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % classes;
    std::vector<double> row;
    for (double c : centres[label]) row.push_back(c + noise(rng));
    row.push_back(static_cast<double>(label));
    t.rows.push_back(std::move(row));
  }
  std::shuffle(t.rows.begin(), t.rows.end(), rng);
  return t;
}

// y = 0.5 + 0.4 * <x, w> / |w| + N(0, 0.1^2), x ~ N(0, I_8).
inline SynthTable make_linreg(std::size_t n, std::mt19937_64& rng) {
  constexpr std::size_t features = 8;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<double, features> w{};
  for (double& v : w) v = gauss(rng);
  const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
  SynthTable t;
  t.feature_names = numbered("x", features);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    double y = 0.0;
    for (std::size_t j = 0; j < features; ++j) {
      row.push_back(gauss(rng));
      y += row.back() * w[j] / norm;
    }
    row.push_back(0.5 + 0.4 * y + 0.1 * gauss(rng));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Seven-segment digits on an 8x8 grid: a top, b upper-right, c lower-right,
// d bottom, e lower-left, f upper-left, g middle.
inline constexpr std::array<const char*, 10> kSegments = {"abcdef", "bc",    "abged", "abgcd", "fgbc",
                                                          "afgcd",  "afgedc", "abc",  "abcdefg", "abcdfg"};

inline std::array<double, 64> render_digit(std::size_t digit, int dx, int dy) {
  std::array<double, 64> img{};
  auto set = [&](int r, int c) {
    r += dy;
    c += dx;
    if (r >= 0 && r < 8 && c >= 0 && c < 8) img[static_cast<std::size_t>(r * 8 + c)] = 1.0;
  };
  for (const char* s = kSegments[digit]; *s; ++s) {
    switch (*s) {
      case 'a': for (int c = 2; c <= 5; ++c) set(1, c); break;
      case 'd': for (int c = 2; c <= 5; ++c) set(7, c); break;
      case 'g': for (int c = 2; c <= 5; ++c) set(4, c); break;
      case 'f': for (int r = 1; r <= 4; ++r) set(r, 2); break;
      case 'b': for (int r = 1; r <= 4; ++r) set(r, 5); break;
      case 'e': for (int r = 4; r <= 7; ++r) set(r, 2); break;
      case 'c': for (int r = 4; r <= 7; ++r) set(r, 5); break;
    }
  }
  return img;
}

inline SynthTable make_digits(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> shift_x(-2, 2);
  std::uniform_int_distribution<int> shift_y(-1, 0);
  std::normal_distribution<double> noise(0.0, 0.15);
  SynthTable t;
  t.feature_names = numbered("p", 64);
  t.image_shape = ImageShape{8, 8, 1};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 10;
    const int dx = shift_x(rng);
    const int dy = shift_y(rng);
    auto img = render_digit(label, dx, dy);
    std::vector<double> row;
    for (double v : img) row.push_back(v + noise(rng));
    row.push_back(static_cast<double>(label));
    t.rows.push_back(std::move(row));
  }
  std::shuffle(t.rows.begin(), t.rows.end(), rng);
  return t;
}

inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace detail

inline SynthTable generate_synthetic(const SynthSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synthetic data needs n >= 2");
  std::mt19937_64 rng(seed);
  switch (spec.kind) {
    case SynthKind::blobs: return detail::make_blobs(spec.classes, n, rng);
    case SynthKind::linreg: return detail::make_linreg(n, rng);
    case SynthKind::digits8x8: return detail::make_digits(n, rng);
  }
  throw std::logic_error("unreachable");
}

/// Writes features then a final target column named "y".
inline void write_csv(const SynthTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& name : t.feature_names) out << name << ',';
  out << "y\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << detail::format_number(row[i]);
    out << '\n';
  }
  if (!out) throw DataError("failed writing '" + path + "'");
}

}  // namespace probident
