#pragma once

// Rule-count calculus for regular ontologies: R(C, N) = C * 2^N + 1, its
// one-step increment/decrement in N, grid sweeps and their CSV / SVG forms.
// All arithmetic is exact; overflow raises ErrorCode::Overflow.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "prereq/error.hpp"

namespace prereq {

struct RuleCount {
  std::uint64_t value = 0;

  friend bool operator==(const RuleCount&, const RuleCount&) = default;
  friend auto operator<=>(const RuleCount&, const RuleCount&) = default;
};

struct CalcConfig {
  std::int64_t k_max = 64;
  // When false, increment/decrement apply the raw arithmetic to any R.
  bool check_consistency = true;
};

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

struct SweepRow {
  std::int64_t c = 0;
  std::int64_t n = 0;
  std::uint64_t r = 0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepGrid {
  std::vector<SweepRow> rows;

  friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorCode::Overflow, "rule count exceeds 64 bits");
  return out;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorCode::Overflow, "rule count exceeds 64 bits");
  return out;
}

// c * 2^exp
inline std::uint64_t scaled_power(std::uint64_t c, std::int64_t exp) {
  if (c == 0) return 0;
  if (exp >= 64) fail(ErrorCode::Overflow, "2^" + std::to_string(exp) + " exceeds 64 bits");
  return checked_mul(c, std::uint64_t{1} << exp);
}

inline void require_c(std::int64_t c) {
  if (c < 0) fail(ErrorCode::InvalidC, "C must be >= 0, got " + std::to_string(c));
}

inline void require_n(std::int64_t n, std::int64_t min) {
  if (n < min) {
    fail(ErrorCode::InvalidN, "N must be >= " + std::to_string(min) + ", got " + std::to_string(n));
  }
}

}  // namespace detail

inline RuleCount estimate_rules(std::int64_t c, std::int64_t n) {
  detail::require_c(c);
  detail::require_n(n, 1);
  return RuleCount{detail::checked_add(detail::scaled_power(static_cast<std::uint64_t>(c), n), 1)};
}

// R' = R + C * 2^(N_new - 1); C is held fixed across the step.
inline RuleCount increment_rules(RuleCount r, std::int64_t c, std::int64_t n_new,
                                 const CalcConfig& config = {}) {
  detail::require_c(c);
  detail::require_n(n_new, 2);
  if (config.check_consistency && estimate_rules(c, n_new - 1) != r) {
    fail(ErrorCode::InconsistentInput, "R=" + std::to_string(r.value) + " is not R(" +
                                           std::to_string(c) + ", " + std::to_string(n_new - 1) + ")");
  }
  return RuleCount{
      detail::checked_add(r.value, detail::scaled_power(static_cast<std::uint64_t>(c), n_new - 1))};
}

// R' = R - C * 2^N_old / 2. C = 0 is rejected, as is any step that would
// leave N at zero.
inline RuleCount decrement_rules(RuleCount r, std::int64_t c, std::int64_t n_old,
                                 const CalcConfig& config = {}) {
  if (c <= 0) fail(ErrorCode::InvalidC, "decrement requires C != 0, got " + std::to_string(c));
  if (n_old <= 1) {
    fail(ErrorCode::InvalidN, "N can never take a zero value (N_old = " + std::to_string(n_old) + ")");
  }
  if (config.check_consistency && estimate_rules(c, n_old) != r) {
    fail(ErrorCode::InconsistentInput, "R=" + std::to_string(r.value) + " is not R(" +
                                           std::to_string(c) + ", " + std::to_string(n_old) + ")");
  }
  const std::uint64_t removed = detail::scaled_power(static_cast<std::uint64_t>(c), n_old) / 2;
  if (removed > r.value) fail(ErrorCode::Overflow, "decrement below zero");
  return RuleCount{r.value - removed};
}

inline SweepGrid sweep(IntRange c_range, IntRange n_range, const CalcConfig& config = {}) {
  if (c_range.lo < 0 || c_range.hi > config.k_max || c_range.lo > c_range.hi) {
    fail(ErrorCode::InvalidC, "C range must lie within [0, " + std::to_string(config.k_max) + "]");
  }
  if (n_range.lo < 1 || n_range.hi > config.k_max || n_range.lo > n_range.hi) {
    fail(ErrorCode::InvalidN, "N range must lie within [1, " + std::to_string(config.k_max) + "]");
  }
  SweepGrid grid;
  for (std::int64_t c = c_range.lo; c <= c_range.hi; ++c) {
    for (std::int64_t n = n_range.lo; n <= n_range.hi; ++n) {
      grid.rows.push_back({c, n, estimate_rules(c, n).value});
    }
  }
  return grid;
}

inline std::string emit_dataset_csv(const SweepGrid& grid) {
  if (grid.rows.empty()) fail(ErrorCode::EmptyGrid, "nothing to emit");
  auto rows = grid.rows;
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.c != b.c ? a.c < b.c : a.n < b.n;
  });
  std::ostringstream out;
  out << "C,N,R\n";
  for (const auto& row : rows) out << row.c << ',' << row.n << ',' << row.r << '\n';
  return out.str();
}

inline SweepGrid parse_dataset_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "C,N,R") {
    fail(ErrorCode::ParseError, "expected header 'C,N,R'");
  }
  SweepGrid grid;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long long c = 0, n = 0;
    unsigned long long r = 0;
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%llu%n", &c, &n, &r, &consumed) != 3 ||
        static_cast<std::size_t>(consumed) != line.size()) {
      fail(ErrorCode::ParseError, "bad row at line " + std::to_string(line_no));
    }
    grid.rows.push_back({c, n, r});
  }
  return grid;
}

enum class PlotAxis { c_vs_r, n_vs_r };

// Line chart of R over one grid axis, one polyline per value of the other
// axis. Output is deterministic text (fixed two-decimal coordinates).
inline std::string emit_plot_svg(const SweepGrid& grid, PlotAxis axis) {
  if (grid.rows.empty()) fail(ErrorCode::EmptyGrid, "nothing to plot");

  constexpr double kWidth = 640, kHeight = 420;
  constexpr double kLeft = 70, kRight = 130, kTop = 40, kBottom = 60;
  constexpr double kPlotW = kWidth - kLeft - kRight;
  constexpr double kPlotH = kHeight - kTop - kBottom;
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                             "#bcbd22", "#17becf"};

  const bool by_c = axis == PlotAxis::c_vs_r;
  // series key -> (x, R) points sorted by x
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, std::uint64_t>>> series;
  std::int64_t x_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t x_max = std::numeric_limits<std::int64_t>::min();
  std::uint64_t r_min = std::numeric_limits<std::uint64_t>::max(), r_max = 0;
  for (const auto& row : grid.rows) {
    const std::int64_t x = by_c ? row.c : row.n;
    series[by_c ? row.n : row.c].emplace_back(x, row.r);
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    r_min = std::min(r_min, row.r);
    r_max = std::max(r_max, row.r);
  }
  for (auto& [_, pts] : series) std::sort(pts.begin(), pts.end());

  const double x_span = x_max == x_min ? 1.0 : static_cast<double>(x_max - x_min);
  const double r_lo = 0.0;
  const double r_span = r_max == 0 ? 1.0 : static_cast<double>(r_max) - r_lo;
  auto map_x = [&](std::int64_t x) { return kLeft + kPlotW * static_cast<double>(x - x_min) / x_span; };
  auto map_y = [&](std::uint64_t r) {
    return kTop + kPlotH * (1.0 - (static_cast<double>(r) - r_lo) / r_span);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  const char* x_label = by_c ? "C (prerequisite class nodes)" : "N (leaf nodes per parent)";
  const char* series_name = by_c ? "N" : "C";

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << (by_c ? "C vs. R" : "N vs. R") << "</text>\n";

  // axes
  svg << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + kPlotH) << "\" x2=\""
      << num(kLeft + kPlotW) << "\" y2=\"" << num(kTop + kPlotH) << "\"/>\n"
      << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
      << "\" y2=\"" << num(kTop + kPlotH) << "\"/>\n"
      << "</g>\n";
  svg << "<g class=\"ticks\" font-size=\"11\">\n";
  for (std::int64_t x = x_min; x <= x_max; ++x) {
    svg << "<text x=\"" << num(map_x(x)) << "\" y=\"" << num(kTop + kPlotH + 16)
        << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  constexpr int kYTicks = 5;
  for (int i = 0; i <= kYTicks; ++i) {
    const double r = r_lo + r_span * i / kYTicks;
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(map_y(static_cast<std::uint64_t>(r)) + 4)
        << "\" text-anchor=\"end\">" << static_cast<std::uint64_t>(r) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<text class=\"x-label\" x=\"" << num(kLeft + kPlotW / 2) << "\" y=\""
      << num(kHeight - 16) << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label
      << "</text>\n"
      << "<text class=\"y-label\" x=\"18\" y=\"" << num(kTop + kPlotH / 2)
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << num(kTop + kPlotH / 2) << ")\">R (classified rules)</text>\n";

  std::size_t index = 0;
  svg << "<g class=\"series\" fill=\"none\" stroke-width=\"2\">\n";
  for (const auto& [key, pts] : series) {
    svg << "<polyline data-series=\"" << series_name << '=' << key << "\" stroke=\""
        << kPalette[index++ % std::size(kPalette)] << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) svg << ' ';
      svg << num(map_x(pts[i].first)) << ',' << num(map_y(pts[i].second));
    }
    svg << "\"/>\n";
  }
  svg << "</g>\n";

  index = 0;
  svg << "<g class=\"legend\" font-size=\"11\">\n";
  for (const auto& [key, _] : series) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(index);
    svg << "<line x1=\"" << num(kWidth - kRight + 15) << "\" y1=\"" << num(y) << "\" x2=\""
        << num(kWidth - kRight + 40) << "\" y2=\"" << num(y) << "\" stroke=\""
        << kPalette[index % std::size(kPalette)] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(kWidth - kRight + 46) << "\" y=\"" << num(y + 4) << "\">"
        << series_name << " = " << key << "</text>\n";
    ++index;
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace prereq
