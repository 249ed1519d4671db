#pragma once

// Feature selection: Pearson correlation against grade, a significance cut,
// pruning of mutually collinear features and importance ranking.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/util.hpp"

namespace lxper {

inline constexpr double kDefaultSignificance = 0.05;
inline constexpr double kDefaultPairThreshold = 0.85;

/// Product-moment correlation, two-pass mean-centred form.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: series lengths differ");
  if (x.size() < 3) throw Error("pearson: need at least 3 observations");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("pearson: zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

struct CorrelationReport {
  std::array<double, kFeatureCount> r{};
  std::array<bool, kFeatureCount> degenerate{};
  std::size_t sample_count = 0;

  double operator[](FeatureCode code) const { return r[index_of(code)]; }

  static CorrelationReport from_values(
      const std::array<double, kFeatureCount>& values,
      std::size_t sample_count) {
    CorrelationReport rep;
    rep.r = values;
    rep.sample_count = sample_count;
    return rep;
  }
};

namespace detail {

inline std::vector<double> column(std::span<const FeatureVector> rows,
                                  FeatureCode code) {
  std::vector<double> col;
  col.reserve(rows.size());
  for (const auto& row : rows) col.push_back(row[code]);
  return col;
}

inline bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [&](double x) { return x == v.front(); });
}

}  // namespace detail

/// Correlation of each feature with grade. A constant feature gets r = 0 and
/// is marked degenerate.
inline CorrelationReport correlate_features(std::span<const FeatureVector> rows,
                                            std::span<const double> grades) {
  if (rows.size() != grades.size()) {
    throw Error("feature rows and grades differ in length");
  }
  if (rows.size() < 3) throw Error("need at least 3 texts to correlate");
  const std::vector<double> y(grades.begin(), grades.end());
  if (detail::is_constant(y)) throw Error("grades have zero variance");
  CorrelationReport rep;
  rep.sample_count = rows.size();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const auto col = detail::column(rows, code_at(i));
    if (detail::is_constant(col)) {
      rep.r[i] = 0.0;
      rep.degenerate[i] = true;
    } else {
      rep.r[i] = pearson(col, y);
    }
  }
  return rep;
}

/// Symmetric feature-feature correlation table.
class PairwiseCorrelations {
 public:
  PairwiseCorrelations() {
    for (auto& row : r_) row.fill(0.0);
    for (std::size_t i = 0; i < kFeatureCount; ++i) r_[i][i] = 1.0;
  }

  void set(FeatureCode a, FeatureCode b, double value) {
    r_[index_of(a)][index_of(b)] = value;
    r_[index_of(b)][index_of(a)] = value;
  }
  double get(FeatureCode a, FeatureCode b) const {
    return r_[index_of(a)][index_of(b)];
  }

  /// Partners of `code` with |r| above the threshold, canonical order.
  std::vector<FeatureCode> partners(FeatureCode code, double threshold) const {
    std::vector<FeatureCode> out;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      if (j != index_of(code) && std::abs(r_[index_of(code)][j]) > threshold) {
        out.push_back(code_at(j));
      }
    }
    return out;
  }

 private:
  std::array<std::array<double, kFeatureCount>, kFeatureCount> r_;
};

inline PairwiseCorrelations pairwise_correlations(
    std::span<const FeatureVector> rows) {
  PairwiseCorrelations pc;
  std::vector<std::vector<double>> cols;
  std::vector<bool> constant;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    cols.push_back(detail::column(rows, code_at(i)));
    constant.push_back(rows.size() < 3 || detail::is_constant(cols.back()));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    for (std::size_t j = i + 1; j < kFeatureCount; ++j) {
      if (constant[i] || constant[j]) continue;
      pc.set(code_at(i), code_at(j), pearson(cols[i], cols[j]));
    }
  }
  return pc;
}

/// Codes whose |r| is strictly above the threshold, canonical order.
inline std::vector<FeatureCode> significance_filter(
    const CorrelationReport& report,
    double threshold = kDefaultSignificance) {
  std::vector<FeatureCode> pass;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (std::abs(report.r[i]) > threshold) pass.push_back(code_at(i));
  }
  return pass;
}

struct PruneResult {
  std::vector<FeatureCode> kept;
  std::vector<std::pair<FeatureCode, FeatureCode>> dropped;  // (loser, winner)
};

/// Among `candidates`, visits pairs with |r_pair| above the threshold in
/// descending |r_pair| (canonical pair order on ties). When both members are
/// still kept, the one less correlated with grade is dropped; on equal
/// |r_target| the earlier canonical code stays.
inline PruneResult prune_collinear(const PairwiseCorrelations& pairs,
                                   const CorrelationReport& report,
                                   std::span<const FeatureCode> candidates,
                                   double pair_threshold =
                                       kDefaultPairThreshold) {
  struct Pair {
    double strength;
    std::size_t a, b;
  };
  std::vector<Pair> over;
  for (std::size_t x = 0; x < candidates.size(); ++x) {
    for (std::size_t y = x + 1; y < candidates.size(); ++y) {
      std::size_t a = index_of(candidates[x]);
      std::size_t b = index_of(candidates[y]);
      if (a > b) std::swap(a, b);
      const double s = std::abs(pairs.get(code_at(a), code_at(b)));
      if (s > pair_threshold) over.push_back({s, a, b});
    }
  }
  std::sort(over.begin(), over.end(), [](const Pair& l, const Pair& r) {
    if (l.strength != r.strength) return l.strength > r.strength;
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });

  std::array<bool, kFeatureCount> alive{};
  for (FeatureCode c : candidates) alive[index_of(c)] = true;
  PruneResult out;
  for (const Pair& p : over) {
    if (!alive[p.a] || !alive[p.b]) continue;
    const double ra = std::abs(report.r[p.a]);
    const double rb = std::abs(report.r[p.b]);
    const bool keep_a = ra >= rb;  // a precedes b canonically
    const std::size_t loser = keep_a ? p.b : p.a;
    const std::size_t winner = keep_a ? p.a : p.b;
    alive[loser] = false;
    out.dropped.emplace_back(code_at(loser), code_at(winner));
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (alive[i]) out.kept.push_back(code_at(i));
  }
  return out;
}

enum class ExclusionReason { insignificant, collinear_loser };

struct Exclusion {
  ExclusionReason reason;
  std::optional<FeatureCode> paired_with;
};

struct SelectionResult {
  std::vector<FeatureCode> included;  // canonical order
  std::map<FeatureCode, Exclusion> excluded;
  std::vector<FeatureCode> ranking;
  CorrelationReport report;
  PairwiseCorrelations pairs;
  double significance = kDefaultSignificance;
  double pair_threshold = kDefaultPairThreshold;

  bool includes(FeatureCode code) const {
    return std::find(included.begin(), included.end(), code) != included.end();
  }
};

/// Included codes by descending |r|, canonical order on ties.
inline std::vector<FeatureCode> rank_features(
    std::span<const FeatureCode> included, const CorrelationReport& report) {
  std::vector<FeatureCode> ranked(included.begin(), included.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](FeatureCode a, FeatureCode b) {
                     const double ra = std::abs(report[a]);
                     const double rb = std::abs(report[b]);
                     if (ra != rb) return ra > rb;
                     return index_of(a) < index_of(b);
                   });
  return ranked;
}

inline std::vector<FeatureCode> rank_features(const SelectionResult& result) {
  return rank_features(result.included, result.report);
}

inline SelectionResult select_features(const CorrelationReport& report,
                                       const PairwiseCorrelations& pairs,
                                       double significance =
                                           kDefaultSignificance,
                                       double pair_threshold =
                                           kDefaultPairThreshold) {
  SelectionResult out;
  out.report = report;
  out.pairs = pairs;
  out.significance = significance;
  out.pair_threshold = pair_threshold;
  const auto significant = significance_filter(report, significance);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (std::find(significant.begin(), significant.end(), code_at(i)) ==
        significant.end()) {
      out.excluded[code_at(i)] = {ExclusionReason::insignificant, std::nullopt};
    }
  }
  const auto pruned =
      prune_collinear(pairs, report, significant, pair_threshold);
  for (const auto& [loser, winner] : pruned.dropped) {
    out.excluded[loser] = {ExclusionReason::collinear_loser, winner};
  }
  out.included = pruned.kept;
  out.ranking = rank_features(out.included, report);
  return out;
}

inline SelectionResult select_features(std::span<const FeatureVector> rows,
                                       std::span<const double> grades,
                                       double significance =
                                           kDefaultSignificance,
                                       double pair_threshold =
                                           kDefaultPairThreshold) {
  return select_features(correlate_features(rows, grades),
                         pairwise_correlations(rows), significance,
                         pair_threshold);
}

// ---------------------------------------------------------------------------
// Tabular report: code, cor, sig, pair, include. The pair column lists
// over-threshold partners as CODE:r separated by commas; a bare CODE means
// "over threshold, strength unknown" and reads back as r = 1. Lines starting
// with '#' are comments.

inline std::string format_selection_report(const SelectionResult& result) {
  std::string out = "code\tcor\tsig\tpair\tinclude\n";
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const FeatureCode code = code_at(i);
    out += std::string(name_of(code));
    out += '\t';
    out += util::format_double(result.report[code]);
    out += '\t';
    out += std::abs(result.report[code]) > result.significance ? "Yes" : "No";
    out += '\t';
    bool first = true;
    for (FeatureCode p : result.pairs.partners(code, result.pair_threshold)) {
      if (!first) out += ',';
      first = false;
      out += std::string(name_of(p));
      out += ':';
      out += util::format_double(result.pairs.get(code, p));
    }
    out += '\t';
    out += result.includes(code) ? "Yes" : "No";
    out += '\n';
  }
  return out;
}

struct LoadedCorrelations {
  CorrelationReport report;
  PairwiseCorrelations pairs;
};

inline LoadedCorrelations parse_selection_report(std::string_view content,
                                                 const std::string& name =
                                                     "report") {
  LoadedCorrelations out;
  std::array<bool, kFeatureCount> seen{};
  std::size_t line_no = 0;
  for (auto line : util::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty() || line.front() == '#' ||
        line.substr(0, 5) == "code\t") {
      continue;
    }
    const std::string where = name + ":" + std::to_string(line_no);
    const auto cols = util::split(line, '\t');
    if (cols.size() < 2) throw Error(where + ": expected code<TAB>cor");
    try {
      const FeatureCode code = parse_feature_code(util::trim(cols[0]));
      seen[index_of(code)] = true;
      out.report.r[index_of(code)] = util::parse_double(cols[1], "cor");
      if (cols.size() >= 4 && !util::trim(cols[3]).empty()) {
        for (auto item : util::split(util::trim(cols[3]), ',')) {
          item = util::trim(item);
          const auto colon = item.find(':');
          const FeatureCode partner =
              parse_feature_code(util::trim(item.substr(0, colon)));
          const double r = colon == std::string_view::npos
                               ? 1.0
                               : util::parse_double(item.substr(colon + 1),
                                                    "pair correlation");
          out.pairs.set(code, partner, r);
        }
      }
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!seen[i]) {
      throw Error(name + ": missing row for " + std::string(kFeatureNames[i]));
    }
  }
  return out;
}

}  // namespace lxper
