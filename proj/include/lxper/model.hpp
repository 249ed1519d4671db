#pragma once

// Least-squares grade regression over selected features, the seven feature
// family versions, evaluation by mean absolute error, and model files.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/selection.hpp"
#include "lxper/util.hpp"

namespace lxper {

inline constexpr int kModelFormatVersion = 1;
inline constexpr double kRidgeDamping = 1e-8;

struct TrainingMeta {
  std::string corpus_id;
  std::size_t text_count = 0;
  std::string version_tag;
  double significance = kDefaultSignificance;
  double pair_threshold = kDefaultPairThreshold;
  std::vector<double> feature_means;
  bool ridge_damped = false;

  bool operator==(const TrainingMeta&) const = default;
};

struct RegressionModel {
  std::vector<FeatureCode> feature_codes;
  std::vector<double> weights;
  double intercept = 0.0;
  TrainingMeta meta;

  bool operator==(const RegressionModel&) const = default;
};

// ---------------------------------------------------------------------------
// Least squares

namespace detail {

// Column-major dense matrix, just enough for a Householder solve.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[c * rows_ + r];
  }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  void swap_cols(std::size_t a, std::size_t b) {
    for (std::size_t r = 0; r < rows_; ++r) std::swap((*this)(r, a), (*this)(r, b));
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

struct LeastSquaresSolution {
  std::vector<double> coef;
  bool ridge_damped = false;
};

// Solves (A'A + damping I) x = A'b by Cholesky.
inline std::vector<double> solve_damped_normal(const DenseMatrix& a,
                                               std::span<const double> b,
                                               double damping) {
  const std::size_t m = a.cols();
  std::vector<double> g(m * m, 0.0), rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
      g[i * m + j] = g[j * m + i] = s;
    }
    g[i * m + i] += damping;
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b[r];
    rhs[i] = s;
  }
  // In-place lower Cholesky factor.
  for (std::size_t j = 0; j < m; ++j) {
    double d = g[j * m + j];
    for (std::size_t k = 0; k < j; ++k) d -= g[j * m + k] * g[j * m + k];
    if (!(d > 0.0)) throw Error("damped normal equations are not positive definite");
    const double l = std::sqrt(d);
    g[j * m + j] = l;
    for (std::size_t i = j + 1; i < m; ++i) {
      double s = g[i * m + j];
      for (std::size_t k = 0; k < j; ++k) s -= g[i * m + k] * g[j * m + k];
      g[i * m + j] = s / l;
    }
  }
  std::vector<double> x(rhs);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= g[i * m + k] * x[k];
    x[i] /= g[i * m + i];
  }
  for (std::size_t i = m; i-- > 0;) {
    for (std::size_t k = i + 1; k < m; ++k) x[i] -= g[k * m + i] * x[k];
    x[i] /= g[i * m + i];
  }
  return x;
}

/// Householder QR with column pivoting. Falls back to damped normal
/// equations when the numerical rank is below the column count.
inline LeastSquaresSolution least_squares(DenseMatrix a, std::vector<double> b) {
  const DenseMatrix original = a;
  const std::vector<double> original_b = b;
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> diag(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    // Pivot on the largest remaining column norm.
    std::size_t best = k;
    double best_norm = -1.0;
    for (std::size_t c = k; c < m; ++c) {
      double s = 0.0;
      for (std::size_t r = k; r < n; ++r) s += a(r, c) * a(r, c);
      if (s > best_norm) {
        best_norm = s;
        best = c;
      }
    }
    if (best != k) {
      a.swap_cols(k, best);
      std::swap(perm[k], perm[best]);
    }
    const double alpha_abs = std::sqrt(best_norm);
    const double alpha = a(k, k) > 0 ? -alpha_abs : alpha_abs;
    diag[k] = alpha;
    if (alpha_abs == 0.0) continue;
    // v = x - alpha e1, stored in place of column k below the diagonal.
    a(k, k) -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t r = k; r < n; ++r) vnorm2 += a(r, k) * a(r, k);
    if (vnorm2 == 0.0) continue;
    for (std::size_t c = k + 1; c < m; ++c) {
      double dot = 0.0;
      for (std::size_t r = k; r < n; ++r) dot += a(r, k) * a(r, c);
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t r = k; r < n; ++r) a(r, c) -= f * a(r, k);
    }
    double dot = 0.0;
    for (std::size_t r = k; r < n; ++r) dot += a(r, k) * b[r];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t r = k; r < n; ++r) b[r] -= f * a(r, k);
  }

  const double largest = std::abs(diag[0]);
  const double tol = static_cast<double>(std::max(n, m)) *
                     std::numeric_limits<double>::epsilon() * largest;
  bool full_rank = largest > 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(diag[k]) <= tol) full_rank = false;
  }
  if (!full_rank) {
    return {solve_damped_normal(original, original_b, kRidgeDamping), true};
  }

  std::vector<double> z(m, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < m; ++c) s -= a(i, c) * z[c];
    z[i] = s / diag[i];
  }
  std::vector<double> coef(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) coef[perm[k]] = z[k];
  return {coef, false};
}

}  // namespace detail

/// OLS with intercept. `rows[i][j]` is the value of `codes[j]` for text i.
inline RegressionModel train(const std::vector<std::vector<double>>& rows,
                             std::span<const double> targets,
                             std::span<const FeatureCode> codes) {
  const std::size_t p = codes.size();
  if (rows.size() != targets.size()) {
    throw Error("training rows and targets differ in length");
  }
  if (rows.size() <= p) {
    throw Error("underdetermined: " + std::to_string(rows.size()) +
                " rows for " + std::to_string(p) + " features");
  }
  detail::DenseMatrix a(rows.size(), p + 1);
  std::vector<double> b(targets.begin(), targets.end());
  RegressionModel model;
  model.feature_codes.assign(codes.begin(), codes.end());
  model.meta.feature_means.assign(p, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p) throw Error("training row has the wrong width");
    if (!std::isfinite(targets[i])) throw Error("non-finite training target");
    a(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(rows[i][j])) throw Error("non-finite feature value");
      a(i, j + 1) = rows[i][j];
      model.meta.feature_means[j] += rows[i][j];
    }
  }
  for (double& m : model.meta.feature_means) m /= static_cast<double>(rows.size());
  const auto sol = detail::least_squares(std::move(a), std::move(b));
  model.intercept = sol.coef[0];
  model.weights.assign(sol.coef.begin() + 1, sol.coef.end());
  model.meta.ridge_damped = sol.ridge_damped;
  model.meta.text_count = rows.size();
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw Error("training produced a non-finite weight");
  }
  return model;
}

inline std::vector<std::vector<double>> feature_rows(
    std::span<const FeatureVector> vectors, std::span<const FeatureCode> codes) {
  std::vector<std::vector<double>> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) {
    std::vector<double> row;
    row.reserve(codes.size());
    for (FeatureCode c : codes) row.push_back(v[c]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline RegressionModel train(std::span<const FeatureVector> vectors,
                             std::span<const double> targets,
                             std::span<const FeatureCode> codes) {
  return train(feature_rows(vectors, codes), targets, codes);
}

/// Unclamped grade estimate.
inline double predict(const RegressionModel& model, const FeatureVector& v) {
  double y = model.intercept;
  for (std::size_t j = 0; j < model.feature_codes.size(); ++j) {
    y += model.weights[j] * v[model.feature_codes[j]];
  }
  return y;
}

inline double predict(const RegressionModel& model, const PartialFeatures& v) {
  double y = model.intercept;
  for (std::size_t j = 0; j < model.feature_codes.size(); ++j) {
    const auto value = v.find(model.feature_codes[j]);
    if (!value) {
      throw Error("feature " + std::string(name_of(model.feature_codes[j])) +
                  " missing from input");
    }
    y += model.weights[j] * *value;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Evaluation

struct GradeStats {
  std::size_t count = 0;
  double mean_prediction = 0.0;
  double avg_error = 0.0;
};

struct EvaluationReport {
  std::map<double, GradeStats> by_grade;
  double avg_error = 0.0;  // mean |prediction - grade| over texts
  std::size_t count = 0;
};

namespace detail {
// Sorted summation so that the result does not depend on input order.
inline double order_free_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
}  // namespace detail

inline EvaluationReport evaluate_predictions(std::span<const double> predictions,
                                             std::span<const double> grades) {
  if (predictions.size() != grades.size()) {
    throw Error("predictions and grades differ in length");
  }
  if (predictions.empty()) throw Error("cannot evaluate an empty test set");
  EvaluationReport rep;
  rep.count = predictions.size();
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  std::vector<double> errors;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double err = std::abs(predictions[i] - grades[i]);
    errors.push_back(err);
    groups[grades[i]].first.push_back(predictions[i]);
    groups[grades[i]].second.push_back(err);
  }
  rep.avg_error = detail::order_free_mean(std::move(errors));
  for (auto& [grade, g] : groups) {
    GradeStats s;
    s.count = g.first.size();
    s.mean_prediction = detail::order_free_mean(std::move(g.first));
    s.avg_error = detail::order_free_mean(std::move(g.second));
    rep.by_grade[grade] = s;
  }
  return rep;
}

inline EvaluationReport evaluate(const RegressionModel& model,
                                 std::span<const FeatureVector> vectors,
                                 std::span<const double> grades) {
  std::vector<double> predictions;
  predictions.reserve(vectors.size());
  for (const auto& v : vectors) predictions.push_back(predict(model, v));
  return evaluate_predictions(predictions, grades);
}

// ---------------------------------------------------------------------------
// Feature family versions

enum class FamilyVersion { S, CM, WD, S_CM, CM_WD, S_WD, S_CM_WD };

inline constexpr std::array<FamilyVersion, 7> kAllVersions = {
    FamilyVersion::S,     FamilyVersion::CM,   FamilyVersion::WD,
    FamilyVersion::S_CM,  FamilyVersion::CM_WD, FamilyVersion::S_WD,
    FamilyVersion::S_CM_WD};

inline std::string_view version_name(FamilyVersion v) {
  switch (v) {
    case FamilyVersion::S: return "S";
    case FamilyVersion::CM: return "CM";
    case FamilyVersion::WD: return "WD";
    case FamilyVersion::S_CM: return "S+CM";
    case FamilyVersion::CM_WD: return "CM+WD";
    case FamilyVersion::S_WD: return "S+WD";
    case FamilyVersion::S_CM_WD: return "S+CM+WD";
  }
  return "?";
}

inline FamilyVersion parse_version(std::string_view name) {
  for (FamilyVersion v : kAllVersions) {
    if (version_name(v) == name) return v;
  }
  throw Error("unknown model version '" + std::string(name) + "'");
}

inline const std::vector<FeatureCode>& simple_family() {
  using F = FeatureCode;
  static const std::vector<FeatureCode> s = {
      F::aWPS, F::aSPW, F::aNP, F::aNN, F::aVP, F::aAdj, F::aSBr,
      F::aPP,  F::nNP,  F::nNN, F::nVP, F::nAdj, F::nPP};
  return s;
}

inline const std::vector<FeatureCode>& cognitive_family() {
  using F = FeatureCode;
  static const std::vector<FeatureCode> s = {F::aEM, F::aUE, F::nLC, F::aLCw};
  return s;
}

inline const std::vector<FeatureCode>& word_difficulty_family() {
  using F = FeatureCode;
  static const std::vector<FeatureCode> s = {F::aCw, F::nCw, F::nDw, F::nEw,
                                             F::nFw};
  return s;
}

/// Fixed feature subset of a version, canonical order.
inline std::vector<FeatureCode> version_codes(FamilyVersion v) {
  const bool s = v == FamilyVersion::S || v == FamilyVersion::S_CM ||
                 v == FamilyVersion::S_WD || v == FamilyVersion::S_CM_WD;
  const bool cm = v == FamilyVersion::CM || v == FamilyVersion::S_CM ||
                  v == FamilyVersion::CM_WD || v == FamilyVersion::S_CM_WD;
  const bool wd = v == FamilyVersion::WD || v == FamilyVersion::CM_WD ||
                  v == FamilyVersion::S_WD || v == FamilyVersion::S_CM_WD;
  std::vector<FeatureCode> out;
  if (s) out.insert(out.end(), simple_family().begin(), simple_family().end());
  if (cm) {
    out.insert(out.end(), cognitive_family().begin(), cognitive_family().end());
  }
  if (wd) {
    out.insert(out.end(), word_difficulty_family().begin(),
               word_difficulty_family().end());
  }
  std::sort(out.begin(), out.end(), [](FeatureCode a, FeatureCode b) {
    return index_of(a) < index_of(b);
  });
  return out;
}

struct LabeledFeatures {
  std::vector<FeatureVector> rows;
  std::vector<double> grades;
};

struct VersionResult {
  FamilyVersion version;
  std::vector<FeatureCode> codes;
  std::optional<RegressionModel> model;
  std::optional<EvaluationReport> report;
  std::string error;
};

/// Trains and evaluates all seven versions. A version uses its fixed subset
/// restricted to the selection's included features; a failing version is
/// reported and the rest still run.
inline std::vector<VersionResult> train_versions(const LabeledFeatures& train_set,
                                                 const LabeledFeatures& test_set,
                                                 const SelectionResult& selection,
                                                 const std::string& corpus_id =
                                                     "") {
  std::vector<VersionResult> out;
  for (FamilyVersion v : kAllVersions) {
    VersionResult res{v, {}, std::nullopt, std::nullopt, {}};
    for (FeatureCode c : version_codes(v)) {
      if (selection.includes(c)) res.codes.push_back(c);
    }
    try {
      if (res.codes.empty()) throw Error("no selected features in this version");
      RegressionModel m = train(train_set.rows, train_set.grades, res.codes);
      m.meta.corpus_id = corpus_id;
      m.meta.version_tag = std::string(version_name(v));
      m.meta.significance = selection.significance;
      m.meta.pair_threshold = selection.pair_threshold;
      res.report = evaluate(m, test_set.rows, test_set.grades);
      res.model = std::move(m);
    } catch (const Error& e) {
      res.error = e.what();
    }
    out.push_back(std::move(res));
  }
  return out;
}

/// Version | Gr ... | AvgEr, tab separated.
inline std::string format_versions_table(const std::vector<VersionResult>& results,
                                         int digits = 3) {
  std::set<double> grades;
  for (const auto& r : results) {
    if (r.report) {
      for (const auto& [g, s] : r.report->by_grade) grades.insert(g);
    }
  }
  std::string out = "Version";
  for (double g : grades) out += "\tGr " + util::format_grade(g);
  out += "\tAvgEr\n";
  for (const auto& r : results) {
    out += std::string(version_name(r.version));
    if (!r.report) {
      out += "\terror: " + r.error + "\n";
      continue;
    }
    for (double g : grades) {
      auto it = r.report->by_grade.find(g);
      out += '\t';
      out += it == r.report->by_grade.end()
                 ? std::string("-")
                 : util::format_fixed(it->second.mean_prediction, digits);
    }
    out += '\t' + util::format_fixed(r.report->avg_error, digits) + '\n';
  }
  return out;
}

inline std::string format_evaluation(const EvaluationReport& rep, int digits = 3) {
  std::string out = "grade\ttexts\tmean_prediction\tavg_error\n";
  for (const auto& [g, s] : rep.by_grade) {
    out += util::format_grade(g) + '\t' + std::to_string(s.count) + '\t' +
           util::format_fixed(s.mean_prediction, digits) + '\t' +
           util::format_fixed(s.avg_error, digits) + '\n';
  }
  out += "All\t" + std::to_string(rep.count) + "\t-\t" +
         util::format_fixed(rep.avg_error, digits) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Model files: JSON, keys sorted, doubles in shortest round-trip form.

inline std::string serialize_model(const RegressionModel& model) {
  nlohmann::json j;
  j["format"] = "lxper-model";
  j["format_version"] = kModelFormatVersion;
  std::vector<std::string> names;
  for (FeatureCode c : model.feature_codes) names.emplace_back(name_of(c));
  j["features"] = names;
  j["weights"] = model.weights;
  j["intercept"] = model.intercept;
  nlohmann::json meta;
  meta["corpus"] = model.meta.corpus_id;
  meta["texts"] = model.meta.text_count;
  meta["version"] = model.meta.version_tag;
  meta["significance"] = model.meta.significance;
  meta["pair_threshold"] = model.meta.pair_threshold;
  meta["feature_means"] = model.meta.feature_means;
  meta["ridge_damped"] = model.meta.ridge_damped;
  j["training"] = meta;
  return j.dump(2) + "\n";
}

inline RegressionModel parse_model(std::string_view content,
                                   const std::string& name = "model") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception& e) {
    throw Error(name + ": unreadable model file: " + e.what());
  }
  try {
    if (j.value("format", "") != "lxper-model") {
      throw Error("not a model file");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error("unsupported format_version " + std::to_string(version));
    }
    RegressionModel m;
    for (const auto& n : j.at("features")) {
      m.feature_codes.push_back(parse_feature_code(n.get<std::string>()));
    }
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    if (m.weights.size() != m.feature_codes.size()) {
      throw Error("weights and features differ in length");
    }
    const auto& meta = j.at("training");
    m.meta.corpus_id = meta.at("corpus").get<std::string>();
    m.meta.text_count = meta.at("texts").get<std::size_t>();
    m.meta.version_tag = meta.at("version").get<std::string>();
    m.meta.significance = meta.at("significance").get<double>();
    m.meta.pair_threshold = meta.at("pair_threshold").get<double>();
    m.meta.feature_means = meta.at("feature_means").get<std::vector<double>>();
    m.meta.ridge_damped = meta.at("ridge_damped").get<bool>();
    for (double w : m.weights) {
      if (!std::isfinite(w)) throw Error("non-finite weight");
    }
    if (!std::isfinite(m.intercept)) throw Error("non-finite intercept");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(name + ": malformed model file: " + e.what());
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  }
}

inline void save_model(const RegressionModel& model, const std::string& path) {
  util::write_file(path, serialize_model(model));
}

inline RegressionModel load_model(const std::string& path) {
  return parse_model(util::read_file(path), path);
}

}  // namespace lxper
