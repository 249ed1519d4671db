#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "lxper/model.hpp"
#include "support/oracles.hpp"

using namespace lxper;
using F = FeatureCode;

namespace {

struct Planted {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
};

// y = 3 + 2 x0 - x1 + 0.5 x2 + noise
Planted planted(std::size_t n, double noise_sd, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> x(0.0, 2.0), e(0.0, noise_sd);
  Planted p;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r = {x(gen), x(gen), x(gen)};
    p.y.push_back(3 + 2 * r[0] - r[1] + 0.5 * r[2] + (noise_sd > 0 ? e(gen) : 0.0));
    p.rows.push_back(std::move(r));
  }
  return p;
}

const std::vector<FeatureCode> kThree = {F::aWPS, F::aSPW, F::aNP};

double rss(const RegressionModel& m, const std::vector<FeatureVector>& rows,
           const std::vector<double>& y) {
  double s = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = predict(m, rows[i]) - y[i];
    s += r * r;
  }
  return s;
}

LabeledFeatures random_labeled(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  LabeledFeatures out;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, kFeatureCount> v{};
    for (auto& x : v) x = d(gen);
    const double grade = 7.0 + static_cast<double>(i % 6);
    v[index_of(F::nDw)] += 0.6 * grade;
    v[index_of(F::aEM)] += 0.2 * grade;
    v[index_of(F::aWPS)] += 0.4 * grade;
    out.rows.push_back(FeatureVector::from_values(v));
    out.grades.push_back(grade);
  }
  return out;
}

SelectionResult include_all() {
  SelectionResult s;
  for (FeatureCode c : all_feature_codes()) s.included.push_back(c);
  return s;
}

}  // namespace

// --- train -----------------------------------------------------------------------------

TEST(Train, ExactLine) {
  const std::vector<std::vector<double>> rows = {{0}, {1}, {2}, {5}, {-3}};
  const std::vector<double> y = {1, 3, 5, 11, -5};
  const std::vector<FeatureCode> c = {F::aWPS};
  const auto m = train(rows, y, c);
  EXPECT_NEAR(m.weights[0], 2.0, 1e-9);
  EXPECT_NEAR(m.intercept, 1.0, 1e-9);
  EXPECT_FALSE(m.meta.ridge_damped);
  EXPECT_EQ(m.meta.text_count, 5u);
  EXPECT_EQ(m.meta.feature_means, (std::vector<double>{1.0}));
}

TEST(Train, ExactlyDeterminedMatchesNormalEquations) {
  const std::vector<std::vector<double>> rows = {{1, 2}, {3, -1}, {0.5, 4}};
  const std::vector<double> y = {4, 2.5, 7};
  const std::vector<FeatureCode> c = {F::aWPS, F::aSPW};
  // 3 rows and 3 unknowns with the intercept: rows must exceed features only.
  const auto m = train(rows, y, c);
  const auto o = oracle::normal_equation_ols(rows, y);
  EXPECT_NEAR(m.intercept, o[0], 1e-8);
  EXPECT_NEAR(m.weights[0], o[1], 1e-8);
  EXPECT_NEAR(m.weights[1], o[2], 1e-8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(m.intercept + m.weights[0] * rows[i][0] + m.weights[1] * rows[i][1],
                y[i], 1e-9);
  }
}

TEST(Train, OverdeterminedMatchesNormalEquations) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = planted(40, 0.7, seed);
    const auto m = train(p.rows, p.y, kThree);
    const auto o = oracle::normal_equation_ols(p.rows, p.y);
    EXPECT_NEAR(m.intercept, o[0], 1e-8);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m.weights[j], o[j + 1], 1e-8);
  }
}

TEST(Train, Errors) {
  const std::vector<std::vector<double>> rows(3, std::vector<double>(5, 1.0));
  const std::vector<double> y = {1, 2, 3};
  const std::vector<FeatureCode> five = {F::aWPS, F::aSPW, F::aNP, F::aNN, F::aVP};
  try {
    train(rows, y, five);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("underdetermined"), std::string::npos);
  }
  const std::vector<std::vector<double>> bad = {{1}, {2}, {NAN}};
  const std::vector<FeatureCode> one = {F::aWPS};
  EXPECT_THROW(train(bad, y, one), Error);
  const std::vector<std::vector<double>> ok = {{1}, {2}, {3}};
  const std::vector<double> inf_y = {1, INFINITY, 3};
  EXPECT_THROW(train(ok, inf_y, one), Error);
  const std::vector<double> short_y = {1, 2};
  EXPECT_THROW(train(ok, short_y, one), Error);
}

TEST(Train, PlantedRecovery) {
  const auto p = planted(500, 0.1, 42);
  const auto m = train(p.rows, p.y, kThree);
  EXPECT_NEAR(m.intercept, 3.0, 0.05);
  EXPECT_NEAR(m.weights[0], 2.0, 0.02);
  EXPECT_NEAR(m.weights[1], -1.0, 0.02);
  EXPECT_NEAR(m.weights[2], 0.5, 0.02);
  const auto exact = planted(12, 0.0, 43);
  const auto e = train(exact.rows, exact.y, kThree);
  EXPECT_NEAR(e.weights[0], 2.0, 1e-9);
  EXPECT_NEAR(e.intercept, 3.0, 1e-9);
}

TEST(Train, ResidualsOrthogonalToDesign) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = planted(60, 1.5, seed);
    const auto m = train(p.rows, p.y, kThree);
    std::vector<double> res;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      double f = m.intercept;
      for (std::size_t j = 0; j < 3; ++j) f += m.weights[j] * p.rows[i][j];
      res.push_back(p.y[i] - f);
    }
    auto norm = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    };
    const double rn = norm(res);
    std::vector<double> ones(res.size(), 1.0);
    double dot = 0;
    for (double r : res) dot += r;
    EXPECT_LT(std::abs(dot), 1e-6 * rn * norm(ones));
    for (std::size_t j = 0; j < 3; ++j) {
      std::vector<double> col;
      for (const auto& r : p.rows) col.push_back(r[j]);
      double d = 0;
      for (std::size_t i = 0; i < col.size(); ++i) d += col[i] * res[i];
      EXPECT_LT(std::abs(d), 1e-6 * rn * norm(col));
    }
  }
}

TEST(Train, DuplicatedRowsKeepCoefficients) {
  const auto p = planted(30, 1.0, 9);
  auto rows = p.rows;
  auto y = p.y;
  rows.insert(rows.end(), p.rows.begin(), p.rows.end());
  y.insert(y.end(), p.y.begin(), p.y.end());
  const auto a = train(p.rows, p.y, kThree);
  const auto b = train(rows, y, kThree);
  EXPECT_NEAR(a.intercept, b.intercept, 1e-9);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.weights[j], b.weights[j], 1e-9);
}

TEST(Train, RankDeficientIsDampedAndFlagged) {
  const auto p = planted(20, 0.5, 4);
  auto rows = p.rows;
  for (auto& r : rows) r[2] = 2 * r[0];  // collinear column
  const auto m = train(rows, p.y, kThree);
  EXPECT_TRUE(m.meta.ridge_damped);
  for (double w : m.weights) EXPECT_TRUE(std::isfinite(w));
  // The damped fit still matches the least-squares fit on the reduced design.
  std::vector<std::vector<double>> reduced;
  for (const auto& r : rows) reduced.push_back({r[0], r[1]});
  const std::vector<FeatureCode> two = {F::aWPS, F::aSPW};
  const auto ref = train(reduced, p.y, two);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double a = m.intercept + m.weights[0] * rows[i][0] +
                     m.weights[1] * rows[i][1] + m.weights[2] * rows[i][2];
    const double b = ref.intercept + ref.weights[0] * rows[i][0] +
                     ref.weights[1] * rows[i][1];
    EXPECT_NEAR(a, b, 1e-6);
  }
  const std::vector<std::vector<double>> constant_col = {{1}, {1}, {1}, {1}};
  const std::vector<double> y4 = {1, 2, 3, 4};
  const std::vector<FeatureCode> one = {F::aWPS};
  EXPECT_TRUE(train(constant_col, y4, one).meta.ridge_damped);
}

// --- predict ---------------------------------------------------------------------------

TEST(Predict, Examples) {
  RegressionModel m;
  m.feature_codes = {F::nDw};
  m.weights = {0.5};
  m.intercept = 1.0;
  std::array<double, kFeatureCount> v{};
  EXPECT_EQ(predict(m, FeatureVector::from_values(v)), 1.0);
  v[index_of(F::nDw)] = 4.0;
  EXPECT_EQ(predict(m, FeatureVector::from_values(v)), 3.0);
  PartialFeatures partial;
  partial.set(F::aWPS, 2.0);
  try {
    predict(m, partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("nDw"), std::string::npos);
  }
  partial.set(F::nDw, 4.0);
  EXPECT_EQ(predict(m, partial), 3.0);
}

TEST(Predict, Unclamped) {
  RegressionModel m;
  m.feature_codes = {F::nDw};
  m.weights = {1.0};
  std::array<double, kFeatureCount> v{};
  v[index_of(F::nDw)] = 13.04;
  EXPECT_EQ(predict(m, FeatureVector::from_values(v)), 13.04);
  v[index_of(F::nDw)] = -2.0;
  EXPECT_EQ(predict(m, FeatureVector::from_values(v)), -2.0);
}

TEST(Predict, ExactFitInterpolatesTrainingRows) {
  const auto p = planted(10, 0.0, 77);
  const auto m = train(p.rows, p.y, kThree);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    std::array<double, kFeatureCount> v{};
    for (std::size_t j = 0; j < 3; ++j) v[index_of(kThree[j])] = p.rows[i][j];
    EXPECT_NEAR(predict(m, FeatureVector::from_values(v)), p.y[i], 1e-9);
  }
}

// --- evaluate --------------------------------------------------------------------------

TEST(Evaluate, Examples) {
  const std::vector<double> pred = {10.0, 11.0}, grades = {10, 12};
  auto rep = evaluate_predictions(pred, grades);
  EXPECT_EQ(rep.avg_error, 0.5);
  EXPECT_EQ(rep.by_grade.at(12).mean_prediction, 11.0);
  EXPECT_EQ(rep.by_grade.at(10).avg_error, 0.0);
  rep = evaluate_predictions(grades, grades);
  EXPECT_EQ(rep.avg_error, 0.0);
  // |9.5-9| + |10-11| + |12.25-12| + |13-12| = 2.75, over 4 texts
  const std::vector<double> p4 = {9.5, 10.0, 12.25, 13.0}, g4 = {9, 11, 12, 12};
  rep = evaluate_predictions(p4, g4);
  EXPECT_EQ(rep.avg_error, 0.6875);
  EXPECT_EQ(rep.by_grade.at(12).count, 2u);
  EXPECT_EQ(rep.by_grade.at(12).mean_prediction, 12.625);
  EXPECT_EQ(rep.by_grade.at(12).avg_error, 0.625);
  const std::vector<double> none;
  EXPECT_THROW(evaluate_predictions(none, none), Error);
}

TEST(Evaluate, PermutationInvariant) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d(10.0, 2.0);
  std::vector<double> pred, grades;
  for (int i = 0; i < 97; ++i) {
    pred.push_back(d(gen));
    grades.push_back(7.0 + i % 6);
  }
  const auto base = evaluate_predictions(pred, grades);
  std::vector<std::size_t> idx(pred.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(idx.begin(), idx.end(), gen);
    std::vector<double> p2, g2;
    for (auto i : idx) {
      p2.push_back(pred[i]);
      g2.push_back(grades[i]);
    }
    const auto rep = evaluate_predictions(p2, g2);
    EXPECT_EQ(rep.avg_error, base.avg_error);
    for (const auto& [g, s] : base.by_grade) {
      EXPECT_EQ(rep.by_grade.at(g).mean_prediction, s.mean_prediction);
      EXPECT_EQ(rep.by_grade.at(g).avg_error, s.avg_error);
    }
  }
}

// --- versions --------------------------------------------------------------------------

TEST(Versions, NamesAndSubsets) {
  std::vector<std::string> names;
  for (FamilyVersion v : kAllVersions) names.emplace_back(version_name(v));
  EXPECT_EQ(names, (std::vector<std::string>{"S", "CM", "WD", "S+CM", "CM+WD", "S+WD",
                                             "S+CM+WD"}));
  for (const auto& n : names) EXPECT_EQ(version_name(parse_version(n)), n);
  EXPECT_THROW(parse_version("S+X"), Error);
  EXPECT_EQ(version_codes(FamilyVersion::S_CM_WD).size(), 22u);
  EXPECT_EQ(version_codes(FamilyVersion::S).size(), 13u);
  EXPECT_EQ(version_codes(FamilyVersion::CM).size(), 4u);
  EXPECT_EQ(version_codes(FamilyVersion::WD).size(), 5u);
}

TEST(Versions, SevenRowsAndIsolatedFailures) {
  const auto train_set = random_labeled(60, 1);
  const auto test_set = random_labeled(24, 2);
  auto sel = include_all();
  auto results = train_versions(train_set, test_set, sel, "rand");
  ASSERT_EQ(results.size(), 7u);
  for (const auto& r : results) {
    EXPECT_TRUE(r.model.has_value()) << r.error;
    EXPECT_EQ(r.model->meta.corpus_id, "rand");
    EXPECT_EQ(r.model->meta.version_tag, version_name(r.version));
  }
  EXPECT_EQ(results.back().codes, version_codes(FamilyVersion::S_CM_WD));

  // No cognitive feature selected: CM fails, the rest still train.
  sel.included.erase(std::remove_if(sel.included.begin(), sel.included.end(),
                                    [](FeatureCode c) {
                                      return family_of(c) == FeatureFamily::cognitive;
                                    }),
                     sel.included.end());
  results = train_versions(train_set, test_set, sel);
  EXPECT_FALSE(results[1].model.has_value());
  EXPECT_FALSE(results[1].error.empty());
  EXPECT_TRUE(results[0].model.has_value());
  EXPECT_TRUE(results[6].model.has_value());
  const auto table = format_versions_table(results);
  EXPECT_EQ(table.substr(0, 7), "Version");
}

// Least squares minimises the squared error, so nesting can only lower the
// in-sample residual sum of squares.
TEST(Versions, NestedVersionsNeverRaiseInSampleSquaredError) {
  const std::vector<std::pair<FamilyVersion, FamilyVersion>> nested = {
      {FamilyVersion::S, FamilyVersion::S_CM},   {FamilyVersion::S, FamilyVersion::S_WD},
      {FamilyVersion::CM, FamilyVersion::S_CM},  {FamilyVersion::CM, FamilyVersion::CM_WD},
      {FamilyVersion::WD, FamilyVersion::S_WD},  {FamilyVersion::WD, FamilyVersion::CM_WD},
      {FamilyVersion::S_CM, FamilyVersion::S_CM_WD},
      {FamilyVersion::S_WD, FamilyVersion::S_CM_WD},
      {FamilyVersion::CM_WD, FamilyVersion::S_CM_WD}};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto data = random_labeled(80, seed);
    const auto sel = include_all();
    const auto results = train_versions(data, data, sel);
    auto fit = [&](FamilyVersion v) {
      return rss(*results[static_cast<std::size_t>(v)].model, data.rows, data.grades);
    };
    for (auto [small, big] : nested) {
      EXPECT_LE(fit(big), fit(small) * (1 + 1e-12))
          << version_name(small) << " vs " << version_name(big) << " seed " << seed;
    }
  }
}

// Mean absolute error is not what least squares minimises, so a larger
// nested model can score worse on it.
TEST(Versions, InSampleAbsoluteErrorIsNotMonotone) {
  const std::vector<std::vector<double>> rows = {{3}, {2}, {-2}, {-1}, {-1}};
  const std::vector<double> y = {4, 3, 6, 4, 3};
  const std::vector<FeatureCode> c = {F::aWPS};
  const auto with = train(rows, y, c);
  const double mean = 4.0;  // intercept-only fit
  double mae_with = 0, mae_without = 0, sse_with = 0, sse_without = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = with.intercept + with.weights[0] * rows[i][0] - y[i];
    mae_with += std::abs(r) / 5;
    sse_with += r * r;
    mae_without += std::abs(mean - y[i]) / 5;
    sse_without += (mean - y[i]) * (mean - y[i]);
  }
  EXPECT_LT(sse_with, sse_without);
  EXPECT_NEAR(mae_without, 0.8, 1e-12);
  EXPECT_NEAR(mae_with, 0.863829787234042, 1e-9);
}

// --- persistence -----------------------------------------------------------------------

TEST(ModelFile, RoundTripIsBitExact) {
  const auto data = random_labeled(80, 5);
  auto m = train(data.rows, data.grades, version_codes(FamilyVersion::S_CM_WD));
  m.meta.corpus_id = "rand";
  m.meta.version_tag = "S+CM+WD";
  oracle::TempDir dir;
  const auto path = dir.file("m.json");
  save_model(m, path);
  const auto back = load_model(path);
  EXPECT_EQ(back.feature_codes, m.feature_codes);
  ASSERT_EQ(back.weights.size(), m.weights.size());
  for (std::size_t j = 0; j < m.weights.size(); ++j) {
    EXPECT_EQ(std::memcmp(&back.weights[j], &m.weights[j], sizeof(double)), 0);
  }
  EXPECT_EQ(back.intercept, m.intercept);
  EXPECT_EQ(back.meta.feature_means, m.meta.feature_means);
  EXPECT_EQ(back.meta.corpus_id, "rand");
  EXPECT_EQ(serialize_model(back), serialize_model(m));
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int i = 0; i < 100; ++i) {
    std::array<double, kFeatureCount> v{};
    for (auto& x : v) x = u(gen);
    const auto fv = FeatureVector::from_values(v);
    const double a = predict(m, fv), b = predict(back, fv);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof(double)), 0);
  }
}

TEST(ModelFile, RejectsBadFiles) {
  RegressionModel m;
  m.feature_codes = {F::nDw};
  m.weights = {0.25};
  m.intercept = 7.0;
  auto text = serialize_model(m);
  auto bumped = text;
  const auto at = bumped.find("\"format_version\": 1");
  ASSERT_NE(at, std::string::npos);
  bumped.replace(at, 19, "\"format_version\": 2");
  EXPECT_THROW(parse_model(bumped), Error);
  EXPECT_THROW(parse_model(text.substr(0, text.size() / 2)), Error);
  EXPECT_THROW(parse_model("{}"), Error);
  oracle::TempDir dir;
  EXPECT_THROW(load_model(dir.file("missing.json")), Error);
}

TEST(ModelFile, HandEditedWeight) {
  RegressionModel m;
  m.feature_codes = {F::aWPS, F::nDw};
  m.weights = {0.25, 0.5};
  m.intercept = 7.0;
  auto text = serialize_model(m);
  const auto at = text.find("0.5");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 3, "1.5");
  const auto edited = parse_model(text);
  std::array<double, kFeatureCount> v{};
  v[index_of(F::aWPS)] = 8.0;
  v[index_of(F::nDw)] = 3.0;
  // 7 + 0.25 * 8 + 1.5 * 3
  EXPECT_EQ(predict(edited, FeatureVector::from_values(v)), 13.5);
}
