// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runs against the bundled fixtures and the synthetic corpus.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lxper/lxper.hpp"
#include "support/oracles.hpp"

using namespace lxper;
using F = FeatureCode;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string data_path(const std::string& rel) { return oracle::source_path(rel); }

std::vector<std::string> fixture_lines(const std::string& rel) {
  std::vector<std::string> out;
  for (const auto& l : util::read_lines(data_path(rel))) {
    if (!l.empty()) out.push_back(l);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome selection_fixture() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto loaded = parse_selection_report(
      util::read_file(data_path("tests/data/published_correlations.tsv")), "published");
  const auto sel = select_features(loaded.report, loaded.pairs);
  const double elapsed = seconds_since(t0);
  o.check(sel.included.size() == 22,
          "included " + std::to_string(sel.included.size()) + " features, expected 22");
  for (const auto& line : fixture_lines("tests/data/published_correlations.tsv")) {
    const auto f = util::split(line, '\t');
    if (f[0] == "code") continue;
    const bool want = f[4] == "Yes";
    o.check(sel.includes(parse_feature_code(f[0])) == want,
            std::string(f[0]) + " include mismatch");
  }
  o.check(!sel.includes(F::nUE) && !sel.includes(F::M3S), "nUE or M3S included");
  o.check(elapsed < 1.0, "took " + fmt(elapsed) + " s");
  if (o.pass) o.detail = "22 included, nUE and M3S out, " + fmt(elapsed * 1e3) + " ms";
  return o;
}

Outcome ranking_fixture() {
  Outcome o;
  const auto loaded = parse_selection_report(
      util::read_file(data_path("tests/data/published_correlations.tsv")), "published");
  const auto sel = select_features(loaded.report, loaded.pairs);
  std::vector<FeatureCode> expected;
  for (const auto& l : fixture_lines("tests/data/published_ranking.txt")) {
    expected.push_back(parse_feature_code(l));
  }
  o.check(sel.ranking == expected, "order differs from the published ranking");
  o.check(!sel.ranking.empty() && sel.ranking.front() == F::nDw, "nDw not first");
  o.check(!sel.ranking.empty() && sel.ranking.back() == F::aEM, "aEM not last");
  if (o.pass) o.detail = "nDw first, aEM last, all 22 positions match";
  return o;
}

Outcome formula_oracles() {
  Outcome o;
  const auto easy = load_easy_words(data_path("tests/data/formula_easywords.txt"));
  double worst = 0;
  const auto cases = oracle::formula_cases();
  o.check(cases.size() == 5, "expected 5 oracle texts");
  for (const auto& c : cases) {
    const auto a = annotate(c.text);
    const double d[3] = {std::abs(flesch_kincaid(a) - c.flesch_kincaid),
                         std::abs(coleman_liau(a) - c.coleman_liau),
                         std::abs(dale_chall(a, easy) - c.dale_chall)};
    for (double x : d) {
      worst = std::max(worst, x);
      o.check(x <= 1e-6, c.id + " off by " + fmt(x));
    }
  }
  if (o.pass) o.detail = "max deviation " + fmt(worst);
  return o;
}

Outcome pearson_correctness() {
  Outcome o;
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> len(3, 50);
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.1, 20.0), shift(-50.0, 50.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = len(gen);
    std::vector<double> x(n), y(n);
    const double mix = d(gen);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = d(gen);
      y[i] = mix * x[i] + d(gen);
    }
    const double r = pearson(x, y);
    const double diff = std::abs(r - oracle::pearson_pairwise(x, y));
    worst = std::max(worst, diff);
    o.check(diff <= 1e-9, "oracle mismatch " + fmt(diff));
    o.check(r == pearson(y, x), "not symmetric");
    auto xs = x;
    const double a = scale(gen), b = shift(gen);
    for (auto& v : xs) v = a * v + b;
    o.check(std::abs(pearson(xs, y) - r) <= 1e-9, "not affine invariant");
  }
  if (o.pass) o.detail = "100 series, max oracle deviation " + fmt(worst);
  return o;
}

Outcome ols_correctness() {
  Outcome o;
  const std::vector<FeatureCode> codes = {F::aWPS, F::aSPW, F::aNP};
  const std::vector<double> truth = {3.0, 2.0, -1.0, 0.5};
  std::mt19937_64 gen(8);
  std::normal_distribution<double> d(0.0, 2.0);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<double> exact, noisy;
    for (int i = 0; i < 30; ++i) {
      std::vector<double> r = {d(gen), d(gen), d(gen)};
      const double y = truth[0] + truth[1] * r[0] + truth[2] * r[1] + truth[3] * r[2];
      exact.push_back(y);
      noisy.push_back(y + d(gen));
      rows.push_back(std::move(r));
    }
    const auto m = train(rows, exact, codes);
    worst = std::max(worst, std::abs(m.intercept - truth[0]));
    for (std::size_t j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(m.weights[j] - truth[j + 1]));
    }
    const auto fit = train(rows, noisy, codes);
    std::vector<double> res;
    double rn = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double f = fit.intercept;
      for (std::size_t j = 0; j < 3; ++j) f += fit.weights[j] * rows[i][j];
      res.push_back(noisy[i] - f);
      rn += res.back() * res.back();
    }
    rn = std::sqrt(rn);
    double dot = 0;
    for (double r : res) dot += r;
    o.check(std::abs(dot) <= 1e-6 * rn * std::sqrt(static_cast<double>(res.size())),
            "residuals not orthogonal to the intercept");
    for (std::size_t j = 0; j < 3; ++j) {
      double dj = 0, cn = 0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        dj += rows[i][j] * res[i];
        cn += rows[i][j] * rows[i][j];
      }
      o.check(std::abs(dj) <= 1e-6 * rn * std::sqrt(cn),
              "residuals not orthogonal to a feature");
    }
  }
  o.check(worst <= 1e-9, "planted coefficients off by " + fmt(worst));
  bool rejected = false;
  try {
    const std::vector<std::vector<double>> few(3, std::vector<double>(5, 1.0));
    const std::vector<double> y = {1, 2, 3};
    const std::vector<FeatureCode> five = {F::aWPS, F::aSPW, F::aNP, F::aNN, F::aVP};
    train(few, y, five);
  } catch (const Error&) {
    rejected = true;
  }
  o.check(rejected, "underdetermined system accepted");
  if (o.pass) o.detail = "max coefficient error " + fmt(worst) + ", residuals orthogonal";
  return o;
}

Outcome feature_arithmetic() {
  Outcome o;
  const auto wl = oracle::fixture_wordlist();
  const auto rel = oracle::fixture_relations();
  const std::vector<std::pair<F, F>> per_sentence = {
      {F::aNP, F::nNP}, {F::aNN, F::nNN},   {F::aVP, F::nVP}, {F::aAdj, F::nAdj},
      {F::aSBr, F::nSBr}, {F::aPP, F::nPP}, {F::aUE, F::nUE}};
  const std::vector<std::pair<F, F>> per_word = {
      {F::aCw, F::nCw}, {F::aDw, F::nDw}, {F::aEw, F::nEw}, {F::aFw, F::nFw},
      {F::aLCw, F::nLC}};
  std::size_t checks = 0;
  for (const auto& text : oracle::fixture_texts()) {
    const auto a = annotate(text);
    const auto v = extract_all(a, wl, rel);
    const double s = static_cast<double>(a.sentence_count());
    const double w = static_cast<double>(a.word_count);
    for (auto [avg, total] : per_sentence) {
      ++checks;
      o.check(v[avg] * s == v[total],
              std::string(name_of(avg)) + " x sentences != " + std::string(name_of(total)));
    }
    for (auto [avg, total] : per_word) {
      ++checks;
      o.check(v[avg] * w == v[total],
              std::string(name_of(avg)) + " x words != " + std::string(name_of(total)));
    }
    if (v[F::nNP] > 0) {
      ++checks;
      o.check(v[F::aLCn] * v[F::nNP] == v[F::nLC], "aLCn x nNP != nLC");
    }
    ++checks;
    o.check(v[F::aEM] * s == static_cast<double>(build_entity_index(a).mentions),
            "aEM x sentences != mentions");

    oracle::BracketCounts total;
    for (const auto& sent : a.sentences) {
      const auto c = oracle::count_brackets(to_ptb(sent.tree));
      total.np += c.np;
      total.vp += c.vp;
      total.pp += c.pp;
      total.sbar += c.sbar;
      total.proper += c.proper;
      total.adjectives += c.adjectives;
    }
    const auto tc = count_trees(a);
    o.check(tc.noun_phrases == total.np && tc.verb_phrases == total.vp &&
                tc.prepositional_phrases == total.pp &&
                tc.subordinate_clauses == total.sbar && tc.proper_nouns == total.proper &&
                tc.adjectives == total.adjectives,
            "tree counts differ from the bracket oracle");

    const auto twice = extract_all(annotate(text + " " + text), wl, rel);
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const F c = code_at(i);
      if (kFeatureNames[i][0] != 'n' || c == F::nUE || c == F::nLC) continue;
      o.check(twice[c] == 2 * v[c], std::string(name_of(c)) + " does not double");
    }
  }
  if (o.pass) {
    o.detail = std::to_string(oracle::fixture_texts().size()) + " texts, " +
               std::to_string(checks) + " exact products";
  }
  return o;
}

Outcome end_to_end(RegressionModel& model_out) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto corpus = load_text_corpus(data_path("data/synthetic/corpus.jsonl"));
  const auto wl = load_word_list(data_path("data/synthetic/wordlist.tsv"));
  const auto rel = load_relations(data_path("data/synthetic/relations.txt"));
  const auto easy = load_easy_words(data_path("data/synthetic/easywords.txt"));
  const ExtractionResources res{wl, rel};
  TrainingOptions opts;
  opts.corpus_id = "synthetic";
  const auto run = run_training(corpus, res, opts);
  std::map<FamilyVersion, double> err;
  for (const auto& v : run.versions) {
    if (v.report) err[v.version] = v.report->avg_error;
  }
  o.check(err.count(FamilyVersion::S_CM_WD) && err.count(FamilyVersion::CM),
          "a version failed to train");
  const double full = err[FamilyVersion::S_CM_WD], cm = err[FamilyVersion::CM];
  o.check(full <= cm, "S+CM+WD AvgEr " + fmt(full) + " > CM " + fmt(cm));

  const auto table =
      compare_models(comparison_inputs(run.split.test, run.test), run.model, easy);
  auto increasing = [&](const ComparisonRow& row) {
    double prev = -1e300;
    for (double g : {9.0, 10.0, 11.0, 12.0}) {
      auto it = row.by_grade.find(g);
      if (it == row.by_grade.end() || !(it->second.first > prev)) return false;
      prev = it->second.first;
    }
    return true;
  };
  bool lxper_up = false, some_baseline_not = false;
  std::string means;
  for (const auto& row : table.rows) {
    if (row.model == "lxper") {
      lxper_up = increasing(row);
      for (double g : {9.0, 10.0, 11.0, 12.0}) {
        means += (means.empty() ? "" : " ") + fmt(row.by_grade.at(g).first);
      }
    } else if (!increasing(row)) {
      some_baseline_not = true;
    }
  }
  o.check(lxper_up, "LXPER grade means not increasing 9-12: " + means);
  const double elapsed = seconds_since(t0);
  o.check(elapsed < 30.0, "took " + fmt(elapsed) + " s");
  model_out = run.model;
  if (o.pass) {
    o.detail = "AvgEr S+CM+WD " + fmt(full) + " vs CM " + fmt(cm) + "; grade 9-12 means " +
               means + (some_baseline_not ? "; a baseline is not monotone" : "") + "; " +
               fmt(elapsed) + " s";
  }
  return o;
}

Outcome report_contract(const RegressionModel& model) {
  Outcome o;
  const auto corpus = load_text_corpus(data_path("data/synthetic/corpus.jsonl"));
  const auto wl = load_word_list(data_path("data/synthetic/wordlist.tsv"));
  const auto rel = load_relations(data_path("data/synthetic/relations.txt"));
  const ExtractionResources res{wl, rel};
  std::string doc;
  for (std::size_t i = 0; i < 20; ++i) {
    if (i) doc += "\n\n";
    doc += corpus.texts()[i * 13].text;
  }
  const auto printed = format_document_report(score_document(model, doc, res));
  const auto back = parse_document_report(printed);
  o.check(back.paragraphs.size() == 20, "expected 20 paragraph lines");
  double mean = 0;
  for (const auto& p : back.paragraphs) mean += *p.score;
  mean /= static_cast<double>(back.paragraphs.size());
  double var = 0;
  for (const auto& p : back.paragraphs) var += (*p.score - mean) * (*p.score - mean);
  const double sd = std::sqrt(var / static_cast<double>(back.paragraphs.size()));
  o.check(std::abs(mean - back.average) <= 1e-9, "average does not recompute");
  o.check(std::abs(sd - back.standard_dev) <= 1e-9, "standard dev. does not recompute");
  const auto single = score_document(model, corpus.texts()[0].text, res);
  o.check(single.standard_dev == 0.0, "single paragraph has nonzero standard dev.");
  if (o.pass) o.detail = "20 paragraphs recompute; single paragraph sd 0";
  return o;
}

int shell(const std::string& cmd) {
  const int s = std::system(cmd.c_str());
  return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
}

Outcome determinism() {
  Outcome o;
  const std::string cli = LXPER_CLI_PATH;
  oracle::TempDir dir;
  const std::string res = " --wordlist " + data_path("data/synthetic/wordlist.tsv") +
                          " --relations " + data_path("data/synthetic/relations.txt");
  std::string doc;
  const auto corpus = load_text_corpus(data_path("data/synthetic/corpus.jsonl"));
  for (std::size_t i = 0; i < 5; ++i) doc += corpus.texts()[i * 50].text + "\n\n";
  util::write_file(dir.file("doc.txt"), doc);
  for (const char* run : {"a", "b"}) {
    const std::string d = dir.file(run);
    std::filesystem::create_directories(d);
    o.check(shell(cli + " train --corpus " + data_path("data/synthetic/corpus.jsonl") +
                  res + " --out " + d + "/model.json > " + d + "/train.out 2>&1") == 0,
            "train failed");
    o.check(shell(cli + " score --model " + d + "/model.json --in " + dir.file("doc.txt") +
                  res + " > " + d + "/score.out 2>&1") == 0,
            "score failed");
  }
  for (const char* f : {"model.json", "model.json.selection.tsv",
                        "model.json.versions.tsv", "score.out"}) {
    o.check(util::read_file(dir.file(std::string("a/") + f)) ==
                util::read_file(dir.file(std::string("b/") + f)),
            std::string(f) + " differs between runs");
  }
  auto strip_path = [](std::string s) { return s.substr(0, s.rfind("written to")); };
  o.check(strip_path(util::read_file(dir.file("a/train.out"))) ==
              strip_path(util::read_file(dir.file("b/train.out"))),
          "train output differs between runs");
  if (o.pass) o.detail = "model, reports and score output byte-identical";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  };
  RegressionModel model;
  report("selection fixture", selection_fixture);
  report("ranking fixture", ranking_fixture);
  report("formula oracles", formula_oracles);
  report("pearson correctness", pearson_correctness);
  report("ols correctness", ols_correctness);
  report("feature arithmetic", feature_arithmetic);
  report("end-to-end synthetic", [&] { return end_to_end(model); });
  report("report contract", [&] { return report_contract(model); });
  report("determinism", determinism);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria pass")
            << std::endl;
  return failures ? 1 : 0;
}
