#pragma once

// The lxper command line: train, score, evaluate, select, compare, summarize.
// run() returns 0 on success, 2 on usage errors and 1 on data errors.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lxper/lxper.hpp"

namespace lxper::cli {

struct Options {
  std::string corpus;
  std::string correlations;
  std::string wordlist;
  std::string easywords;
  std::string relations;
  std::string parses;
  std::string model;
  std::string in;
  std::string out;
  std::string config;
  std::string version = "S+CM+WD";
  std::string format = "text";
  double sig = kDefaultSignificance;
  double pair = kDefaultPairThreshold;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;
  int digits = -1;  // -1: full precision where the output allows it
  bool verbose = false;
};

namespace detail {

struct Resources {
  GradedWordList wordlist;
  RelationResource relations;

  ExtractionResources view() const { return {wordlist, relations}; }
};

inline Resources load_resources(const Options& o, std::ostream& err) {
  if (o.wordlist.empty()) throw Error("--wordlist is required");
  Resources r;
  std::vector<std::string> warnings;
  r.wordlist = load_word_list(o.wordlist, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  if (!o.relations.empty()) r.relations = load_relations(o.relations);
  return r;
}

inline std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(std::string(flag) + " is required");
  return value;
}

// Progress goes to stderr only, so stdout stays byte-identical across runs.
inline void note(const Options& o, std::ostream& err, const std::string& msg) {
  if (!o.verbose) return;
  static const auto start = std::chrono::steady_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  err << "[" << ms << " ms] " << msg << '\n';
}

inline int table_digits(const Options& o) { return o.digits < 0 ? 3 : o.digits; }

inline std::string join_codes(const std::vector<FeatureCode>& codes) {
  std::string out;
  for (FeatureCode c : codes) {
    if (!out.empty()) out += ' ';
    out += name_of(c);
  }
  return out;
}

inline void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out.empty()) {
    out << text;
  } else {
    util::write_file(o.out, text);
  }
}

// ---------------------------------------------------------------------------

inline void cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const GradedTextCorpus corpus = load_text_corpus(require(o.corpus, "--corpus"));
  const std::string model_path = require(o.out, "--out");
  const Resources res = load_resources(o, err);
  TrainingOptions opts;
  opts.significance = o.sig;
  opts.pair_threshold = o.pair;
  opts.test_fraction = o.test_fraction;
  opts.seed = o.seed;
  opts.version = parse_version(o.version);
  opts.corpus_id = std::filesystem::path(o.corpus).filename().string();
  note(o, err, "training on " + std::to_string(corpus.size()) + " texts");
  const TrainingRun run = run_training(corpus, res.view(), opts);
  note(o, err, "split " + std::to_string(run.split.train.size()) + " train / " +
                   std::to_string(run.split.test.size()) + " test; " +
                   std::to_string(run.selection.included.size()) +
                   " features selected");

  const std::string versions = format_versions_table(run.versions, table_digits(o));
  save_model(run.model, model_path);
  util::write_file(model_path + ".selection.tsv",
                   format_selection_report(run.selection));
  util::write_file(model_path + ".versions.tsv", versions);

  out << versions;
  out << "included (" << run.selection.included.size()
      << "): " << join_codes(run.selection.included) << '\n';
  out << "model " << version_name(opts.version) << " written to " << model_path
      << '\n';
}

inline void cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
  const RegressionModel model = load_model(require(o.model, "--model"));
  const std::string document = util::read_file(require(o.in, "--in"));
  const Resources res = load_resources(o, err);
  std::optional<ExternalParses> parses;
  if (!o.parses.empty()) parses = ExternalParses{load_parse_file(o.parses)};
  note(o, err, "scoring " + o.in);
  const DocumentReport report = score_document(
      model, document, res.view(), parses ? &*parses : nullptr);
  note(o, err, std::to_string(report.paragraphs.size()) + " paragraphs scored");
  for (const auto& p : report.paragraphs) {
    if (!p.score) {
      err << "warning: paragraph " << p.index << " not scored: " << p.error
          << '\n';
    }
  }
  emit(o, out,
       format_document_report(report, o.digits < 0 ? std::nullopt
                                                   : std::optional(o.digits)));
}

inline void cmd_evaluate(const Options& o, std::ostream& out,
                         std::ostream& err) {
  const RegressionModel model = load_model(require(o.model, "--model"));
  const GradedTextCorpus corpus = load_text_corpus(require(o.corpus, "--corpus"));
  const Resources res = load_resources(o, err);
  const FeaturizedCorpus f = featurize_corpus(corpus, res.view());
  note(o, err, "featurized " + std::to_string(corpus.size()) + " texts");
  emit(o, out,
       format_evaluation(evaluate(model, f.features.rows, f.features.grades),
                         table_digits(o)));
}

inline bool looks_like_selection_table(const std::string& content) {
  return content.rfind("code\t", 0) == 0;
}

inline void cmd_select(const Options& o, std::ostream& out, std::ostream& err) {
  std::string table_path = o.correlations;
  std::string content;
  if (table_path.empty()) {
    content = util::read_file(require(o.corpus, "--corpus or --correlations"));
    if (looks_like_selection_table(content)) table_path = o.corpus;
  } else {
    content = util::read_file(table_path);
  }
  SelectionResult result;
  if (!table_path.empty()) {
    const LoadedCorrelations loaded = parse_selection_report(content, table_path);
    result = select_features(loaded.report, loaded.pairs, o.sig, o.pair);
  } else {
    const GradedTextCorpus corpus = parse_text_corpus(content, o.corpus);
    const Resources res = load_resources(o, err);
    const FeaturizedCorpus f = featurize_corpus(corpus, res.view());
    note(o, err, "featurized " + std::to_string(corpus.size()) + " texts");
    result = select_features(f.features.rows, f.features.grades, o.sig, o.pair);
  }
  std::string text = format_selection_report(result);
  text += "# included (" + std::to_string(result.included.size()) +
          "): " + join_codes(result.included) + '\n';
  text += "# ranking: " + join_codes(result.ranking) + '\n';
  emit(o, out, text);
}

inline void cmd_compare(const Options& o, std::ostream& out,
                        std::ostream& err) {
  const RegressionModel model = load_model(require(o.model, "--model"));
  const GradedTextCorpus corpus = load_text_corpus(require(o.corpus, "--corpus"));
  const EasyWordList easy = load_easy_words(require(o.easywords, "--easywords"));
  const Resources res = load_resources(o, err);
  const FeaturizedCorpus f = featurize_corpus(corpus, res.view());
  note(o, err, "featurized " + std::to_string(corpus.size()) + " texts");
  const auto inputs = comparison_inputs(corpus, f);
  const ComparisonTable table = compare_models(inputs, model, easy);
  emit(o, out, o.format == "tsv" ? table.to_tsv() : table.to_text(table_digits(o)));
}

inline void cmd_summarize(const Options& o, std::ostream& out, std::ostream&) {
  const GradedTextCorpus corpus = load_text_corpus(require(o.corpus, "--corpus"));
  emit(o, out, summarize_corpus(corpus).to_table(table_digits(o)));
}

// key=value lines; '#' comments. A key names a long flag of the active
// subcommand and only fills flags absent from the command line.
inline void apply_config(CLI::App& sub, const std::string& path) {
  std::size_t line_no = 0;
  for (const auto& raw : util::read_lines(path)) {
    ++line_no;
    const auto line = util::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      throw CLI::ConversionError(where + ": expected key=value");
    }
    const std::string key(util::trim(line.substr(0, eq)));
    const std::string value(util::trim(line.substr(eq + 1)));
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt || key == "config") {
      throw CLI::ConversionError(where + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  Options o;
  CLI::App app{"Grade-level readability scoring", "lxper"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key=value file for unset flags");
    sub->add_flag("--verbose", o.verbose, "Timed progress lines on stderr");
  };
  auto add_resources = [&](CLI::App* sub) {
    sub->add_option("--wordlist", o.wordlist, "Graded word list (word<TAB>A-F|U)");
    sub->add_option("--relations", o.relations, "Lexical relations file");
  };
  auto add_digits = [&](CLI::App* sub) {
    sub->add_option("--digits", o.digits, "Decimal places")
        ->check(CLI::Range(0, 17));
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Write output to this file");
  };
  auto add_selection = [&](CLI::App* sub) {
    sub->add_option("--sig", o.sig, "Significance threshold on |r|")
        ->capture_default_str();
    sub->add_option("--pair", o.pair, "Collinearity threshold")
        ->capture_default_str();
  };

  auto* train = app.add_subcommand("train", "Select features, train and write a model");
  train->add_option("--corpus", o.corpus, "Graded corpus (JSONL)");
  train->add_option("--out", o.out, "Model file; reports go beside it");
  add_resources(train);
  add_selection(train);
  train->add_option("--version", o.version, "Feature family version")
      ->check(CLI::IsMember({"S", "CM", "WD", "S+CM", "CM+WD", "S+WD",
                             "S+CM+WD"}))
      ->capture_default_str();
  train->add_option("--test-fraction", o.test_fraction, "Held-out share per grade")
      ->capture_default_str();
  train->add_option("--seed", o.seed, "Split seed")->capture_default_str();
  add_digits(train);
  add_common(train);

  auto* score = app.add_subcommand("score", "Per-paragraph report for a document");
  score->add_option("--model", o.model, "Model file");
  score->add_option("--in", o.in, "Document; paragraphs split on blank lines");
  score->add_option("--parses", o.parses, "Bracketed trees, one per sentence");
  add_resources(score);
  add_digits(score);
  add_out(score);
  add_common(score);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-grade error of a model");
  evaluate_cmd->add_option("--model", o.model, "Model file");
  evaluate_cmd->add_option("--corpus", o.corpus, "Graded corpus (JSONL)");
  add_resources(evaluate_cmd);
  add_digits(evaluate_cmd);
  add_out(evaluate_cmd);
  add_common(evaluate_cmd);

  auto* select = app.add_subcommand("select", "Correlation-based feature selection");
  select->add_option("--corpus", o.corpus,
                     "Graded corpus (JSONL) or a correlation table");
  select->add_option("--correlations", o.correlations, "Correlation table (TSV)");
  add_resources(select);
  add_selection(select);
  add_out(select);
  add_common(select);

  auto* compare = app.add_subcommand("compare", "Model against classic formulas");
  compare->add_option("--model", o.model, "Model file");
  compare->add_option("--corpus", o.corpus, "Graded test corpus (JSONL)");
  compare->add_option("--easywords", o.easywords, "Easy-word list for Dale-Chall");
  compare->add_option("--format", o.format, "text or tsv")
      ->check(CLI::IsMember({"text", "tsv"}))
      ->capture_default_str();
  add_resources(compare);
  add_digits(compare);
  add_out(compare);
  add_common(compare);

  auto* summarize = app.add_subcommand("summarize", "Words and sentences per grade");
  summarize->add_option("--corpus", o.corpus, "Graded corpus (JSONL)");
  add_digits(summarize);
  add_out(summarize);
  add_common(summarize);

  CLI::App* active = nullptr;
  try {
    app.parse(argc, argv);
    active = app.get_subcommands().front();
    if (!o.config.empty()) detail::apply_config(*active, o.config);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return e.get_exit_code() == 0 ? code : 2;
  } catch (const std::exception& e) {
    err << "lxper: error: " << e.what() << '\n';
    return 2;
  }

  try {
    const std::string name = active->get_name();
    if (name == "train") detail::cmd_train(o, out, err);
    else if (name == "score") detail::cmd_score(o, out, err);
    else if (name == "evaluate") detail::cmd_evaluate(o, out, err);
    else if (name == "select") detail::cmd_select(o, out, err);
    else if (name == "compare") detail::cmd_compare(o, out, err);
    else detail::cmd_summarize(o, out, err);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "lxper: error: " << msg << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lxper::cli
