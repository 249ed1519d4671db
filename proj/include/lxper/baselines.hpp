#pragma once

// Classic readability formulas and a harness that lines them up against a
// trained grade model on a labelled test set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lxper/corpus.hpp"
#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/model.hpp"
#include "lxper/textproc.hpp"
#include "lxper/util.hpp"

namespace lxper {

struct TextCounts {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t syllables = 0;
  std::size_t letters = 0;
};

inline TextCounts count_text(const AnalyzedText& text) {
  TextCounts c;
  c.sentences = text.sentence_count();
  c.words = text.word_count;
  for (int s : text.syllable_counts) c.syllables += static_cast<std::size_t>(s);
  for (const auto& sentence : text.sentences) {
    for (const auto& tok : sentence.tokens) {
      if (tok.kind == TokenKind::word) {
        c.letters += static_cast<std::size_t>(tok.letter_count);
      }
    }
  }
  return c;
}

// Grade level: 0.39 (words/sentences) + 11.8 (syllables/words) - 15.59.
inline double flesch_kincaid(double words, double sentences, double syllables) {
  if (words <= 0 || sentences <= 0) {
    throw Error("Flesch-Kincaid needs at least one sentence and one word");
  }
  return 0.39 * (words / sentences) + 11.8 * (syllables / words) - 15.59;
}

inline double flesch_kincaid(const AnalyzedText& text) {
  const TextCounts c = count_text(text);
  return flesch_kincaid(static_cast<double>(c.words),
                        static_cast<double>(c.sentences),
                        static_cast<double>(c.syllables));
}

// 0.0588 L - 0.296 S - 15.8; L letters and S sentences per 100 words.
inline double coleman_liau(double words, double letters, double sentences) {
  if (words <= 0) throw Error("Coleman-Liau needs at least one word");
  const double l = letters / words * 100.0;
  const double s = sentences / words * 100.0;
  return 0.0588 * l - 0.296 * s - 15.8;
}

inline double coleman_liau(const AnalyzedText& text) {
  const TextCounts c = count_text(text);
  return coleman_liau(static_cast<double>(c.words),
                      static_cast<double>(c.letters),
                      static_cast<double>(c.sentences));
}

// Raw score 0.1579 PDW + 0.0496 ASL, plus 3.6365 when PDW > 5, where PDW is
// the percentage of words not on the easy list.
inline double dale_chall(double percent_difficult, double words_per_sentence) {
  double score = 0.1579 * percent_difficult + 0.0496 * words_per_sentence;
  if (percent_difficult > 5.0) score += 3.6365;
  return score;
}

inline double dale_chall(const AnalyzedText& text, const EasyWordList& easy) {
  if (easy.empty()) throw Error("Dale-Chall needs a non-empty easy-word list");
  if (text.word_count == 0 || text.sentences.empty()) {
    throw Error("Dale-Chall needs at least one sentence and one word");
  }
  std::size_t difficult = 0;
  for (const auto& sentence : text.sentences) {
    for (const auto& tok : sentence.tokens) {
      if (tok.kind == TokenKind::word && !easy.contains(tok.lower)) {
        ++difficult;
      }
    }
  }
  const auto words = static_cast<double>(text.word_count);
  return dale_chall(100.0 * static_cast<double>(difficult) / words,
                    words / static_cast<double>(text.sentence_count()));
}

// ---------------------------------------------------------------------------
// Comparison harness

struct ComparisonInput {
  double grade = 0.0;
  AnalyzedText text;
  FeatureVector features;
};

struct BaselineScore {
  std::string model;
  double value = 0.0;
};

/// A named scorer; additional scale-specific tools plug in here.
struct Scorer {
  std::string name;
  std::function<double(const ComparisonInput&)> score;
  std::string footnote;
};

struct ComparisonRow {
  std::string model;
  std::map<double, std::pair<double, std::size_t>> by_grade;  // mean, count
  double avg_error = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
  std::string footnote;
};

struct ComparisonTable {
  std::set<double> grades;
  std::vector<ComparisonRow> rows;

  std::string to_text(int digits = 3) const;
  std::string to_tsv() const;
};

inline std::vector<Scorer> default_scorers(const RegressionModel& model,
                                           const EasyWordList& easy) {
  return {
      {"flesch_kincaid",
       [](const ComparisonInput& in) { return flesch_kincaid(in.text); },
       ""},
      {"coleman_liau",
       [](const ComparisonInput& in) { return coleman_liau(in.text); }, ""},
      {"dale_chall",
       [&easy](const ComparisonInput& in) { return dale_chall(in.text, easy); },
       "dale_chall is a raw score on its own scale, not a grade level"},
      {"lxper",
       [&model](const ComparisonInput& in) { return predict(model, in.features); },
       ""},
  };
}

/// Scores every text with every scorer. A scorer failing on a text skips
/// that text for that row only.
inline ComparisonTable compare_models(std::span<const ComparisonInput> test,
                                      const std::vector<Scorer>& scorers) {
  if (test.empty()) throw Error("comparison needs a non-empty test set");
  ComparisonTable table;
  for (const auto& in : test) table.grades.insert(in.grade);
  for (const auto& scorer : scorers) {
    ComparisonRow row;
    row.model = scorer.name;
    row.footnote = scorer.footnote;
    std::map<double, std::vector<double>> values;
    std::vector<double> errors;
    for (const auto& in : test) {
      double v = 0.0;
      try {
        v = scorer.score(in);
      } catch (const Error&) {
        ++row.skipped;
        continue;
      }
      if (!std::isfinite(v)) {
        ++row.skipped;
        continue;
      }
      values[in.grade].push_back(v);
      errors.push_back(std::abs(v - in.grade));
    }
    row.scored = errors.size();
    if (!errors.empty()) row.avg_error = detail::order_free_mean(errors);
    for (auto& [grade, v] : values) {
      row.by_grade[grade] = {detail::order_free_mean(v), v.size()};
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline ComparisonTable compare_models(std::span<const ComparisonInput> test,
                                      const RegressionModel& model,
                                      const EasyWordList& easy) {
  return compare_models(test, default_scorers(model, easy));
}

inline std::string ComparisonTable::to_text(int digits) const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Model"};
  for (double g : grades) header.push_back("Gr " + util::format_grade(g));
  header.push_back("AvgEr*");
  header.push_back("Skipped");
  cells.push_back(header);
  std::vector<std::string> notes;
  for (const auto& row : rows) {
    std::vector<std::string> line = {row.model};
    if (!row.footnote.empty()) {
      line[0] += "+";
      notes.push_back("+ " + row.footnote);
    }
    for (double g : grades) {
      auto it = row.by_grade.find(g);
      line.push_back(it == row.by_grade.end()
                         ? "-"
                         : util::format_fixed(it->second.first, digits));
    }
    line.push_back(row.scored ? util::format_fixed(row.avg_error, digits) : "-");
    line.push_back(std::to_string(row.skipped));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      width[i] = std::max(width[i], line[i].size());
    }
  }
  std::string out;
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out += "  ";
      const std::size_t pad = width[i] - line[i].size();
      if (i == 0) {
        out += line[i] + std::string(pad, ' ');
      } else {
        out += std::string(pad, ' ') + line[i];
      }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  out += "* Average Error: mean |score - grade| over scored texts\n";
  for (const auto& n : notes) out += n + '\n';
  return out;
}

inline std::string ComparisonTable::to_tsv() const {
  std::string out = "model";
  for (double g : grades) out += "\tgr_" + util::format_grade(g);
  out += "\tavg_error\tscored\tskipped\n";
  for (const auto& row : rows) {
    out += row.model;
    for (double g : grades) {
      auto it = row.by_grade.find(g);
      out += '\t';
      out += it == row.by_grade.end() ? std::string("nan")
                                      : util::format_double(it->second.first);
    }
    out += '\t' + (row.scored ? util::format_double(row.avg_error) : "nan");
    out += '\t' + std::to_string(row.scored) + '\t' +
           std::to_string(row.skipped) + '\n';
  }
  return out;
}

}  // namespace lxper
