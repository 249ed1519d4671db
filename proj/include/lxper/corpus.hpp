#pragma once

// Graded text corpus, graded word list and easy-word list: in-memory types,
// their file formats, corpus summaries and stratified splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lxper/error.hpp"
#include "lxper/textproc.hpp"
#include "lxper/util.hpp"

namespace lxper {

inline constexpr double kMinGrade = 7.0;
inline constexpr double kMaxGrade = 12.5;

enum class TextSource { exam, textbook, mock_test, other };

inline std::string_view to_string(TextSource s) {
  switch (s) {
    case TextSource::exam: return "exam";
    case TextSource::textbook: return "textbook";
    case TextSource::mock_test: return "mock_test";
    case TextSource::other: return "other";
  }
  return "other";
}

inline TextSource parse_text_source(std::string_view s) {
  if (s == "exam") return TextSource::exam;
  if (s == "textbook") return TextSource::textbook;
  if (s == "mock_test") return TextSource::mock_test;
  if (s == "other") return TextSource::other;
  throw Error("unknown source '" + std::string(s) + "'");
}

struct GradedText {
  std::string id;
  double grade = kMinGrade;
  TextSource source = TextSource::other;
  std::string text;

  bool operator==(const GradedText&) const = default;
};

inline void validate(const GradedText& t) {
  if (t.id.empty()) throw Error("text id is empty");
  if (!(t.grade >= kMinGrade && t.grade <= kMaxGrade)) {
    throw Error("text '" + t.id + "': grade " + util::format_double(t.grade) +
                " outside [7, 12.5]");
  }
  if (util::trim(t.text).empty()) throw Error("text '" + t.id + "' is empty");
}

class GradedTextCorpus {
 public:
  GradedTextCorpus() = default;

  /// Validates every text and id uniqueness.
  explicit GradedTextCorpus(std::vector<GradedText> texts)
      : texts_(std::move(texts)) {
    std::set<std::string, std::less<>> ids;
    for (const auto& t : texts_) {
      validate(t);
      if (!ids.insert(t.id).second) {
        throw Error("duplicate text id '" + t.id + "'");
      }
      ++counts_by_grade_[t.grade];
    }
  }

  const std::vector<GradedText>& texts() const { return texts_; }
  const std::map<double, std::size_t>& counts_by_grade() const {
    return counts_by_grade_;
  }
  std::size_t size() const { return texts_.size(); }
  bool empty() const { return texts_.empty(); }

  bool operator==(const GradedTextCorpus&) const = default;

 private:
  std::vector<GradedText> texts_;
  std::map<double, std::size_t> counts_by_grade_;
};

// One JSON object per line: {"grade":10,"id":"t1","source":"exam","text":"..."}
// JSON string escaping carries embedded newlines.
inline std::string serialize_record(const GradedText& t) {
  nlohmann::json j;
  j["id"] = t.id;
  j["grade"] = t.grade;
  j["source"] = std::string(to_string(t.source));
  j["text"] = t.text;
  return j.dump();
}

inline std::string serialize_corpus(const GradedTextCorpus& corpus) {
  std::string out;
  for (const auto& t : corpus.texts()) {
    out += serialize_record(t);
    out += '\n';
  }
  return out;
}

inline void save_text_corpus(const GradedTextCorpus& corpus,
                             const std::string& path) {
  util::write_file(path, serialize_corpus(corpus));
}

inline GradedText parse_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw Error("record is not an object");
  for (const char* key : {"id", "grade", "source", "text"}) {
    if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  }
  if (!j["id"].is_string() || !j["source"].is_string() ||
      !j["text"].is_string() || !j["grade"].is_number()) {
    throw Error("field has the wrong type");
  }
  GradedText t;
  t.id = j["id"].get<std::string>();
  t.grade = j["grade"].get<double>();
  t.source = parse_text_source(j["source"].get<std::string>());
  t.text = j["text"].get<std::string>();
  validate(t);
  return t;
}

inline GradedTextCorpus parse_text_corpus(std::string_view content,
                                          const std::string& name = "corpus") {
  std::vector<GradedText> texts;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  for (auto line : util::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    GradedText t;
    try {
      t = parse_record(line);
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (!ids.insert(t.id).second) {
      throw Error(where + ": duplicate text id '" + t.id + "'");
    }
    texts.push_back(std::move(t));
  }
  return GradedTextCorpus(std::move(texts));
}

inline GradedTextCorpus load_text_corpus(const std::string& path) {
  return parse_text_corpus(util::read_file(path), path);
}

// ---------------------------------------------------------------------------

enum class WordLevel { A, B, C, D, E, F };

inline constexpr std::array<WordLevel, 6> kAllLevels = {
    WordLevel::A, WordLevel::B, WordLevel::C,
    WordLevel::D, WordLevel::E, WordLevel::F};

inline char level_symbol(WordLevel l) {
  return static_cast<char>('A' + static_cast<int>(l));
}

class GradedWordList {
 public:
  /// Assigns a level, removing any earlier entry for the word. Returns true
  /// when the word was already present (as a level or unclassified).
  bool set_level(std::string_view word, WordLevel level) {
    const std::string key = normalize(word);
    const bool existed = unclassified_.erase(key) > 0 || entries_.count(key);
    entries_[key] = level;
    return existed;
  }

  bool set_unclassified(std::string_view word) {
    const std::string key = normalize(word);
    const bool existed = entries_.erase(key) > 0 || unclassified_.count(key);
    unclassified_.insert(key);
    return existed;
  }

  std::optional<WordLevel> level_of(std::string_view lower_word) const {
    auto it = entries_.find(lower_word);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, WordLevel, std::less<>>& entries() const {
    return entries_;
  }
  const std::set<std::string, std::less<>>& unclassified() const {
    return unclassified_;
  }
  bool empty() const { return entries_.empty() && unclassified_.empty(); }

  bool operator==(const GradedWordList&) const = default;

 private:
  static std::string normalize(std::string_view word) {
    const auto w = util::trim(word);
    if (w.empty()) throw Error("empty word");
    for (char c : w) {
      if (util::is_space(c)) {
        throw Error("word '" + std::string(w) + "' contains whitespace");
      }
    }
    return util::to_lower(w);
  }

  std::map<std::string, WordLevel, std::less<>> entries_;
  std::set<std::string, std::less<>> unclassified_;
};

/// `word<TAB>level` lines, level one of A-F or U (unclassified). A later
/// line for the same word wins; each override appends a message to
/// `warnings` when given.
inline GradedWordList parse_word_list(std::string_view content,
                                      const std::string& name = "wordlist",
                                      std::vector<std::string>* warnings =
                                          nullptr) {
  GradedWordList list;
  std::size_t line_no = 0;
  for (auto line : util::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (util::trim(line).empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    const auto parts = util::split(line, '\t');
    if (parts.size() != 2) throw Error(where + ": expected word<TAB>level");
    if (util::trim(parts[0]).empty()) throw Error(where + ": empty word");
    const auto symbol = util::trim(parts[1]);
    bool existed = false;
    try {
      if (symbol.size() == 1 && symbol[0] >= 'A' && symbol[0] <= 'F') {
        existed = list.set_level(parts[0],
                                 static_cast<WordLevel>(symbol[0] - 'A'));
      } else if (symbol == "U") {
        existed = list.set_unclassified(parts[0]);
      } else {
        throw Error("unknown level '" + std::string(symbol) + "'");
      }
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
    if (existed && warnings) {
      warnings->push_back(where + ": '" + util::to_lower(util::trim(parts[0])) +
                          "' listed again; later entry wins");
    }
  }
  return list;
}

inline GradedWordList load_word_list(const std::string& path,
                                     std::vector<std::string>* warnings =
                                         nullptr) {
  return parse_word_list(util::read_file(path), path, warnings);
}

inline std::string serialize_word_list(const GradedWordList& list) {
  std::string out;
  for (const auto& [word, level] : list.entries()) {
    out += word;
    out += '\t';
    out += level_symbol(level);
    out += '\n';
  }
  for (const auto& word : list.unclassified()) {
    out += word;
    out += "\tU\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

struct EasyWordList {
  std::set<std::string, std::less<>> words;

  bool contains(std::string_view lower_word) const {
    return words.find(lower_word) != words.end();
  }
  bool empty() const { return words.empty(); }
};

inline EasyWordList parse_easy_words(std::string_view content) {
  EasyWordList list;
  for (auto line : util::split(content, '\n')) {
    const auto w = util::trim(line);
    if (!w.empty()) list.words.insert(util::to_lower(w));
  }
  return list;
}

inline EasyWordList load_easy_words(const std::string& path) {
  return parse_easy_words(util::read_file(path));
}

// ---------------------------------------------------------------------------

struct SummaryRow {
  std::size_t texts = 0;
  std::size_t words = 0;
  std::size_t sentences = 0;
  double words_per_text = 0.0;      // aWPT
  double sentences_per_text = 0.0;  // aSPT
  double words_per_sentence = 0.0;  // aWPS, from pooled totals

  bool operator==(const SummaryRow&) const = default;
};

struct CorpusSummary {
  std::map<double, SummaryRow> by_grade;
  SummaryRow overall;

  /// Rows aWPT / aSPT / aWPS, one column per grade plus "All".
  std::string to_table(int digits = 3) const {
    std::vector<std::string> header = {"Description"};
    for (const auto& [grade, row] : by_grade) {
      header.push_back("Gr " + util::format_grade(grade));
    }
    header.push_back("All");
    auto line = [&](const std::string& name, auto field) {
      std::string s = name;
      for (const auto& [grade, row] : by_grade) {
        s += '\t';
        s += util::format_fixed(row.*field, digits);
      }
      s += '\t';
      s += util::format_fixed(overall.*field, digits);
      return s + '\n';
    };
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += '\t';
      out += header[i];
    }
    out += '\n';
    out += line("aWPT", &SummaryRow::words_per_text);
    out += line("aSPT", &SummaryRow::sentences_per_text);
    out += line("aWPS", &SummaryRow::words_per_sentence);
    return out;
  }
};

namespace detail {
inline void finish_row(SummaryRow& row) {
  row.words_per_text = static_cast<double>(row.words) / row.texts;
  row.sentences_per_text = static_cast<double>(row.sentences) / row.texts;
  row.words_per_sentence = static_cast<double>(row.words) / row.sentences;
}
}  // namespace detail

/// `analyze` maps a GradedText to its AnalyzedText.
template <class Analyzer>
CorpusSummary summarize_corpus(const GradedTextCorpus& corpus,
                               Analyzer&& analyze) {
  if (corpus.empty()) throw Error("cannot summarize an empty corpus");
  CorpusSummary summary;
  for (const auto& text : corpus.texts()) {
    const AnalyzedText analyzed = analyze(text);
    for (SummaryRow* row : {&summary.by_grade[text.grade], &summary.overall}) {
      ++row->texts;
      row->words += analyzed.word_count;
      row->sentences += analyzed.sentence_count();
    }
  }
  for (auto& [grade, row] : summary.by_grade) detail::finish_row(row);
  detail::finish_row(summary.overall);
  return summary;
}

inline CorpusSummary summarize_corpus(const GradedTextCorpus& corpus) {
  return summarize_corpus(
      corpus, [](const GradedText& t) { return annotate(t.text); });
}

// ---------------------------------------------------------------------------

struct CorpusSplit {
  GradedTextCorpus train;
  GradedTextCorpus test;
};

/// Stratified by grade: each bucket of n texts contributes
/// clamp(round(n * test_fraction), 1, n - 1) texts to the test half, chosen
/// by a seeded shuffle. Both halves keep the corpus order.
inline CorpusSplit split_corpus(const GradedTextCorpus& corpus,
                                double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test fraction must lie strictly between 0 and 1");
  }
  std::map<double, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    buckets[corpus.texts()[i].grade].push_back(i);
  }
  std::vector<bool> in_test(corpus.size(), false);
  util::SplitMix64 rng(seed);
  for (auto& [grade, idx] : buckets) {
    if (idx.size() < 2) {
      throw Error("grade " + util::format_grade(grade) +
                  " has a single text; merge it with a neighbouring grade or "
                  "exclude it before splitting");
    }
    for (std::size_t k = idx.size(); k > 1; --k) {
      std::swap(idx[k - 1], idx[rng.below(k)]);
    }
    const auto n = static_cast<double>(idx.size());
    auto take = static_cast<std::size_t>(std::llround(n * test_fraction));
    take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    for (std::size_t k = 0; k < take; ++k) in_test[idx[k]] = true;
  }
  std::vector<GradedText> train, test;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (in_test[i] ? test : train).push_back(corpus.texts()[i]);
  }
  return {GradedTextCorpus(std::move(train)), GradedTextCorpus(std::move(test))};
}

}  // namespace lxper
