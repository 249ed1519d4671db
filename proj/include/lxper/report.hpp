#pragma once

// Per-paragraph scoring of a document and its plain-text report:
//
//   LXPER Index
//   paragraph1:<TAB>11.314610668825809
//   ...
//   average:<TAB>11.680897413318661
//   standard dev.:<TAB>0.804484551560757

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/model.hpp"
#include "lxper/textproc.hpp"
#include "lxper/util.hpp"

namespace lxper {

/// Blank-line separated blocks, trimmed, in document order.
inline std::vector<std::string> split_paragraphs(std::string_view document) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    const auto t = util::trim(current);
    if (!t.empty()) out.emplace_back(t);
    current.clear();
  };
  for (auto line : util::split(document, '\n')) {
    if (util::trim(line).empty()) {
      flush();
    } else {
      current += line;
      current += '\n';
    }
  }
  flush();
  return out;
}

struct ParagraphScore {
  std::size_t index = 0;  // 1-based
  std::optional<double> score;
  std::string error;
};

struct DocumentReport {
  std::vector<ParagraphScore> paragraphs;
  double average = 0.0;
  double standard_dev = 0.0;  // population
  std::size_t error_count = 0;
};

/// Mean and population standard deviation of the scored paragraphs.
inline void finalize(DocumentReport& report) {
  std::vector<double> scores;
  report.error_count = 0;
  for (const auto& p : report.paragraphs) {
    if (p.score) {
      scores.push_back(*p.score);
    } else {
      ++report.error_count;
    }
  }
  if (scores.empty()) throw Error("no paragraph could be scored");
  double sum = 0.0;
  for (double s : scores) sum += s;
  report.average = sum / static_cast<double>(scores.size());
  double ss = 0.0;
  for (double s : scores) ss += (s - report.average) * (s - report.average);
  report.standard_dev = std::sqrt(ss / static_cast<double>(scores.size()));
}

/// Scores each paragraph independently. With external parses, trees are
/// consumed in sentence order across the whole document. A paragraph that
/// fails analysis becomes an error row.
inline DocumentReport score_document(const RegressionModel& model,
                                     std::string_view document,
                                     const ExtractionResources& resources,
                                     const ExternalParses* parses = nullptr) {
  const auto paragraphs = split_paragraphs(document);
  if (paragraphs.empty()) throw Error("document has no paragraphs");
  DocumentReport report;
  std::size_t next_tree = 0;
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    ParagraphScore row;
    row.index = i + 1;
    try {
      ParseSource source = HeuristicParses{};
      if (parses) {
        const std::size_t need = analysis_sentences(paragraphs[i]).size();
        if (next_tree + need > parses->trees.size()) {
          throw Error("parse file ran out of trees");
        }
        ExternalParses slice;
        slice.trees.assign(parses->trees.begin() + static_cast<long>(next_tree),
                           parses->trees.begin() +
                               static_cast<long>(next_tree + need));
        next_tree += need;
        source = std::move(slice);
      }
      const AnalyzedText analyzed = annotate(paragraphs[i], source);
      row.score = predict(model, extract_all(analyzed, resources));
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.paragraphs.push_back(std::move(row));
  }
  finalize(report);
  return report;
}

/// `digits` rounds scores to fixed decimals; the default prints the
/// shortest text that reads back as the same double.
inline std::string format_document_report(const DocumentReport& report,
                                          std::optional<int> digits =
                                              std::nullopt) {
  auto num = [&](double v) {
    return digits ? util::format_fixed(v, *digits) : util::format_double(v);
  };
  std::string out = "LXPER Index\n";
  for (const auto& p : report.paragraphs) {
    out += "paragraph" + std::to_string(p.index) + ":\t";
    out += p.score ? num(*p.score) : "error: " + p.error;
    out += '\n';
  }
  out += "average:\t" + num(report.average) + '\n';
  out += "standard dev.:\t" + num(report.standard_dev) + '\n';
  return out;
}

inline DocumentReport parse_document_report(std::string_view text) {
  DocumentReport report;
  bool have_avg = false, have_sd = false;
  for (auto line : util::split(text, '\n')) {
    if (util::trim(line).empty() || line == "LXPER Index") continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error("report line without a value: " + std::string(line));
    }
    const auto key = line.substr(0, tab);
    const auto value = line.substr(tab + 1);
    if (key == "average:") {
      report.average = util::parse_double(value, "average");
      have_avg = true;
    } else if (key == "standard dev.:") {
      report.standard_dev = util::parse_double(value, "standard dev.");
      have_sd = true;
    } else if (key.substr(0, 9) == "paragraph" && key.back() == ':') {
      ParagraphScore p;
      p.index = static_cast<std::size_t>(util::parse_double(
          key.substr(9, key.size() - 10), "paragraph index"));
      if (value.substr(0, 6) == "error:") {
        p.error = std::string(util::trim(value.substr(6)));
        ++report.error_count;
      } else {
        p.score = util::parse_double(value, "paragraph score");
      }
      report.paragraphs.push_back(std::move(p));
    } else {
      throw Error("unexpected report line: " + std::string(line));
    }
  }
  if (!have_avg || !have_sd) throw Error("report lacks average or standard dev.");
  return report;
}

}  // namespace lxper
