#pragma once

// The 29 readability features in three families: simple (surface counts and
// constituency counts), cognitively motivated (entities and lexical chains)
// and word difficulty (curriculum word-level proportions).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lxper/corpus.hpp"
#include "lxper/error.hpp"
#include "lxper/textproc.hpp"
#include "lxper/util.hpp"

namespace lxper {

// Canonical order; the underlying value is the index into FeatureVector.
enum class FeatureCode : std::size_t {
  aWPS, aSPW, aNP, aNN, aVP, aAdj, aSBr, aPP, M3S,
  nNP, nNN, nVP, nAdj, nSBr, nPP,
  nUE, aEM, aUE, nLC, aLCw, aLCn,
  aCw, nCw, aDw, nDw, aEw, nEw, aFw, nFw,
};

inline constexpr std::size_t kFeatureCount = 29;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "aWPS", "aSPW", "aNP",  "aNN",  "aVP",  "aAdj", "aSBr", "aPP",
    "M3S",  "nNP",  "nNN",  "nVP",  "nAdj", "nSBr", "nPP",  "nUE",
    "aEM",  "aUE",  "nLC",  "aLCw", "aLCn", "aCw",  "nCw",  "aDw",
    "nDw",  "aEw",  "nEw",  "aFw",  "nFw"};

inline constexpr std::size_t index_of(FeatureCode code) {
  return static_cast<std::size_t>(code);
}

inline constexpr FeatureCode code_at(std::size_t index) {
  return static_cast<FeatureCode>(index);
}

inline std::string_view name_of(FeatureCode code) {
  return kFeatureNames[index_of(code)];
}

inline std::optional<FeatureCode> find_feature_code(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (kFeatureNames[i] == name) return code_at(i);
  }
  return std::nullopt;
}

inline FeatureCode parse_feature_code(std::string_view name) {
  if (auto code = find_feature_code(name)) return *code;
  throw Error("unknown feature code '" + std::string(name) + "'");
}

inline std::array<FeatureCode, kFeatureCount> all_feature_codes() {
  std::array<FeatureCode, kFeatureCount> out{};
  for (std::size_t i = 0; i < kFeatureCount; ++i) out[i] = code_at(i);
  return out;
}

enum class FeatureFamily { simple, cognitive, word_difficulty };

inline FeatureFamily family_of(FeatureCode code) {
  const auto i = index_of(code);
  if (i < index_of(FeatureCode::nUE)) return FeatureFamily::simple;
  if (i < index_of(FeatureCode::aCw)) return FeatureFamily::cognitive;
  return FeatureFamily::word_difficulty;
}

// A subset of features, as produced by one family extractor.
struct PartialFeatures {
  std::vector<std::pair<FeatureCode, double>> values;
  std::vector<std::string> flags;

  void set(FeatureCode code, double value) { values.emplace_back(code, value); }

  std::optional<double> find(FeatureCode code) const {
    for (const auto& [c, v] : values) {
      if (c == code) return v;
    }
    return std::nullopt;
  }

  double at(FeatureCode code) const {
    if (auto v = find(code)) return *v;
    throw Error("feature " + std::string(name_of(code)) + " not present");
  }
};

class FeatureVector {
 public:
  FeatureVector() { values_.fill(0.0); }

  /// Merges family results; every code must be supplied exactly once.
  static FeatureVector assemble(std::initializer_list<const PartialFeatures*> parts) {
    FeatureVector fv;
    std::array<bool, kFeatureCount> seen{};
    for (const PartialFeatures* part : parts) {
      for (const auto& [code, value] : part->values) {
        if (seen[index_of(code)]) {
          throw Error("feature " + std::string(name_of(code)) +
                      " supplied twice");
        }
        seen[index_of(code)] = true;
        fv.values_[index_of(code)] = value;
      }
      fv.flags_.insert(fv.flags_.end(), part->flags.begin(), part->flags.end());
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (!seen[i]) {
        throw Error("feature " + std::string(kFeatureNames[i]) + " missing");
      }
    }
    return fv;
  }

  static FeatureVector from_values(const std::array<double, kFeatureCount>& v) {
    FeatureVector fv;
    fv.values_ = v;
    return fv;
  }

  double operator[](FeatureCode code) const { return values_[index_of(code)]; }
  double& operator[](FeatureCode code) { return values_[index_of(code)]; }
  const std::array<double, kFeatureCount>& values() const { return values_; }
  const std::vector<std::string>& flags() const { return flags_; }

  bool operator==(const FeatureVector&) const = default;

 private:
  std::array<double, kFeatureCount> values_;
  std::vector<std::string> flags_;
};

// ---------------------------------------------------------------------------
// Simple features

/// Label without function tags: "NP-SBJ" -> "NP". Bracket tags such as
/// "-LRB-" are returned unchanged.
inline std::string_view base_label(std::string_view label) {
  if (label.empty() || label.front() == '-') return label;
  const auto cut = label.find_first_of("-=");
  return cut == std::string_view::npos ? label : label.substr(0, cut);
}

struct TreeCounts {
  std::size_t noun_phrases = 0;
  std::size_t verb_phrases = 0;
  std::size_t prepositional_phrases = 0;
  std::size_t subordinate_clauses = 0;
  std::size_t proper_nouns = 0;
  std::size_t adjectives = 0;

  bool operator==(const TreeCounts&) const = default;
};

inline TreeCounts count_tree(const ParseTree& tree) {
  TreeCounts c;
  visit_preorder(tree, [&c](const ParseTree& node) {
    const auto label = base_label(node.label);
    if (node.is_leaf()) {
      if (label == "NNP" || label == "NNPS") ++c.proper_nouns;
      if (label == "JJ" || label == "JJR" || label == "JJS") ++c.adjectives;
      return;
    }
    if (label == "NP") ++c.noun_phrases;
    if (label == "VP") ++c.verb_phrases;
    if (label == "PP") ++c.prepositional_phrases;
    if (label == "SBAR") ++c.subordinate_clauses;
  });
  return c;
}

inline TreeCounts count_trees(const AnalyzedText& text) {
  TreeCounts total;
  for (const auto& s : text.sentences) {
    const TreeCounts c = count_tree(s.tree);
    total.noun_phrases += c.noun_phrases;
    total.verb_phrases += c.verb_phrases;
    total.prepositional_phrases += c.prepositional_phrases;
    total.subordinate_clauses += c.subordinate_clauses;
    total.proper_nouns += c.proper_nouns;
    total.adjectives += c.adjectives;
  }
  return total;
}

namespace detail {
inline void require_analyzed(const AnalyzedText& text) {
  if (text.sentences.empty() || text.word_count == 0) {
    throw Error("text has no sentences or no words");
  }
  for (std::size_t i = 0; i < text.sentences.size(); ++i) {
    const auto& tree = text.sentences[i].tree;
    if (tree.label.empty() && tree.children.empty() && tree.leaf_text.empty()) {
      throw Error("sentence " + std::to_string(i + 1) + " has no parse tree");
    }
  }
}
}  // namespace detail

/// aWPS, aSPW, M3S and the six constituency counts as document totals (n-)
/// and per-sentence means (a-).
inline PartialFeatures simple_features(const AnalyzedText& text) {
  detail::require_analyzed(text);
  const auto sentences = static_cast<double>(text.sentence_count());
  const auto words = static_cast<double>(text.word_count);
  long syllables = 0;
  long polysyllabic = 0;
  for (int s : text.syllable_counts) {
    syllables += s;
    if (s >= 3) ++polysyllabic;
  }
  const TreeCounts c = count_trees(text);

  PartialFeatures out;
  using F = FeatureCode;
  out.set(F::aWPS, words / sentences);
  out.set(F::aSPW, static_cast<double>(syllables) / words);
  out.set(F::aNP, static_cast<double>(c.noun_phrases) / sentences);
  out.set(F::aNN, static_cast<double>(c.proper_nouns) / sentences);
  out.set(F::aVP, static_cast<double>(c.verb_phrases) / sentences);
  out.set(F::aAdj, static_cast<double>(c.adjectives) / sentences);
  out.set(F::aSBr, static_cast<double>(c.subordinate_clauses) / sentences);
  out.set(F::aPP, static_cast<double>(c.prepositional_phrases) / sentences);
  out.set(F::M3S, static_cast<double>(polysyllabic) / words);
  out.set(F::nNP, static_cast<double>(c.noun_phrases));
  out.set(F::nNN, static_cast<double>(c.proper_nouns));
  out.set(F::nVP, static_cast<double>(c.verb_phrases));
  out.set(F::nAdj, static_cast<double>(c.adjectives));
  out.set(F::nSBr, static_cast<double>(c.subordinate_clauses));
  out.set(F::nPP, static_cast<double>(c.prepositional_phrases));
  return out;
}

// ---------------------------------------------------------------------------
// Entities

struct EntityIndex {
  std::set<std::string> entities;
  std::size_t mentions = 0;
  std::vector<std::size_t> per_sentence_unique;

  bool operator==(const EntityIndex&) const = default;
};

// Replaceable entity detector, e.g. for a NER-backed implementation.
using EntityStrategy = std::function<EntityIndex(const AnalyzedText&)>;

namespace detail {

// Rightmost noun preterminal directly under the NP; for an NP without one,
// the head of its first NP child.
inline const ParseTree* np_head(const ParseTree& np) {
  for (auto it = np.children.rbegin(); it != np.children.rend(); ++it) {
    if (it->is_leaf() && is_noun_tag(base_label(it->label))) return &*it;
  }
  for (const auto& child : np.children) {
    if (!child.is_leaf() && base_label(child.label) == "NP") {
      return np_head(child);
    }
  }
  return nullptr;
}

inline void collect_maximal_nps(const ParseTree& node,
                                std::vector<const ParseTree*>& out) {
  if (node.is_leaf()) return;
  if (base_label(node.label) == "NP") {
    out.push_back(&node);
    return;
  }
  for (const auto& child : node.children) collect_maximal_nps(child, out);
}

}  // namespace detail

/// A mention is a maximal NP whose head is a (proper) noun; the entity key
/// is the head's noun lemma.
inline EntityIndex build_entity_index(const AnalyzedText& text) {
  EntityIndex index;
  for (const auto& sentence : text.sentences) {
    std::vector<const ParseTree*> nps;
    detail::collect_maximal_nps(sentence.tree, nps);
    std::set<std::string> in_sentence;
    for (const ParseTree* np : nps) {
      const ParseTree* head = detail::np_head(*np);
      if (!head) continue;
      std::string key = noun_lemma(head->leaf_text, base_label(head->label));
      ++index.mentions;
      in_sentence.insert(key);
      index.entities.insert(std::move(key));
    }
    index.per_sentence_unique.push_back(in_sentence.size());
  }
  return index;
}

inline PartialFeatures entity_features(const EntityIndex& index,
                                       std::size_t sentence_count) {
  if (sentence_count == 0) throw Error("sentence count must be positive");
  const auto s = static_cast<double>(sentence_count);
  const auto unique = static_cast<double>(index.entities.size());
  PartialFeatures out;
  out.set(FeatureCode::nUE, unique);
  out.set(FeatureCode::aEM, static_cast<double>(index.mentions) / s);
  out.set(FeatureCode::aUE, unique / s);
  return out;
}

// ---------------------------------------------------------------------------
// Lexical chains

class RelationResource {
 public:
  RelationResource() = default;
  explicit RelationResource(std::string id) : id_(std::move(id)) {}

  void add_synonym_group(const std::vector<std::string>& lemmas) {
    std::set<std::string> group;
    for (const auto& l : lemmas) {
      const auto w = util::trim(l);
      if (!w.empty()) group.insert(util::to_lower(w));
    }
    if (group.size() < 2) return;
    const std::size_t gid = groups_.size();
    for (const auto& l : group) group_of_[l].insert(gid);
    groups_.push_back(std::move(group));
  }

  /// Rejects an edge that would close a cycle.
  void add_hypernym(std::string_view child, std::string_view parent) {
    const std::string c = util::to_lower(util::trim(child));
    const std::string p = util::to_lower(util::trim(parent));
    if (c.empty() || p.empty()) throw Error("empty lemma in hypernym edge");
    if (c == p || reaches(p, c)) {
      throw Error("hypernym edge " + c + " -> " + p + " creates a cycle");
    }
    parents_[c].insert(p);
  }

  bool related(std::string_view a, std::string_view b) const {
    if (a == b) return true;
    auto ga = group_of_.find(a);
    auto gb = group_of_.find(b);
    if (ga != group_of_.end() && gb != group_of_.end()) {
      for (std::size_t g : ga->second) {
        if (gb->second.count(g)) return true;
      }
    }
    return is_parent(a, b) || is_parent(b, a);
  }

  const std::string& id() const { return id_; }
  const std::vector<std::set<std::string>>& synonym_groups() const {
    return groups_;
  }
  const std::map<std::string, std::set<std::string>, std::less<>>& hypernyms()
      const {
    return parents_;
  }

 private:
  bool is_parent(std::string_view child, std::string_view parent) const {
    auto it = parents_.find(child);
    return it != parents_.end() && it->second.count(std::string(parent));
  }

  bool reaches(const std::string& from, const std::string& to) const {
    std::vector<std::string> stack = {from};
    std::set<std::string> seen;
    while (!stack.empty()) {
      std::string cur = std::move(stack.back());
      stack.pop_back();
      if (cur == to) return true;
      if (!seen.insert(cur).second) continue;
      auto it = parents_.find(cur);
      if (it == parents_.end()) continue;
      for (const auto& p : it->second) stack.push_back(p);
    }
    return false;
  }

  std::string id_ = "empty";
  std::vector<std::set<std::string>> groups_;
  std::map<std::string, std::set<std::size_t>, std::less<>> group_of_;
  std::map<std::string, std::set<std::string>, std::less<>> parents_;
};

/// Lines `syn:a,b,c` and `hyp:child<TAB>parent`; blank lines and lines
/// starting with '#' are ignored.
inline RelationResource parse_relations(std::string_view content,
                                        const std::string& id) {
  RelationResource res(id);
  std::size_t line_no = 0;
  for (auto line : util::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto t = util::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = id + ":" + std::to_string(line_no);
    try {
      if (t.substr(0, 4) == "syn:") {
        std::vector<std::string> lemmas;
        for (auto part : util::split(t.substr(4), ',')) {
          lemmas.emplace_back(util::trim(part));
        }
        res.add_synonym_group(lemmas);
      } else if (t.substr(0, 4) == "hyp:") {
        const auto parts = util::split(t.substr(4), '\t');
        if (parts.size() != 2) throw Error("expected hyp:child<TAB>parent");
        res.add_hypernym(parts[0], parts[1]);
      } else {
        throw Error("expected a syn: or hyp: line");
      }
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  return res;
}

inline RelationResource load_relations(const std::string& path) {
  return parse_relations(util::read_file(path), path);
}

struct ChainLink {
  std::size_t sentence = 0;
  std::string lemma;

  bool operator==(const ChainLink&) const = default;
};

struct LexicalChainSet {
  std::vector<std::vector<ChainLink>> chains;
  std::string resource_id;
};

/// Greedy pass over nouns in document order. Each occurrence joins the chain
/// whose last member is most recent and related to it (same lemma, shared
/// synonym group or a direct hypernym edge); otherwise it starts a new
/// candidate. Candidates that never reach two members are dropped.
inline LexicalChainSet build_lexical_chains(const AnalyzedText& text,
                                            const RelationResource& resource) {
  struct Candidate {
    std::vector<ChainLink> links;
    std::size_t last_position = 0;
  };
  std::vector<Candidate> candidates;
  std::size_t position = 0;
  for (std::size_t s = 0; s < text.noun_lemmas.size(); ++s) {
    for (const auto& lemma : text.noun_lemmas[s]) {
      Candidate* best = nullptr;
      for (auto& c : candidates) {
        if (best && c.last_position < best->last_position) continue;
        if (resource.related(c.links.back().lemma, lemma)) best = &c;
      }
      if (best) {
        best->links.push_back({s, lemma});
        best->last_position = position;
      } else {
        candidates.push_back({{{s, lemma}}, position});
      }
      ++position;
    }
  }
  LexicalChainSet out;
  out.resource_id = resource.id();
  for (auto& c : candidates) {
    if (c.links.size() >= 2) out.chains.push_back(std::move(c.links));
  }
  return out;
}

inline PartialFeatures lexical_chain_features(const LexicalChainSet& chains,
                                              std::size_t word_count,
                                              std::size_t np_count) {
  if (word_count == 0) throw Error("word count must be positive");
  const auto n = static_cast<double>(chains.chains.size());
  PartialFeatures out;
  out.set(FeatureCode::nLC, n);
  out.set(FeatureCode::aLCw, n / static_cast<double>(word_count));
  if (np_count == 0) {
    out.set(FeatureCode::aLCn, 0.0);
    if (n > 0) out.flags.push_back("aLCn: text has no noun phrases; set to 0");
  } else {
    out.set(FeatureCode::aLCn, n / static_cast<double>(np_count));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Word difficulty

/// Token-based counts of words at levels C-F and their share of all words.
inline PartialFeatures word_difficulty_features(const AnalyzedText& text,
                                                const GradedWordList& wordlist) {
  if (wordlist.empty()) throw Error("graded word list is empty");
  if (text.word_count == 0) throw Error("text has no words");
  std::array<std::size_t, 6> counts{};
  for (const auto& sentence : text.sentences) {
    for (const auto& tok : sentence.tokens) {
      if (tok.kind != TokenKind::word) continue;
      if (auto level = wordlist.level_of(tok.lower)) {
        ++counts[static_cast<std::size_t>(*level)];
      }
    }
  }
  const auto words = static_cast<double>(text.word_count);
  PartialFeatures out;
  using F = FeatureCode;
  const std::array<std::pair<F, F>, 4> pairs = {{{F::aCw, F::nCw},
                                                 {F::aDw, F::nDw},
                                                 {F::aEw, F::nEw},
                                                 {F::aFw, F::nFw}}};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto n = static_cast<double>(counts[i + 2]);  // C..F
    out.set(pairs[i].first, n / words);
    out.set(pairs[i].second, n);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ExtractionResources {
  const GradedWordList& wordlist;
  const RelationResource& relations;
  EntityStrategy entities = build_entity_index;
};

inline FeatureVector extract_all(const AnalyzedText& text,
                                 const ExtractionResources& res) {
  const PartialFeatures simple = simple_features(text);
  const PartialFeatures entity =
      entity_features(res.entities(text), text.sentence_count());
  const auto np_count =
      static_cast<std::size_t>(simple.at(FeatureCode::nNP));
  const PartialFeatures chains = lexical_chain_features(
      build_lexical_chains(text, res.relations), text.word_count, np_count);
  const PartialFeatures difficulty =
      word_difficulty_features(text, res.wordlist);
  return FeatureVector::assemble({&simple, &entity, &chains, &difficulty});
}

inline FeatureVector extract_all(const AnalyzedText& text,
                                 const GradedWordList& wordlist,
                                 const RelationResource& relations) {
  return extract_all(text, ExtractionResources{wordlist, relations});
}

}  // namespace lxper
