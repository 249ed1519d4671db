#pragma once

// Deterministic English preprocessing: sentence splitting, tokenization,
// syllable counting, bracketed constituency trees and a rule-based fallback
// chunker. Everything here is a pure function of its inputs.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "lxper/error.hpp"
#include "lxper/util.hpp"

namespace lxper {

enum class TokenKind { word, number, punctuation };

struct Token {
  std::string surface;
  std::string lower;
  TokenKind kind = TokenKind::word;
  int letter_count = 0;

  bool operator==(const Token&) const = default;
};

struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;
  std::string leaf_text;  // non-empty exactly when children is empty

  bool is_leaf() const { return children.empty(); }
  bool operator==(const ParseTree&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  ParseTree tree;

  bool operator==(const Sentence&) const = default;
};

struct AnalyzedText {
  std::vector<Sentence> sentences;
  std::size_t word_count = 0;
  std::vector<int> syllable_counts;  // one per word token, document order
  std::vector<std::vector<std::string>> noun_lemmas;  // per sentence

  std::size_t sentence_count() const { return sentences.size(); }
  bool operator==(const AnalyzedText&) const = default;
};

namespace detail {

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

inline std::vector<CodePoint> decode_utf8(std::string_view s) {
  std::vector<CodePoint> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b;
    if (b >= 0xF0 && b < 0xF8) {
      len = 4;
      cp = b & 0x07;
    } else if (b >= 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if (b >= 0xC0) {
      len = 2;
      cp = b & 0x1F;
    }
    if (i + len > s.size()) len = 1;  // truncated sequence: take the byte
    if (len > 1) {
      for (std::size_t k = 1; k < len; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
      }
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

inline bool is_ascii_alpha(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }

inline bool is_unicode_punct(char32_t c) {
  switch (c) {
    case 0x00A1: case 0x00AB: case 0x00BB: case 0x00BF:
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014:
    case 0x2015: case 0x2018: case 0x2019: case 0x201A: case 0x201C:
    case 0x201D: case 0x201E: case 0x2022: case 0x2026: case 0x2032:
    case 0x2033:
      return true;
    default:
      return false;
  }
}

inline bool is_punct(char32_t c) {
  if (c < 0x80) return !is_ascii_alpha(c) && !is_ascii_digit(c) && c > 0x20;
  return is_unicode_punct(c);
}

// Non-ASCII code points that are not known punctuation count as letters
// (accented Latin, other scripts).
inline bool is_letter(char32_t c) {
  if (c < 0x80) return is_ascii_alpha(c);
  return !is_unicode_punct(c) && c != 0x00A0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace detail {

inline constexpr std::array<std::string_view, 10> kAbbreviations = {
    "Mr.", "Mrs.", "Dr.", "Prof.", "St.", "vs.", "etc.", "e.g.", "i.e.",
    "U.S."};

inline bool is_abbreviation(std::string_view word) {
  // Opening quotes and brackets do not belong to the abbreviation.
  while (!word.empty() &&
         (word.front() == '"' || word.front() == '\'' || word.front() == '(' ||
          word.front() == '[')) {
    word.remove_prefix(1);
  }
  for (std::string_view abbr : kAbbreviations) {
    if (word == abbr || util::to_lower(word) == util::to_lower(abbr)) {
      return true;
    }
  }
  return false;
}

inline bool starts_with_bytes(std::string_view s, std::size_t at,
                              std::string_view prefix) {
  return s.substr(at, prefix.size()) == prefix;
}

// Closing quote/bracket that may follow a terminal mark; returns its byte
// length or 0.
inline std::size_t closer_length(std::string_view s, std::size_t at) {
  const char c = s[at];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_bytes(s, at, "\xE2\x80\x99") ||
      starts_with_bytes(s, at, "\xE2\x80\x9D")) {
    return 3;
  }
  return 0;
}

inline bool opens_sentence(std::string_view s, std::size_t at) {
  const char c = s[at];
  if (c >= 'A' && c <= 'Z') return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  return starts_with_bytes(s, at, "\xE2\x80\x9C") ||
         starts_with_bytes(s, at, "\xE2\x80\x98");
}

}  // namespace detail

/// Splits prose into sentences on `.`, `!` or `?` followed by whitespace and
/// a capital letter or opening quote. A lone period ending a word from the
/// abbreviation table (Mr., Dr., e.g., U.S., ...) never splits. Returned
/// sentences are whitespace-trimmed; no other characters are dropped.
inline std::vector<std::string> segment_sentences(std::string_view raw) {
  if (util::trim(raw).empty()) throw Error("cannot segment empty text");

  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n) {
    const char c = raw[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && (raw[j] == '.' || raw[j] == '!' || raw[j] == '?')) ++j;
    const bool lone_period = (c == '.' && j == i + 1);
    while (j < n) {
      const std::size_t len = detail::closer_length(raw, j);
      if (len == 0) break;
      j += len;
    }
    if (j >= n || !util::is_space(raw[j])) {
      i = j;
      continue;
    }
    std::size_t k = j;
    while (k < n && util::is_space(raw[k])) ++k;
    if (k >= n || !detail::opens_sentence(raw, k)) {
      i = k;
      continue;
    }
    if (lone_period) {
      std::size_t word_start = i;
      while (word_start > start && !util::is_space(raw[word_start - 1])) {
        --word_start;
      }
      if (detail::is_abbreviation(raw.substr(word_start, i + 1 - word_start))) {
        i = k;
        continue;
      }
    }
    auto sentence = util::trim(raw.substr(start, j - start));
    if (!sentence.empty()) out.emplace_back(sentence);
    start = j;
    i = k;
  }
  auto tail = util::trim(raw.substr(start));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

// ---------------------------------------------------------------------------
// Tokenization

namespace detail {

inline Token make_token(std::string_view surface, TokenKind kind) {
  Token t;
  t.surface = std::string(surface);
  t.lower = util::to_lower(surface);
  t.kind = kind;
  for (const auto& cp : decode_utf8(surface)) {
    if (is_letter(cp.value)) ++t.letter_count;
  }
  return t;
}

// Runs of one repeated punctuation character ("...", "--", "!!") stay
// together; anything else becomes one token per character.
inline void emit_punct_run(std::string_view chunk,
                           std::span<const CodePoint> cps,
                           std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t j = i + 1;
    while (j < cps.size() && cps[j].value == cps[i].value) ++j;
    const std::size_t begin = cps[i].offset;
    const std::size_t end = cps[j - 1].offset + cps[j - 1].length;
    out.push_back(make_token(chunk.substr(begin, end - begin),
                             TokenKind::punctuation));
    i = j;
  }
}

inline void tokenize_chunk(std::string_view chunk, std::vector<Token>& out) {
  const auto cps = decode_utf8(chunk);
  std::size_t lead = 0;
  while (lead < cps.size() && is_punct(cps[lead].value)) ++lead;
  std::size_t trail = cps.size();
  while (trail > lead && is_punct(cps[trail - 1].value)) --trail;
  // "Dr." and "U.S." keep their period.
  if (trail < cps.size() && lead < cps.size() &&
      is_abbreviation(chunk.substr(cps[lead].offset))) {
    trail = cps.size();
  }

  const std::span<const CodePoint> all(cps);
  emit_punct_run(chunk, all.subspan(0, lead), out);
  if (trail > lead) {
    const std::size_t begin = cps[lead].offset;
    const std::size_t end = cps[trail - 1].offset + cps[trail - 1].length;
    bool has_letter = false;
    for (std::size_t k = lead; k < trail; ++k) {
      if (is_letter(cps[k].value)) has_letter = true;
    }
    out.push_back(make_token(chunk.substr(begin, end - begin),
                             has_letter ? TokenKind::word : TokenKind::number));
  }
  emit_punct_run(chunk, all.subspan(trail), out);
}

}  // namespace detail

/// Whitespace tokenization with leading and trailing punctuation detached.
/// Internal hyphens, apostrophes and decimal separators stay inside their
/// token; a core without letters is a number.
inline std::vector<Token> tokenize(std::string_view sentence) {
  if (util::trim(sentence).empty()) throw Error("cannot tokenize empty text");
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && util::is_space(sentence[i])) ++i;
    std::size_t j = i;
    while (j < sentence.size() && !util::is_space(sentence[j])) ++j;
    if (j > i) detail::tokenize_chunk(sentence.substr(i, j - i), out);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Syllables

/// Word -> syllable count overrides, consulted before the vowel-group rule.
class SyllableExceptions {
 public:
  SyllableExceptions() = default;

  static const SyllableExceptions& bundled() {
    static const SyllableExceptions table = [] {
      SyllableExceptions t;
      static constexpr std::pair<std::string_view, int> kEntries[] = {
          {"area", 3},      {"being", 2},     {"business", 2},
          {"client", 2},    {"create", 2},    {"created", 3},
          {"diet", 2},      {"doing", 2},     {"every", 2},
          {"everyone", 3},  {"everything", 3}, {"going", 2},
          {"idea", 3},      {"ideas", 3},     {"lion", 2},
          {"museum", 3},    {"naive", 2},     {"piano", 3},
          {"poem", 2},      {"poet", 2},      {"quiet", 2},
          {"radio", 3},     {"recipe", 3},    {"ruin", 2},
          {"science", 2},   {"scientist", 3}, {"scientists", 3},
          {"society", 4},   {"sometimes", 2}, {"usual", 3},
          {"usually", 4},   {"variety", 4},   {"video", 3},
          {"wednesday", 2},
      };
      for (const auto& [word, count] : kEntries) t.set(word, count);
      return t;
    }();
    return table;
  }

  /// Reads `word<TAB>count` lines on top of an empty table.
  static SyllableExceptions load(const std::string& path) {
    SyllableExceptions t;
    const auto lines = util::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (util::trim(lines[i]).empty()) continue;
      const auto parts = util::split(lines[i], '\t');
      const std::string where = path + ":" + std::to_string(i + 1);
      if (parts.size() != 2 || util::trim(parts[0]).empty()) {
        throw Error(where + ": expected word<TAB>syllable_count");
      }
      const double count = util::parse_double(parts[1], where);
      if (count < 1 || count != static_cast<int>(count)) {
        throw Error(where + ": syllable count must be a positive integer");
      }
      t.set(util::trim(parts[0]), static_cast<int>(count));
    }
    return t;
  }

  void set(std::string_view word, int count) {
    entries_[util::to_lower(word)] = count;
  }

  std::optional<int> find(std::string_view lower_word) const {
    auto it = entries_.find(std::string(lower_word));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, int>& entries() const { return entries_; }

 private:
  std::map<std::string, int> entries_;
};

/// Vowel-group syllable estimate. `y` is a vowel except word-initially; a
/// final `e` standing alone is silent unless it is the only group or ends a
/// consonant+"le" cluster ("table").
inline int count_syllables(
    std::string_view word,
    const SyllableExceptions& exceptions = SyllableExceptions::bundled()) {
  std::string letters;
  for (char c : word) {
    if (detail::is_ascii_alpha(static_cast<unsigned char>(c))) {
      letters.push_back(
          static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
  }
  bool any_letter = !letters.empty();
  if (!any_letter) {
    for (const auto& cp : detail::decode_utf8(word)) {
      if (detail::is_letter(cp.value)) any_letter = true;
    }
  }
  if (!any_letter) {
    throw Error("cannot count syllables of '" + std::string(word) +
                "': no alphabetic character");
  }
  if (letters.empty()) return 1;  // non-Latin script word

  if (auto hit = exceptions.find(letters)) return *hit;
  const std::string lowered = util::to_lower(word);
  if (auto hit = exceptions.find(lowered)) return *hit;

  auto is_vowel = [&](std::size_t i) {
    const char c = letters[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    return c == 'y' && i > 0;
  };
  int groups = 0;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (is_vowel(i) && (i == 0 || !is_vowel(i - 1))) ++groups;
  }
  const std::size_t n = letters.size();
  if (groups > 1 && letters[n - 1] == 'e' && n >= 2 && !is_vowel(n - 2)) {
    const bool consonant_le =
        letters[n - 2] == 'l' && n >= 3 && !is_vowel(n - 3);
    if (!consonant_le) --groups;
  }
  return std::max(groups, 1);
}

// ---------------------------------------------------------------------------
// Bracketed trees

namespace detail {

class PtbReader {
 public:
  explicit PtbReader(std::string_view text) : text_(text) {}

  ParseTree read_root() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty input");
    ParseTree tree = read_node(true);
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected text after tree");
    if (tree.label.empty()) {
      // Treebank files wrap each tree in an unlabeled "( ... )".
      if (tree.children.size() != 1) fail("unlabeled root must hold one tree");
      return std::move(tree.children.front());
    }
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("bracketed tree parse error at offset " +
                std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && util::is_space(text_[pos_])) ++pos_;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !util::is_space(text_[pos_]) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  ParseTree read_node(bool root = false) {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] != '(') fail("expected '('");
    ++pos_;
    skip_ws();
    ParseTree node;
    node.label = read_atom();
    if (node.label.empty() && !(root && pos_ < text_.size() && text_[pos_] == '(')) {
      fail("empty label");
    }
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      while (true) {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] == ')') break;
        if (text_[pos_] != '(') fail("expected '(' or ')' after child");
        node.children.push_back(read_node());
      }
    } else {
      node.leaf_text = read_atom();
      if (node.leaf_text.empty()) fail("node '" + node.label + "' is empty");
      skip_ws();
      if (pos_ >= text_.size()) fail("unexpected end of input");
      if (text_[pos_] != ')') fail("leaf node holds more than one token");
    }
    ++pos_;  // ')'
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void write_ptb(const ParseTree& tree, std::string& out) {
  out += '(';
  out += tree.label;
  if (tree.is_leaf()) {
    out += ' ';
    out += tree.leaf_text;
  } else {
    for (const auto& child : tree.children) {
      out += ' ';
      write_ptb(child, out);
    }
  }
  out += ')';
}

}  // namespace detail

/// Reads one Penn-Treebank-style bracketed tree, e.g.
/// `(S (NP (DT The) (NN cat)) (VP (VBD sat)))`. Preterminals become leaf
/// nodes: label = tag, leaf_text = token.
inline ParseTree parse_ptb(std::string_view bracketed) {
  return detail::PtbReader(bracketed).read_root();
}

inline std::string to_ptb(const ParseTree& tree) {
  std::string out;
  detail::write_ptb(tree, out);
  return out;
}

/// One tree per non-blank line.
inline std::vector<ParseTree> load_parse_file(const std::string& path) {
  std::vector<ParseTree> trees;
  const auto lines = util::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (util::trim(lines[i]).empty()) continue;
    try {
      trees.push_back(parse_ptb(lines[i]));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return trees;
}

template <class Visit>
void visit_preorder(const ParseTree& tree, Visit&& visit) {
  visit(tree);
  for (const auto& child : tree.children) visit_preorder(child, visit);
}

inline std::vector<const ParseTree*> leaves(const ParseTree& tree) {
  std::vector<const ParseTree*> out;
  visit_preorder(tree, [&](const ParseTree& node) {
    if (node.is_leaf()) out.push_back(&node);
  });
  return out;
}

inline bool is_noun_tag(std::string_view tag) {
  return tag == "NN" || tag == "NNS" || tag == "NNP" || tag == "NNPS";
}

/// Lowercase form with a plural `s` removed from plural noun tags, leaving
/// -ss/-us/-is endings alone.
inline std::string noun_lemma(std::string_view surface, std::string_view tag) {
  std::string lower = util::to_lower(surface);
  if ((tag == "NNS" || tag == "NNPS") && lower.size() > 3 &&
      lower.back() == 's') {
    const char before = lower[lower.size() - 2];
    if (before != 's' && before != 'u' && before != 'i') lower.pop_back();
  }
  return lower;
}

// ---------------------------------------------------------------------------
// Rule-based tagger and chunker

namespace detail {

inline const std::unordered_map<std::string, std::string>& lexicon() {
  static const std::unordered_map<std::string, std::string> lex = [] {
    std::unordered_map<std::string, std::string> m;
    auto add = [&m](std::string_view tag, std::initializer_list<const char*> ws) {
      for (const char* w : ws) m.emplace(w, std::string(tag));
    };
    add("DT", {"the", "a", "an", "this", "that", "these", "those", "some",
               "any", "every", "each", "no", "all", "both", "either",
               "neither", "another", "such"});
    add("PRP$", {"my", "your", "his", "her", "its", "our", "their"});
    add("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him",
                "us", "them", "myself", "yourself", "himself", "herself",
                "itself", "ourselves", "themselves", "someone", "something",
                "everyone", "everything", "nobody", "nothing", "anyone",
                "anything"});
    add("WP", {"who", "whom", "what"});
    add("WP$", {"whose"});
    add("WDT", {"which"});
    add("IN", {"in", "on", "at", "of", "for", "with", "by", "from", "into",
               "onto", "about", "over", "under", "after", "before",
               "between", "through", "during", "without", "within",
               "across", "against", "among", "near", "since", "until",
               "upon", "toward", "towards", "around", "behind", "beyond",
               "along", "beside", "despite", "except", "inside", "outside",
               "per", "via", "like", "off", "because", "although", "though",
               "while", "when", "whenever", "if", "unless", "whereas",
               "whether", "once", "where", "wherever"});
    add("TO", {"to"});
    add("CC", {"and", "or", "but", "nor", "yet", "so"});
    add("MD", {"can", "could", "will", "would", "shall", "should", "may",
               "might", "must"});
    add("VBZ", {"is", "has", "does", "goes", "comes", "sees", "takes",
                "makes", "says", "gets", "knows", "thinks", "wants",
                "gives", "finds", "tells", "becomes", "leaves", "feels",
                "seems", "looks", "uses", "needs", "tries", "asks", "works",
                "calls", "plays", "runs", "lives", "loves", "helps", "keeps",
                "begins", "shows", "hears", "learns", "reads", "writes",
                "eats", "speaks", "walks", "sits", "stands", "believes",
                "brings", "happens"});
    add("VBP", {"are", "am", "have", "do", "go", "come", "see", "take",
                "make", "say", "get", "know", "think", "want", "give",
                "find", "tell", "become", "leave", "feel", "seem", "look",
                "use", "need", "try", "ask", "work", "call", "play", "run",
                "live", "love", "help", "keep", "begin", "show", "hear",
                "learn", "read", "write", "eat", "speak", "walk", "sit",
                "stand", "understand", "believe", "bring", "happen"});
    add("VB", {"be"});
    add("VBN", {"been", "done", "gone", "seen", "taken", "given", "known",
                "written", "spoken", "eaten", "begun", "broken", "chosen",
                "driven", "fallen", "forgotten", "hidden", "shown", "grown",
                "thrown", "worn", "born"});
    add("VBG", {"being"});
    add("VBD", {"was", "were", "had", "did", "met", "left", "sat", "ran",
                "went", "came", "saw", "took", "gave", "made", "said",
                "told", "found", "thought", "knew", "got", "began",
                "brought", "bought", "felt", "kept", "held", "stood",
                "wrote", "spoke", "ate", "drank", "drove", "flew", "fell",
                "grew", "hid", "hit", "lost", "meant", "paid", "put", "rode",
                "rose", "sang", "sank", "slept", "sold", "sent", "shot",
                "spent", "stole", "struck", "swam", "taught", "threw",
                "understood", "woke", "won", "wore", "built", "caught",
                "chose", "dug", "drew", "fed", "fought", "forgot", "froze",
                "heard", "led", "lay", "lent", "let", "rang", "sought",
                "shook", "shone", "stuck", "swore", "tore", "wept",
                "became"});
    add("RB", {"not", "n't", "never", "always", "often", "very", "too",
               "also", "just", "only", "still", "already", "even", "ever",
               "quite", "really", "here", "there", "now", "then", "today",
               "soon", "again", "almost", "perhaps", "rather", "usually",
               "sometimes", "however", "together", "away", "up", "down",
               "out", "back", "home", "yesterday", "tomorrow"});
    add("JJ", {"good", "bad", "new", "old", "big", "small", "great",
               "little", "long", "short", "high", "low", "large", "young",
               "happy", "sad", "hot", "cold", "warm", "cool", "dark",
               "bright", "red", "blue", "green", "black", "white", "other",
               "same", "different", "important", "possible", "real", "sure",
               "free", "full", "hard", "easy", "early", "late", "strong",
               "weak", "rich", "poor", "clean", "dirty", "quiet", "loud",
               "kind", "nice", "beautiful", "able", "whole", "main",
               "major", "certain", "clear", "common", "simple", "special",
               "difficult", "last", "next", "own", "many", "much", "few",
               "several"});
    add("JJS", {"best", "worst", "most", "least", "first"});
    add("JJR", {"better", "worse", "more", "less", "fewer"});
    add("CD", {"one", "two", "three", "four", "five", "six", "seven",
               "eight", "nine", "ten", "hundred", "thousand", "million"});
    add("UH", {"oh", "yes", "hello", "hi", "wow", "okay"});
    return m;
  }();
  return lex;
}

inline const std::set<std::string, std::less<>>& subordinators() {
  static const std::set<std::string, std::less<>> s = {
      "because", "although", "though", "while",  "when",    "whenever",
      "if",      "unless",   "whereas", "whether", "once",   "where",
      "wherever", "who",     "whom",   "whose",   "which"};
  return s;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

// Tag from word shape; nullopt when no suffix rule applies.
inline std::optional<std::string> suffix_tag(std::string_view w) {
  if (w.size() >= 5 && ends_with(w, "ing")) return "VBG";
  if (w.size() >= 4 && ends_with(w, "ed")) return "VBD";
  if (w.size() >= 4 && ends_with(w, "ly")) return "RB";
  for (std::string_view sfx :
       {"ous", "ful", "ive", "able", "ible", "less", "ish", "ical"}) {
    if (w.size() >= sfx.size() + 2 && ends_with(w, sfx)) return "JJ";
  }
  for (std::string_view sfx : {"tion", "sion", "ment", "ness", "ity", "ance",
                               "ence", "ism", "ist", "ship", "hood"}) {
    if (w.size() >= sfx.size() + 2 && ends_with(w, sfx)) return "NN";
  }
  if (w.size() >= 4 && w.back() == 's') {
    const char before = w[w.size() - 2];
    if (before != 's' && before != 'u' && before != 'i') return "NNS";
  }
  return std::nullopt;
}

inline std::string punct_tag(std::string_view p) {
  if (p == "." || p == "!" || p == "?" || p == "..." || p == "!!" ||
      p == "??" || p == "?!" || p == "!?")
    return ".";
  if (p == ",") return ",";
  if (p == "(" || p == "[" || p == "{") return "-LRB-";
  if (p == ")" || p == "]" || p == "}") return "-RRB-";
  if (p == "\"" || p == "'" || p == "\xE2\x80\x9C" || p == "\xE2\x80\x98" ||
      p == "``")
    return "``";
  if (p == "\xE2\x80\x9D" || p == "\xE2\x80\x99" || p == "''") return "''";
  if (p == "$") return "$";
  if (p == "#") return "#";
  return ":";
}

inline bool opening_punct(std::string_view p) {
  return p == "\"" || p == "'" || p == "(" || p == "[" || p == ":" ||
         p == "\xE2\x80\x9C" || p == "\xE2\x80\x98";
}

inline bool capitalized(std::string_view s) {
  return !s.empty() && s.front() >= 'A' && s.front() <= 'Z';
}

inline std::vector<std::string> tag_tokens(std::span<const Token> tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  bool at_start = true;
  for (const Token& tok : tokens) {
    if (tok.kind == TokenKind::punctuation) {
      tags.push_back(punct_tag(tok.surface));
      if (!opening_punct(tok.surface)) at_start = false;
      continue;
    }
    if (tok.kind == TokenKind::number) {
      tags.push_back("CD");
      at_start = false;
      continue;
    }
    const auto& lex = lexicon();
    auto hit = lex.find(tok.lower);
    if (!at_start && capitalized(tok.surface) && tok.lower != "i") {
      tags.push_back("NNP");
    } else if (hit != lex.end()) {
      tags.push_back(hit->second);
    } else if (auto by_suffix = suffix_tag(tok.lower)) {
      tags.push_back(*by_suffix);
    } else if (capitalized(tok.surface)) {
      tags.push_back("NNP");
    } else {
      tags.push_back("NN");
    }
    at_start = false;
  }
  return tags;
}

inline bool is_verb_tag(std::string_view t) {
  return t == "MD" || t == "VB" || t == "VBD" || t == "VBG" || t == "VBN" ||
         t == "VBP" || t == "VBZ";
}
inline bool is_adj_tag(std::string_view t) {
  return t == "JJ" || t == "JJR" || t == "JJS";
}
inline bool np_start_tag(std::string_view t) {
  return t == "DT" || t == "PRP$" || t == "CD" || t == "PRP" ||
         is_adj_tag(t) || is_noun_tag(t);
}
inline bool np_body_tag(std::string_view t) {
  return t == "CD" || is_adj_tag(t) || is_noun_tag(t);
}

inline ParseTree preterminal(const std::string& tag, const Token& tok) {
  return ParseTree{tag, {}, tok.surface};
}

struct Chunker {
  std::span<const Token> tokens;
  std::span<const std::string> tags;

  bool is_subordinator(std::size_t i) const {
    return tokens[i].kind == TokenKind::word &&
           subordinators().count(tokens[i].lower) > 0 &&
           (tags[i] == "IN" || tags[i] == "WP" || tags[i] == "WP$" ||
            tags[i] == "WDT");
  }

  static bool clause_break(std::string_view tag) {
    return tag == "," || tag == ":" || tag == ".";
  }

  // NP starting at i; returns the end index (exclusive), or i if none.
  std::size_t np_end(std::size_t i, std::size_t end) const {
    if (i >= end || !np_start_tag(tags[i])) return i;
    if (tags[i] == "PRP") return i + 1;
    std::size_t j = i + 1;
    while (j < end && np_body_tag(tags[j])) ++j;
    return j;
  }

  ParseTree make_np(std::size_t i, std::size_t j) const {
    bool has_noun = false;
    for (std::size_t k = i; k < j; ++k) {
      if (is_noun_tag(tags[k]) || tags[k] == "PRP" || tags[k] == "DT" ||
          tags[k] == "CD" || tags[k] == "PRP$")
        has_noun = true;
    }
    ParseTree node{has_noun ? "NP" : "ADJP", {}, {}};
    for (std::size_t k = i; k < j; ++k) {
      node.children.push_back(preterminal(tags[k], tokens[k]));
    }
    return node;
  }

  std::vector<ParseTree> chunk(std::size_t begin, std::size_t end) const {
    std::vector<ParseTree> out;
    std::size_t i = begin;
    while (i < end) {
      const std::string& tag = tags[i];
      if (is_subordinator(i)) {
        std::size_t j = i + 1;
        while (j < end && !clause_break(tags[j])) ++j;
        ParseTree sbar{"SBAR", {preterminal(tag, tokens[i])}, {}};
        for (auto& c : chunk(i + 1, j)) sbar.children.push_back(std::move(c));
        out.push_back(std::move(sbar));
        i = j;
        continue;
      }
      if (tag == "IN") {
        const std::size_t j = np_end(i + 1, end);
        if (j > i + 1) {
          ParseTree pp{"PP", {preterminal(tag, tokens[i]), make_np(i + 1, j)},
                       {}};
          out.push_back(std::move(pp));
          i = j;
        } else {
          out.push_back(preterminal(tag, tokens[i]));
          ++i;
        }
        continue;
      }
      if (tag == "TO") {
        if (i + 1 < end && is_verb_tag(tags[i + 1])) {
          // falls through to the verb group below
        } else {
          const std::size_t j = np_end(i + 1, end);
          if (j > i + 1) {
            out.push_back(ParseTree{
                "PP", {preterminal(tag, tokens[i]), make_np(i + 1, j)}, {}});
            i = j;
          } else {
            out.push_back(preterminal(tag, tokens[i]));
            ++i;
          }
          continue;
        }
      }
      if (is_verb_tag(tag) || tag == "TO") {
        ParseTree vp{"VP", {}, {}};
        std::size_t j = i;
        while (j < end) {
          if (is_verb_tag(tags[j])) {
            vp.children.push_back(preterminal(tags[j], tokens[j]));
            ++j;
            continue;
          }
          if (tags[j] == "RB" || tags[j] == "TO") {
            std::size_t k = j;
            while (k < end && (tags[k] == "RB" || tags[k] == "TO")) ++k;
            if (k < end && is_verb_tag(tags[k])) {
              for (; j < k; ++j) {
                vp.children.push_back(preterminal(tags[j], tokens[j]));
              }
              continue;
            }
          }
          break;
        }
        out.push_back(std::move(vp));
        i = j;
        continue;
      }
      if (np_start_tag(tag)) {
        const std::size_t j = np_end(i, end);
        out.push_back(make_np(i, j));
        i = j;
        continue;
      }
      if (tag == "RB") {
        ParseTree advp{"ADVP", {}, {}};
        while (i < end && tags[i] == "RB") {
          advp.children.push_back(preterminal(tags[i], tokens[i]));
          ++i;
        }
        out.push_back(std::move(advp));
        continue;
      }
      out.push_back(preterminal(tag, tokens[i]));
      ++i;
    }
    return out;
  }
};

}  // namespace detail

/// Fallback constituency structure for one sentence: a lexicon and suffix
/// tagger followed by a rule chunker (NP, VP, PP, ADJP, ADVP; SBAR spans a
/// subordinator up to the next clause punctuation). Root label is S.
inline ParseTree heuristic_parse(std::span<const Token> tokens) {
  const bool has_word =
      std::any_of(tokens.begin(), tokens.end(),
                  [](const Token& t) { return t.kind == TokenKind::word; });
  if (!has_word) throw Error("heuristic parse needs at least one word");
  const auto tags = detail::tag_tokens(tokens);
  detail::Chunker chunker{tokens, tags};
  return ParseTree{"S", chunker.chunk(0, tokens.size()), {}};
}

// ---------------------------------------------------------------------------
// Annotation

struct HeuristicParses {};
struct ExternalParses {
  std::vector<ParseTree> trees;  // one per analysis sentence, in order
};
using ParseSource = std::variant<HeuristicParses, ExternalParses>;

inline ParseSource external_parses_from_file(const std::string& path) {
  return ExternalParses{load_parse_file(path)};
}

/// Sentences as annotate() sees them: segment_sentences() output with
/// segments lacking any word token folded into a neighbour.
inline std::vector<std::string> analysis_sentences(std::string_view raw) {
  const auto raw_sentences = segment_sentences(raw);
  std::vector<std::string> out;
  std::string pending;
  for (const auto& s : raw_sentences) {
    const auto toks = tokenize(s);
    const bool has_word =
        std::any_of(toks.begin(), toks.end(),
                    [](const Token& t) { return t.kind == TokenKind::word; });
    if (!has_word) {
      if (!out.empty()) {
        out.back() += ' ';
        out.back() += s;
      } else {
        if (!pending.empty()) pending += ' ';
        pending += s;
      }
      continue;
    }
    if (!pending.empty()) {
      out.push_back(pending + ' ' + s);
      pending.clear();
    } else {
      out.push_back(s);
    }
  }
  if (out.empty()) throw Error("text contains no words");
  return out;
}

/// Full analysis of one text. With external parses, tree i must cover
/// sentence i token-for-token (leaf count equals token count).
inline AnalyzedText annotate(
    std::string_view raw, const ParseSource& source = HeuristicParses{},
    const SyllableExceptions& exceptions = SyllableExceptions::bundled()) {
  const auto sentences = analysis_sentences(raw);
  const auto* external = std::get_if<ExternalParses>(&source);
  if (external) {
    if (external->trees.size() < sentences.size()) {
      throw Error("sentence " + std::to_string(external->trees.size() + 1) +
                  " has no tree");
    }
    if (external->trees.size() > sentences.size()) {
      throw Error("parse source has " +
                  std::to_string(external->trees.size()) +
                  " trees but the text has " +
                  std::to_string(sentences.size()) + " sentences");
    }
  }

  AnalyzedText out;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    Sentence sentence;
    sentence.tokens = tokenize(sentences[i]);
    if (external) {
      sentence.tree = external->trees[i];
      const std::size_t leaf_count = leaves(sentence.tree).size();
      if (leaf_count != sentence.tokens.size()) {
        throw Error("sentence " + std::to_string(i + 1) + ": tree has " +
                    std::to_string(leaf_count) + " leaves but sentence has " +
                    std::to_string(sentence.tokens.size()) + " tokens");
      }
    } else {
      sentence.tree = heuristic_parse(sentence.tokens);
    }
    for (const Token& tok : sentence.tokens) {
      if (tok.kind != TokenKind::word) continue;
      ++out.word_count;
      out.syllable_counts.push_back(count_syllables(tok.surface, exceptions));
    }
    std::vector<std::string> nouns;
    for (const ParseTree* leaf : leaves(sentence.tree)) {
      if (is_noun_tag(leaf->label)) {
        nouns.push_back(noun_lemma(leaf->leaf_text, leaf->label));
      }
    }
    out.noun_lemmas.push_back(std::move(nouns));
    out.sentences.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace lxper
