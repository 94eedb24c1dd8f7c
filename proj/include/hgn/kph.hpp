#pragma once

// Key-phrase extraction: per-instance TF-IDF scoring, sliding-window n-gram
// generation, stopword / digit / POS filtering, top-k selection by TF-IDF
// weight sum, and stem-based retrieval of the original surface expressions.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "hgn/segmenter.hpp"

namespace hgn {

enum class PosTag { Noun, Verb, Adjective, Other };

inline const char* pos_name(PosTag t) {
  switch (t) {
    case PosTag::Noun: return "noun";
    case PosTag::Verb: return "verb";
    case PosTag::Adjective: return "adjective";
    case PosTag::Other: return "other";
  }
  return "?";
}

namespace detail {

inline const std::unordered_set<std::string>& stopword_list() {
  // fixed embedded list; versioned with the repo so tests stay stable
  static const std::unordered_set<std::string> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am",
      "an", "and", "any", "are", "as", "at", "be", "because", "been", "before",
      "being", "below", "between", "both", "but", "by", "can", "could", "did",
      "do", "does", "doing", "down", "during", "each", "few", "for", "from",
      "further", "had", "has", "have", "having", "he", "her", "here", "hers",
      "him", "his", "how", "i", "if", "in", "into", "is", "it", "its",
      "itself", "just", "me", "more", "most", "my", "no", "nor", "not", "now",
      "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out",
      "over", "own", "same", "she", "should", "some", "such", "than", "that",
      "the", "their", "theirs", "them", "then", "there", "these", "they",
      "this", "those", "through", "to", "too", "under", "until", "up", "very",
      "was", "we", "were", "what", "when", "where", "which", "who", "whom",
      "why", "will", "with", "would", "you", "your", "yours",
      // connectives used as segmentation cues are also function words
      "although", "however", "moreover", "since", "so", "therefore", "thus",
      "unless", "whereas", "whose", "while"};
  return words;
}

inline bool contains_digit(const std::string& w) {
  return std::any_of(w.begin(), w.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

inline bool is_word_token(const std::string& t) {
  return std::any_of(t.begin(), t.end(),
                     [](unsigned char c) { return std::isalnum(c) != 0; });
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

inline bool is_stopword(const std::string& word_lower) {
  return detail::stopword_list().count(word_lower) > 0;
}

// Deterministic tagger: small embedded lexicon first, then suffix rules,
// defaulting to noun for unknown words.
inline PosTag pos_tag(const std::string& word_lower) {
  static const std::map<std::string, PosTag> lexicon = {
      {"be", PosTag::Verb},       {"is", PosTag::Verb},
      {"are", PosTag::Verb},      {"was", PosTag::Verb},
      {"were", PosTag::Verb},     {"has", PosTag::Verb},
      {"have", PosTag::Verb},     {"had", PosTag::Verb},
      {"go", PosTag::Verb},       {"goes", PosTag::Verb},
      {"went", PosTag::Verb},     {"make", PosTag::Verb},
      {"makes", PosTag::Verb},    {"made", PosTag::Verb},
      {"say", PosTag::Verb},      {"said", PosTag::Verb},
      {"get", PosTag::Verb},      {"run", PosTag::Verb},
      {"runs", PosTag::Verb},     {"ran", PosTag::Verb},
      {"see", PosTag::Verb},      {"saw", PosTag::Verb},
      {"know", PosTag::Verb},     {"knew", PosTag::Verb},
      {"think", PosTag::Verb},    {"come", PosTag::Verb},
      {"came", PosTag::Verb},     {"take", PosTag::Verb},
      {"took", PosTag::Verb},     {"want", PosTag::Verb},
      {"find", PosTag::Verb},     {"found", PosTag::Verb},
      {"give", PosTag::Verb},     {"gave", PosTag::Verb},
      {"tell", PosTag::Verb},     {"told", PosTag::Verb},
      {"work", PosTag::Verb},     {"keep", PosTag::Verb},
      {"let", PosTag::Verb},      {"seem", PosTag::Verb},
      {"seems", PosTag::Verb},    {"help", PosTag::Verb},
      {"show", PosTag::Verb},     {"hear", PosTag::Verb},
      {"play", PosTag::Verb},     {"move", PosTag::Verb},
      {"live", PosTag::Verb},     {"hold", PosTag::Verb},
      {"bring", PosTag::Verb},    {"write", PosTag::Verb},
      {"sit", PosTag::Verb},      {"stand", PosTag::Verb},
      {"lose", PosTag::Verb},     {"pay", PosTag::Verb},
      {"meet", PosTag::Verb},     {"succeed", PosTag::Verb},
      {"remain", PosTag::Verb},   {"prefer", PosTag::Verb},
      {"remember", PosTag::Verb}, {"communicate", PosTag::Verb},
      {"good", PosTag::Adjective},      {"bad", PosTag::Adjective},
      {"new", PosTag::Adjective},       {"old", PosTag::Adjective},
      {"great", PosTag::Adjective},     {"big", PosTag::Adjective},
      {"small", PosTag::Adjective},     {"large", PosTag::Adjective},
      {"little", PosTag::Adjective},    {"long", PosTag::Adjective},
      {"short", PosTag::Adjective},     {"high", PosTag::Adjective},
      {"low", PosTag::Adjective},       {"right", PosTag::Adjective},
      {"wrong", PosTag::Adjective},     {"important", PosTag::Adjective},
      {"early", PosTag::Adjective},     {"late", PosTag::Adjective},
      {"young", PosTag::Adjective},     {"able", PosTag::Adjective},
      {"best", PosTag::Adjective},      {"better", PosTag::Adjective},
      {"sure", PosTag::Adjective},      {"clear", PosTag::Adjective},
      {"real", PosTag::Adjective},      {"true", PosTag::Adjective},
      {"false", PosTag::Adjective},     {"full", PosTag::Adjective},
      {"easy", PosTag::Adjective},      {"hard", PosTag::Adjective},
      {"simple", PosTag::Adjective},    {"free", PosTag::Adjective},
      {"strong", PosTag::Adjective},    {"weak", PosTag::Adjective},
      {"kind", PosTag::Adjective},      {"nice", PosTag::Adjective},
      {"fine", PosTag::Adjective},      {"dull", PosTag::Adjective},
      {"plain", PosTag::Adjective},     {"unusual", PosTag::Adjective},
      {"memorable", PosTag::Adjective},
      // a few adverbs and similar, so PosTag::Other is reachable
      {"quickly", PosTag::Other},  {"slowly", PosTag::Other},
      {"really", PosTag::Other},   {"almost", PosTag::Other},
      {"often", PosTag::Other},    {"sometimes", PosTag::Other},
      {"usually", PosTag::Other},  {"together", PosTag::Other},
      {"away", PosTag::Other},     {"apart", PosTag::Other},
      {"seldom", PosTag::Other}};
  auto it = lexicon.find(word_lower);
  if (it != lexicon.end()) return it->second;
  using detail::ends_with;
  if (ends_with(word_lower, "tion") || ends_with(word_lower, "ness") ||
      ends_with(word_lower, "er"))
    return PosTag::Noun;
  if (ends_with(word_lower, "ize") || ends_with(word_lower, "ate")) return PosTag::Verb;
  if (ends_with(word_lower, "ous") || ends_with(word_lower, "ic") ||
      ends_with(word_lower, "ive"))
    return PosTag::Adjective;
  return PosTag::Noun;
}

// Suffix stripping for the plural / -ing / -ed / -ly families. One pass
// applies each family at most once; the output is a fixed point of the pass.
inline std::string stem(const std::string& word_lower) {
  std::string w = word_lower;
  using detail::ends_with;
  // plural family
  if (ends_with(w, "ies") && w.size() > 4) {
    w = w.substr(0, w.size() - 3) + "y";
  } else if (ends_with(w, "sses")) {
    w = w.substr(0, w.size() - 2);
  } else if (ends_with(w, "es") && w.size() > 3) {
    const char before = w[w.size() - 3];
    if (before == 'x' || before == 'z' ||
        (w.size() > 4 && (ends_with(w.substr(0, w.size() - 2), "ch") ||
                          ends_with(w.substr(0, w.size() - 2), "sh"))))
      w = w.substr(0, w.size() - 2);
    else if (!ends_with(w, "ss"))
      w = w.substr(0, w.size() - 1);
  } else if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() > 2) {
    w = w.substr(0, w.size() - 1);
  }
  if (ends_with(w, "ing") && w.size() >= 6) w = w.substr(0, w.size() - 3);
  if (ends_with(w, "ed") && w.size() >= 5) w = w.substr(0, w.size() - 2);
  if (ends_with(w, "ly") && w.size() >= 5) w = w.substr(0, w.size() - 2);
  return w;
}

struct NGram {
  std::vector<std::string> words;                        // lowercased
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // char spans per occurrence

  std::string joined() const {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += ' ';
      out += words[i];
    }
    return out;
  }
};

struct KeyPhrase {
  std::size_t id = 0;
  std::string surface;  // original-case expression from the source
  NGram source_gram;    // the top-k gram that retrieved it
  double weight = 0.0;  // TF-IDF sum of the source gram's words
};

using TfIdfDict = std::map<std::string, double>;

// tf(w) = count(w) / total non-stopword tokens across all sentences;
// idf(w) = ln(S / (1 + s_w)) + 1 with S sentences and s_w sentences holding w.
inline TfIdfDict tfidf(const std::vector<std::vector<std::string>>& sentences) {
  if (sentences.empty()) throw std::invalid_argument("tfidf: no sentences");
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::set<std::size_t>> appears_in;
  std::size_t total = 0;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (const std::string& w : sentences[s]) {
      if (is_stopword(w)) continue;
      ++counts[w];
      ++total;
      appears_in[w].insert(s);
    }
  }
  TfIdfDict dict;
  if (total == 0) return dict;
  const double S = static_cast<double>(sentences.size());
  for (const auto& [word, count] : counts) {
    const double tf = static_cast<double>(count) / static_cast<double>(total);
    const double idf = std::log(S / (1.0 + static_cast<double>(appears_in[word].size()))) + 1.0;
    dict[word] = tf * idf;
  }
  return dict;
}

// All contiguous grams of lengths 1..n over the given tokens (sliding
// window), merged by word sequence with every occurrence span recorded.
// Output is sorted by word sequence for determinism.
inline std::vector<NGram> ngrams(const std::vector<Token>& tokens, std::size_t n) {
  if (n < 1) throw std::invalid_argument("ngrams: n must be >= 1");
  std::map<std::vector<std::string>, std::vector<std::pair<std::size_t, std::size_t>>> acc;
  for (std::size_t len = 1; len <= n; ++len) {
    if (tokens.size() < len) break;
    for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
      std::vector<std::string> words;
      words.reserve(len);
      for (std::size_t j = 0; j < len; ++j) words.push_back(detail::to_lower(tokens[i + j].text));
      acc[std::move(words)].emplace_back(tokens[i].begin, tokens[i + len - 1].end);
    }
  }
  std::vector<NGram> out;
  out.reserve(acc.size());
  for (auto& [words, spans] : acc) {
    NGram g;
    g.words = words;
    g.spans = std::move(spans);
    out.push_back(std::move(g));
  }
  return out;
}

// Removes grams containing a stopword or a digit, grams whose every word is
// shorter than m characters, and unigrams that are not noun / verb / adjective.
inline std::vector<NGram> filter_ngrams(std::vector<NGram> grams, std::size_t m) {
  std::vector<NGram> out;
  for (auto& g : grams) {
    bool drop = false;
    bool any_long_enough = false;
    for (const std::string& w : g.words) {
      if (is_stopword(w) || detail::contains_digit(w)) {
        drop = true;
        break;
      }
      if (w.size() >= m) any_long_enough = true;
    }
    if (drop || !any_long_enough) continue;
    if (g.words.size() == 1) {
      const PosTag tag = pos_tag(g.words[0]);
      if (tag != PosTag::Noun && tag != PosTag::Verb && tag != PosTag::Adjective) continue;
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline double gram_weight(const NGram& g, const TfIdfDict& dict) {
  double sum = 0.0;
  for (const std::string& w : g.words) {
    auto it = dict.find(w);
    if (it != dict.end()) sum += it->second;
  }
  return sum;
}

struct TopkResult {
  std::vector<NGram> grams;  // ranked, best first
  bool short_of_k = false;   // fewer than k survivors were available
};

// Top-k grams by TF-IDF weight sum; ties broken by longer gram first, then
// lexicographically, so the ranking is a total order and raising k only
// extends it.
inline TopkResult select_topk(const std::vector<NGram>& grams, const TfIdfDict& dict,
                              std::size_t k) {
  if (k < 1) throw std::invalid_argument("select_topk: k must be >= 1");
  std::vector<std::pair<double, const NGram*>> scored;
  scored.reserve(grams.size());
  for (const auto& g : grams) scored.emplace_back(gram_weight(g, dict), &g);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->words.size() != b.second->words.size())
      return a.second->words.size() > b.second->words.size();
    return a.second->words < b.second->words;
  });
  TopkResult result;
  result.short_of_k = scored.size() < k;
  const std::size_t take = std::min(k, scored.size());
  for (std::size_t i = 0; i < take; ++i) result.grams.push_back(*scored[i].second);
  return result;
}

// Retrieval of original expressions. Unigrams are stemmed and match every
// source word whose stem contains that stem (so "eccentric" also retrieves
// "non-eccentric"); multi-word grams match their verbatim occurrences. One
// key phrase per distinct surface string, first retrieving gram wins.
inline std::vector<KeyPhrase> retrieve(const std::vector<NGram>& topk,
                                       const std::vector<Token>& tokens,
                                       const std::string& source, const TfIdfDict& dict) {
  if (topk.empty()) throw std::invalid_argument("retrieve: no top-k grams");
  std::vector<KeyPhrase> phrases;
  std::set<std::string> seen;
  for (const NGram& gram : topk) {
    const double weight = gram_weight(gram, dict);
    std::vector<std::string> surfaces;
    if (gram.words.size() == 1) {
      const std::string gram_stem = stem(gram.words[0]);
      for (const Token& tok : tokens) {
        if (!detail::is_word_token(tok.text)) continue;
        const std::string tok_stem = stem(detail::to_lower(tok.text));
        if (tok_stem.find(gram_stem) != std::string::npos) surfaces.push_back(tok.text);
      }
    } else {
      for (const auto& [begin, end] : gram.spans)
        surfaces.push_back(source.substr(begin, end - begin));
    }
    for (const std::string& surface : surfaces) {
      if (!seen.insert(surface).second) continue;
      KeyPhrase p;
      p.id = phrases.size();
      p.surface = surface;
      p.source_gram = gram;
      p.weight = weight;
      phrases.push_back(std::move(p));
    }
  }
  return phrases;
}

struct KphConfig {
  std::size_t n = 3;  // max gram length
  std::size_t m = 3;  // min word length
  std::size_t k = 3;  // number of key phrases
};

struct KphResult {
  TfIdfDict dict;
  std::vector<NGram> topk;
  bool short_of_k = false;
  std::vector<KeyPhrase> phrases;
};

namespace detail {

// sentences end at . ! ? ; : — each sentence is its lowercased word tokens
inline std::vector<std::vector<std::string>> sentence_words(const std::vector<Token>& tokens) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  for (const Token& t : tokens) {
    if (ends_sentence(t.text)) {
      if (!current.empty()) sentences.push_back(std::move(current));
      current = {};
      continue;
    }
    if (is_word_token(t.text)) current.push_back(to_lower(t.text));
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

// maximal punctuation-free token runs; grams never span punctuation
inline std::vector<std::vector<Token>> word_runs(const std::vector<Token>& tokens) {
  std::vector<std::vector<Token>> runs;
  std::vector<Token> current;
  for (const Token& t : tokens) {
    if (is_word_token(t.text)) {
      current.push_back(t);
    } else if (!current.empty()) {
      runs.push_back(std::move(current));
      current = {};
    }
  }
  if (!current.empty()) runs.push_back(std::move(current));
  return runs;
}

}  // namespace detail

// Full pipeline over one instance text. Pure function of (text, cfg).
inline KphResult extract_key_phrases(const std::string& text, const KphConfig& cfg = {}) {
  const std::vector<Token> tokens = tokenize(text);
  const auto sentences = detail::sentence_words(tokens);
  if (sentences.empty()) throw std::invalid_argument("extract_key_phrases: no sentences");

  KphResult result;
  result.dict = tfidf(sentences);

  std::map<std::vector<std::string>, NGram> merged;
  for (const auto& run : detail::word_runs(tokens)) {
    for (NGram& g : ngrams(run, cfg.n)) {
      auto it = merged.find(g.words);
      if (it == merged.end()) {
        merged.emplace(g.words, std::move(g));
      } else {
        for (const auto& span : g.spans) it->second.spans.push_back(span);
      }
    }
  }
  std::vector<NGram> all;
  all.reserve(merged.size());
  for (auto& [words, gram] : merged) {
    std::sort(gram.spans.begin(), gram.spans.end());
    all.push_back(std::move(gram));
  }

  TopkResult top = select_topk(filter_ngrams(std::move(all), cfg.m), result.dict, cfg.k);
  result.topk = top.grams;
  result.short_of_k = top.short_of_k;
  if (!result.topk.empty()) result.phrases = retrieve(result.topk, tokens, text, result.dict);
  return result;
}

}  // namespace hgn
