#pragma once

// Test-only exhaustive application of the four edge rules, written with
// plain nested loops independent of hgn::build_graph. Shares only the
// tokenizer and stemmer primitives.

#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "hgn/graph.hpp"

namespace graph_oracle {

using EdgeTuple = std::tuple<std::size_t, std::size_t, int>;  // from, to, type ordinal

inline std::vector<std::string> stems_of(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& t : hgn::tokenize(text)) {
    bool wordy = false;
    for (unsigned char c : t.text)
      if (std::isalnum(c)) wordy = true;
    if (!wordy) {
      out.push_back("");  // punctuation breaks adjacency
      continue;
    }
    std::string lower = t.text;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(hgn::stem(lower));
  }
  return out;
}

inline bool edu_mentions(const std::string& edu_text, const std::string& surface) {
  const auto edu_stems = stems_of(edu_text);
  std::vector<std::string> phrase;
  for (const auto& s : stems_of(surface))
    if (!s.empty()) phrase.push_back(s);
  if (phrase.empty()) return false;
  if (phrase.size() == 1) {
    for (const auto& s : edu_stems)
      if (!s.empty() && s.find(phrase[0]) != std::string::npos) return true;
    return false;
  }
  for (std::size_t i = 0; i + phrase.size() <= edu_stems.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < phrase.size(); ++j)
      if (edu_stems[i + j] != phrase[j]) ok = false;
    if (ok) return true;
  }
  return false;
}

inline double cos_sim(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return dot / std::sqrt(na) / std::sqrt(nb);
}

inline std::set<EdgeTuple> expected_edges(const std::vector<hgn::Edu>& edus,
                                          const std::vector<hgn::KeyPhrase>& kphs,
                                          const std::vector<std::vector<double>>& emb,
                                          double threshold) {
  std::set<EdgeTuple> out;
  const std::size_t nE = edus.size();
  // continue: chain in reading order, directed
  for (std::size_t i = 0; i + 1 < nE; ++i) out.insert({i, i + 1, 0});
  // mention: EDU text contains the phrase, both directions
  for (std::size_t e = 0; e < nE; ++e)
    for (std::size_t p = 0; p < kphs.size(); ++p)
      if (edu_mentions(edus[e].text, kphs[p].surface)) {
        out.insert({e, nE + p, 2});
        out.insert({nE + p, e, 2});
      }
  // overlap: EDU pair sharing any mentioned phrase
  for (std::size_t a = 0; a < nE; ++a)
    for (std::size_t b = 0; b < nE; ++b) {
      if (a == b) continue;
      for (std::size_t p = 0; p < kphs.size(); ++p)
        if (edu_mentions(edus[a].text, kphs[p].surface) &&
            edu_mentions(edus[b].text, kphs[p].surface)) {
          out.insert({a, b, 1});
          out.insert({b, a, 1});
        }
    }
  // relate: shared source gram or cosine above threshold
  for (std::size_t p = 0; p < kphs.size(); ++p)
    for (std::size_t q = 0; q < kphs.size(); ++q) {
      if (p == q) continue;
      if (kphs[p].source_gram.words == kphs[q].source_gram.words ||
          cos_sim(emb[p], emb[q]) > threshold) {
        out.insert({nE + p, nE + q, 3});
        out.insert({nE + q, nE + p, 3});
      }
    }
  return out;
}

inline std::set<EdgeTuple> actual_edges(const hgn::HolisticGraph& g) {
  std::set<EdgeTuple> out;
  for (const auto& e : g.edges) out.insert({e.from, e.to, static_cast<int>(e.etype)});
  return out;
}

}  // namespace graph_oracle
