#pragma once

// Holistic graph over EDU and KPH nodes with four edge relations:
//   continue  EDU -> EDU   consecutive units in reading order (directed)
//   overlap   EDU <-> EDU  both units mention a common key phrase
//   mention   EDU <-> KPH  the unit's text contains the phrase
//   relate    KPH <-> KPH  same source gram, or embedding cosine above a
//                          threshold
// Bidirectional relations are stored as two directed edges. The adjacency A
// has a zero diagonal; Ã = D^{-1/2}(A+I)D^{-1/2} with degrees taken as
// row-nonzero counts of A+I.

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <tuple>
#include <string>
#include <vector>

#include "json.hpp"

#include "hgn/kph.hpp"
#include "hgn/segmenter.hpp"
#include "hgn/tensor.hpp"

namespace hgn {

enum class NodeKind { EduNode, KphNode };
enum class EdgeType { Continue, Overlap, Mention, Relate };

inline const char* node_kind_name(NodeKind k) {
  return k == NodeKind::EduNode ? "edu" : "kph";
}

inline const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::Continue: return "continue";
    case EdgeType::Overlap: return "overlap";
    case EdgeType::Mention: return "mention";
    case EdgeType::Relate: return "relate";
  }
  return "?";
}

struct NodeRef {
  std::size_t id = 0;
  NodeKind kind = NodeKind::EduNode;
  std::size_t payload = 0;  // index into the EDU or KPH list
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  EdgeType etype = EdgeType::Continue;

  friend bool operator<(const Edge& a, const Edge& b) {
    return std::tie(a.from, a.to, a.etype) < std::tie(b.from, b.to, b.etype);
  }
  friend bool operator==(const Edge& a, const Edge& b) {
    return a.from == b.from && a.to == b.to && a.etype == b.etype;
  }
};

struct HolisticGraph {
  std::vector<NodeRef> nodes;  // EDU nodes first, then KPH nodes
  std::vector<Edge> edges;     // sorted by (from, to, type)
  Tensor adjacency;            // A, zero diagonal
  Tensor normalized_adjacency; // Ã
  std::size_t edu_count = 0;
  std::size_t kph_count = 0;
  std::vector<std::vector<std::size_t>> neighbors;  // N(v): row nonzeros of A+I

  std::size_t node_count() const { return nodes.size(); }
};

inline double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: dimension mismatch " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;  // zero vector: no similarity
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// Ã = D^{-1/2} (A + I) D^{-1/2}, d_i = number of nonzero entries in row i of A+I.
inline Tensor normalize_adjacency(const Tensor& A) {
  if (A.rows != A.cols)
    throw std::invalid_argument("normalize_adjacency: not square " + shape_str(A));
  const std::size_t V = A.rows;
  for (std::size_t i = 0; i < V; ++i) {
    if (A.at(i, i) != 0.0)
      throw std::invalid_argument("normalize_adjacency: nonzero diagonal");
    for (std::size_t j = 0; j < V; ++j)
      if (A.at(i, j) < 0.0)
        throw std::invalid_argument("normalize_adjacency: negative entry");
  }
  std::vector<double> degree(V, 0.0);
  for (std::size_t i = 0; i < V; ++i) {
    std::size_t nonzero = 1;  // self-loop from A+I
    for (std::size_t j = 0; j < V; ++j)
      if (j != i && A.at(i, j) > 0.0) ++nonzero;
    degree[i] = static_cast<double>(nonzero);
  }
  Tensor out(V, V);
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = 0; j < V; ++j) {
      const double aprime = A.at(i, j) + (i == j ? 1.0 : 0.0);
      if (aprime != 0.0) out.at(i, j) = aprime / std::sqrt(degree[i] * degree[j]);
    }
  return out;
}

struct BuildOptions {
  double cos_threshold = 0.5;
  bool drop_continue = false;
  bool drop_overlap = false;
  bool drop_mention = false;
  bool drop_relate = false;
};

namespace detail {

// stemmed lowercased word tokens of a text, grouped into punctuation-free
// runs so phrase matches cannot cross punctuation
inline std::vector<std::vector<std::string>> stemmed_runs(const std::string& text) {
  std::vector<std::vector<std::string>> runs;
  for (const auto& run : word_runs(tokenize(text))) {
    std::vector<std::string> stems;
    stems.reserve(run.size());
    for (const Token& t : run) stems.push_back(stem(to_lower(t.text)));
    runs.push_back(std::move(stems));
  }
  return runs;
}

// mention semantics mirror retrieval: a single-word phrase matches any token
// whose stem contains the phrase stem; a multi-word phrase must match its
// stemmed words consecutively
inline bool mentions(const std::vector<std::vector<std::string>>& edu_runs,
                     const std::vector<std::string>& phrase_stems) {
  if (phrase_stems.empty()) return false;
  for (const auto& run : edu_runs) {
    if (phrase_stems.size() == 1) {
      for (const std::string& s : run)
        if (s.find(phrase_stems[0]) != std::string::npos) return true;
    } else {
      if (run.size() < phrase_stems.size()) continue;
      for (std::size_t i = 0; i + phrase_stems.size() <= run.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < phrase_stems.size(); ++j)
          if (run[i + j] != phrase_stems[j]) match = false;
        if (match) return true;
      }
    }
  }
  return false;
}

inline std::vector<std::string> phrase_stems(const std::string& surface) {
  std::vector<std::string> stems;
  for (const Token& t : tokenize(surface))
    if (is_word_token(t.text)) stems.push_back(stem(to_lower(t.text)));
  return stems;
}

}  // namespace detail

inline HolisticGraph build_graph(const std::vector<Edu>& edus,
                                 const std::vector<KeyPhrase>& kphs,
                                 const std::vector<std::vector<double>>& kph_embeddings,
                                 const BuildOptions& opts = {}) {
  if (edus.empty()) throw std::invalid_argument("build_graph: no EDU nodes");
  if (kph_embeddings.size() != kphs.size())
    throw std::invalid_argument("build_graph: need one embedding per key phrase");

  HolisticGraph g;
  g.edu_count = edus.size();
  g.kph_count = kphs.size();
  const std::size_t nE = edus.size();
  const std::size_t V = nE + kphs.size();
  for (std::size_t i = 0; i < nE; ++i) g.nodes.push_back({i, NodeKind::EduNode, i});
  for (std::size_t p = 0; p < kphs.size(); ++p)
    g.nodes.push_back({nE + p, NodeKind::KphNode, p});

  std::set<Edge> edges;
  auto both_ways = [&](std::size_t a, std::size_t b, EdgeType t) {
    edges.insert({a, b, t});
    edges.insert({b, a, t});
  };

  if (!opts.drop_continue)
    for (std::size_t i = 0; i + 1 < nE; ++i) edges.insert({i, i + 1, EdgeType::Continue});

  // mention sets drive both mention and overlap edges
  std::vector<std::vector<std::vector<std::string>>> edu_runs;
  edu_runs.reserve(nE);
  for (const Edu& e : edus) edu_runs.push_back(detail::stemmed_runs(e.text));
  std::vector<std::set<std::size_t>> mentioned(nE);
  for (std::size_t p = 0; p < kphs.size(); ++p) {
    const auto stems = detail::phrase_stems(kphs[p].surface);
    for (std::size_t e = 0; e < nE; ++e)
      if (detail::mentions(edu_runs[e], stems)) mentioned[e].insert(p);
  }

  if (!opts.drop_mention)
    for (std::size_t e = 0; e < nE; ++e)
      for (std::size_t p : mentioned[e]) both_ways(e, nE + p, EdgeType::Mention);

  if (!opts.drop_overlap)
    for (std::size_t a = 0; a < nE; ++a)
      for (std::size_t b = a + 1; b < nE; ++b) {
        bool shared = false;
        for (std::size_t p : mentioned[a])
          if (mentioned[b].count(p)) shared = true;
        if (shared) both_ways(a, b, EdgeType::Overlap);
      }

  if (!opts.drop_relate)
    for (std::size_t p = 0; p < kphs.size(); ++p)
      for (std::size_t q = p + 1; q < kphs.size(); ++q) {
        const bool same_gram = kphs[p].source_gram.words == kphs[q].source_gram.words;
        const bool similar =
            cosine(kph_embeddings[p], kph_embeddings[q]) > opts.cos_threshold;
        if (same_gram || similar) both_ways(nE + p, nE + q, EdgeType::Relate);
      }

  g.edges.assign(edges.begin(), edges.end());

  g.adjacency = Tensor(V, V);
  for (const Edge& e : g.edges) g.adjacency.at(e.from, e.to) = 1.0;
  g.normalized_adjacency = normalize_adjacency(g.adjacency);

  g.neighbors.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t u = 0; u < V; ++u)
      if (v == u || g.adjacency.at(v, u) > 0.0) g.neighbors[v].push_back(u);
  }
  return g;
}

// --- export formats ---------------------------------------------------------

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline std::string to_dot(const HolisticGraph& g, const std::vector<Edu>& edus,
                          const std::vector<KeyPhrase>& kphs) {
  std::string out = "digraph holistic {\n";
  for (const NodeRef& n : g.nodes) {
    if (n.kind == NodeKind::EduNode) {
      out += "  n" + std::to_string(n.id) + " [shape=box label=\"E" +
             std::to_string(n.payload) + ": " + detail::dot_escape(edus[n.payload].text) +
             "\"];\n";
    } else {
      out += "  n" + std::to_string(n.id) + " [shape=ellipse label=\"P" +
             std::to_string(n.payload) + ": " +
             detail::dot_escape(kphs[n.payload].surface) + "\"];\n";
    }
  }
  for (const Edge& e : g.edges)
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" +
           edge_type_name(e.etype) + "\"];\n";
  out += "}\n";
  return out;
}

inline nlohmann::json graph_to_json(const HolisticGraph& g, const std::vector<Edu>& edus,
                                    const std::vector<KeyPhrase>& kphs) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const NodeRef& n : g.nodes) {
    j["nodes"].push_back(
        {{"id", n.id},
         {"kind", node_kind_name(n.kind)},
         {"text", n.kind == NodeKind::EduNode ? edus[n.payload].text
                                              : kphs[n.payload].surface}});
  }
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"etype", edge_type_name(e.etype)}});
  j["A_tilde"] = g.normalized_adjacency.data;  // dense row-major
  return j;
}

}  // namespace hgn
