#pragma once

// The holistic graph network model: a toy trainable encoder producing node
// features, hierarchical (type-level + node-level) attention layers over the
// holistic graph, and the answer selector (BiGRU over EDU features with a
// residual, attention-pooled KPH features, fused through a two-layer MLP).
// Also the versioned binary checkpoint format.

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hgn/graph.hpp"
#include "hgn/kph.hpp"
#include "hgn/rng.hpp"
#include "hgn/segmenter.hpp"
#include "hgn/tensor.hpp"

namespace hgn {

struct HGNConfig {
  std::size_t d = 32;      // feature dimension (even)
  std::size_t layers = 2;  // number of HGN layers
  std::size_t k = 3;       // key phrases to select
  std::size_t ngram_len = 3;
  std::size_t min_word_len = 3;
  double cos_threshold = 0.5;
  double leaky_slope = 0.01;
  std::size_t min_edu_tokens = 2;
  std::size_t hash_buckets = 211;
  std::size_t max_positions = 64;  // position table size; later tokens clamp
  std::size_t max_edus = 16;      // pooling weight table size; later rows clamp

  // ablation switches
  bool drop_edge_continue = false;
  bool drop_edge_overlap = false;
  bool drop_edge_mention = false;
  bool drop_edge_relate = false;
  bool no_type_attention = false;
  bool no_node_attention = false;
  bool no_bigru = false;
  bool no_kph_attention = false;
  bool no_kph_nodes = false;
  bool no_edu_nodes = false;

  std::size_t gru_hidden() const { return d / 2; }

  void validate() const {
    if (d < 2 || d % 2 != 0) throw std::invalid_argument("config: d must be even and >= 2");
    if (layers < 1) throw std::invalid_argument("config: layers must be >= 1");
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (ngram_len < 1) throw std::invalid_argument("config: ngram length must be >= 1");
    if (hash_buckets < 2) throw std::invalid_argument("config: hash buckets must be >= 2");
    if (max_positions < 1 || max_edus < 1)
      throw std::invalid_argument("config: table sizes must be >= 1");
    if (no_kph_nodes && no_edu_nodes)
      throw std::invalid_argument("config: no_kph_nodes and no_edu_nodes are contradictory");
  }
};

// --- parameters --------------------------------------------------------------

struct ParamSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  bool zero_init;  // biases and pooling weights start at zero
};

inline std::vector<ParamSpec> param_specs(const HGNConfig& cfg) {
  const std::size_t d = cfg.d;
  const std::size_t hd = cfg.gru_hidden();
  std::vector<ParamSpec> specs = {
      {"embed", cfg.hash_buckets, d, false},
      {"pos", cfg.max_positions, d, false},
      {"enc_w", d, d, false},
      {"enc_b", 1, d, true},
      {"gnn_w", d, d, false},
      {"type_w_edu", d, d, false},
      {"type_w_kph", d, d, false},
      {"type_attn_edu", 2 * d, 1, false},
      {"type_attn_kph", 2 * d, 1, false},
      {"node_attn", 2 * d, 1, false},
  };
  for (const char* dir : {"f", "b"}) {
    for (const char* gate : {"z", "r", "n"}) {
      specs.push_back({std::string("gru_") + dir + "_w" + gate, d, hd, false});
      specs.push_back({std::string("gru_") + dir + "_u" + gate, hd, hd, false});
      specs.push_back({std::string("gru_") + dir + "_b" + gate, 1, hd, true});
    }
  }
  specs.push_back({"kph_attn_w", 2 * d, 1, false});
  specs.push_back({"kph_attn_b", 1, 1, true});
  specs.push_back({"kph_out_w", d, d, false});
  specs.push_back({"kph_out_b", 1, d, true});
  specs.push_back({"pool_w", cfg.max_edus, 1, true});
  specs.push_back({"fuse_w", 2 * d, d, false});
  specs.push_back({"mlp_w1", d, d, false});
  specs.push_back({"mlp_b1", 1, d, true});
  specs.push_back({"mlp_w2", d, 1, false});
  specs.push_back({"mlp_b2", 1, 1, true});
  return specs;
}

struct ParamEntry {
  std::string name;
  Tensor tensor;
};

struct HGNParams {
  std::vector<ParamEntry> entries;

  static HGNParams init(const HGNConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d));
    HGNParams p;
    for (const ParamSpec& spec : param_specs(cfg)) {
      Tensor t = spec.zero_init ? Tensor(spec.rows, spec.cols)
                                : Tensor::uniform(spec.rows, spec.cols, -bound, bound, rng);
      p.entries.push_back({spec.name, std::move(t)});
    }
    return p;
  }

  Tensor* find(std::string_view name) {
    for (auto& e : entries)
      if (e.name == name) return &e.tensor;
    return nullptr;
  }
  const Tensor* find(std::string_view name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e.tensor;
    return nullptr;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.tensor.size();
    return n;
  }
};

// ensures a parameter set structurally matches a config
inline void check_params_match(const HGNParams& params, const HGNConfig& cfg) {
  const auto specs = param_specs(cfg);
  if (specs.size() != params.entries.size())
    throw std::invalid_argument("params/config mismatch: entry count");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& e = params.entries[i];
    if (e.name != specs[i].name || e.tensor.rows != specs[i].rows ||
        e.tensor.cols != specs[i].cols)
      throw std::invalid_argument("params/config mismatch at " + specs[i].name + ": have " +
                                  e.name + " " + shape_str(e.tensor) + ", expected " +
                                  std::to_string(specs[i].rows) + "x" +
                                  std::to_string(specs[i].cols));
  }
}

// all parameters as leaves on one tape
class ParamVars {
 public:
  ParamVars(Tape& tape, const HGNParams& params, bool requires_grad) {
    names_.reserve(params.entries.size());
    vars_.reserve(params.entries.size());
    for (const auto& e : params.entries) {
      Tensor t = e.tensor;
      t.requires_grad = requires_grad;
      names_.push_back(e.name);
      vars_.push_back(tape.leaf(std::move(t)));
    }
  }

  Var operator[](std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return vars_[i];
    throw std::logic_error("unknown parameter " + std::string(name));
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Var>& vars() const { return vars_; }

 private:
  std::vector<std::string> names_;
  std::vector<Var> vars_;
};

// --- precomputed embeddings ---------------------------------------------------

// Frozen word vectors from an external encoder. Tokens found here bypass the
// trainable hashed table (the learned position mix still applies); unknown
// words fall back to the hashed lookup. Keys are matched against lowercased
// token text.
struct PrecomputedEmbeddings {
  std::size_t d = 0;
  std::map<std::string, std::vector<double>> vectors;

  const std::vector<double>* lookup(const std::string& word_lower) const {
    auto it = vectors.find(word_lower);
    return it == vectors.end() ? nullptr : &it->second;
  }
};

// --- per-candidate analysis (extraction is parameter independent) ------------

struct CandidateAnalysis {
  SegmentResult seg;
  KphResult kph;
  std::vector<std::size_t> token_buckets;    // whole C,Q,A sequence
  std::vector<std::size_t> token_positions;  // clamped to the position table
  std::size_t ctx_offset = 0, q_offset = 0, ans_offset = 0;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::size_t bucket_of(const std::string& word, std::size_t buckets) {
  return static_cast<std::size_t>(fnv1a(to_lower(word)) % buckets);
}

}  // namespace detail

inline CandidateAnalysis analyze_candidate(const std::string& context,
                                           const std::string& question,
                                           const std::string& answer, const HGNConfig& cfg) {
  CandidateAnalysis a;
  a.seg = segment(context, answer, question, cfg.min_edu_tokens);
  if (!cfg.no_kph_nodes) {
    KphConfig kc{cfg.ngram_len, cfg.min_word_len, cfg.k};
    a.kph = extract_key_phrases(context + " " + answer, kc);
  }
  a.ctx_offset = 0;
  a.q_offset = a.seg.context_tokens.size();
  a.ans_offset = a.q_offset + a.seg.question_tokens.size();
  auto push_tokens = [&](const std::vector<Token>& toks) {
    for (const Token& t : toks) {
      a.token_buckets.push_back(detail::bucket_of(t.text, cfg.hash_buckets));
      a.token_positions.push_back(std::min(a.token_buckets.size() - 1, cfg.max_positions - 1));
    }
  };
  push_tokens(a.seg.context_tokens);
  push_tokens(a.seg.question_tokens);
  push_tokens(a.seg.answer_tokens);
  return a;
}

namespace detail {

inline void check_embedding_dim(const PrecomputedEmbeddings* pre, const HGNConfig& cfg) {
  if (pre && pre->d != cfg.d)
    throw std::invalid_argument("precomputed embeddings have dimension " +
                                std::to_string(pre->d) + ", config wants " +
                                std::to_string(cfg.d));
}

}  // namespace detail

// plain-value phrase embeddings (mean over word vectors), used for the cosine
// edge rule before any message passing
inline std::vector<std::vector<double>> kph_embedding_values(
    const CandidateAnalysis& a, const HGNParams& params, const HGNConfig& cfg,
    const PrecomputedEmbeddings* pre = nullptr) {
  detail::check_embedding_dim(pre, cfg);
  const Tensor* table = params.find("embed");
  std::vector<std::vector<double>> out;
  for (const KeyPhrase& p : a.kph.phrases) {
    std::vector<std::string> words;
    for (const Token& t : tokenize(p.surface))
      if (detail::is_word_token(t.text)) words.push_back(t.text);
    if (words.empty())
      throw std::invalid_argument("key phrase with no word tokens: " + p.surface);
    std::vector<double> e(cfg.d, 0.0);
    for (const std::string& w : words) {
      const std::vector<double>* fixed =
          pre ? pre->lookup(detail::to_lower(w)) : nullptr;
      if (fixed) {
        for (std::size_t j = 0; j < cfg.d; ++j) e[j] += (*fixed)[j];
      } else {
        const std::size_t b = detail::bucket_of(w, cfg.hash_buckets);
        for (std::size_t j = 0; j < cfg.d; ++j) e[j] += table->at(b, j);
      }
    }
    for (double& v : e) v /= static_cast<double>(words.size());
    out.push_back(std::move(e));
  }
  return out;
}

// graph over KPH nodes only (relate edges), for the EDU-removal ablation
inline HolisticGraph kph_only_graph(const std::vector<KeyPhrase>& kphs,
                                    const std::vector<std::vector<double>>& emb,
                                    const BuildOptions& opts) {
  HolisticGraph g;
  g.edu_count = 0;
  g.kph_count = kphs.size();
  const std::size_t V = kphs.size();
  if (V == 0) throw std::invalid_argument("kph_only_graph: no nodes at all");
  for (std::size_t p = 0; p < V; ++p) g.nodes.push_back({p, NodeKind::KphNode, p});
  std::set<Edge> edges;
  if (!opts.drop_relate)
    for (std::size_t p = 0; p < V; ++p)
      for (std::size_t q = p + 1; q < V; ++q)
        if (kphs[p].source_gram.words == kphs[q].source_gram.words ||
            cosine(emb[p], emb[q]) > opts.cos_threshold) {
          edges.insert({p, q, EdgeType::Relate});
          edges.insert({q, p, EdgeType::Relate});
        }
  g.edges.assign(edges.begin(), edges.end());
  g.adjacency = Tensor(V, V);
  for (const Edge& e : g.edges) g.adjacency.at(e.from, e.to) = 1.0;
  g.normalized_adjacency = normalize_adjacency(g.adjacency);
  g.neighbors.resize(V);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t u = 0; u < V; ++u)
      if (v == u || g.adjacency.at(v, u) > 0.0) g.neighbors[v].push_back(u);
  return g;
}

inline HolisticGraph build_candidate_graph(const CandidateAnalysis& a, const HGNParams& params,
                                           const HGNConfig& cfg,
                                           const PrecomputedEmbeddings* pre = nullptr) {
  BuildOptions opts;
  opts.cos_threshold = cfg.cos_threshold;
  opts.drop_continue = cfg.drop_edge_continue;
  opts.drop_overlap = cfg.drop_edge_overlap;
  opts.drop_mention = cfg.drop_edge_mention;
  opts.drop_relate = cfg.drop_edge_relate;
  const auto emb = kph_embedding_values(a, params, cfg, pre);
  if (cfg.no_edu_nodes) return kph_only_graph(a.kph.phrases, emb, opts);
  return build_graph(a.seg.edus, a.kph.phrases, emb, opts);
}

// --- feature initialization ---------------------------------------------------

struct Features {
  Var H0;      // node features in graph id order
  Var H_sent;  // initial EDU feature sequence (always present)
  Var H_c;     // learned sequence summary standing in for the leading [CLS]
  std::vector<std::size_t> edu_rows;  // rows of H holding EDU nodes
  std::vector<std::size_t> kph_rows;
};

inline Features init_features(Tape& tape, const ParamVars& pv, const CandidateAnalysis& a,
                              const HGNConfig& cfg,
                              const PrecomputedEmbeddings* pre = nullptr) {
  detail::check_embedding_dim(pre, cfg);
  Var embed = pv["embed"];
  Var pos = pv["pos"];
  Var enc_w = pv["enc_w"];
  Var enc_b = pv["enc_b"];

  // token embeddings: word vector plus learned position vector; with
  // precomputed embeddings the known rows come from the file as constants and
  // only unknown words keep the trainable hashed lookup
  Var tok_words = tape.gather_rows(embed, a.token_buckets);
  if (pre) {
    const std::size_t T = a.token_buckets.size();
    Tensor fixed_rows(T, cfg.d);
    Tensor fallback_mask(T, cfg.d, 1.0);
    std::size_t row = 0;
    for (const auto* toks :
         {&a.seg.context_tokens, &a.seg.question_tokens, &a.seg.answer_tokens}) {
      for (const Token& t : *toks) {
        if (const auto* vec = pre->lookup(detail::to_lower(t.text))) {
          for (std::size_t j = 0; j < cfg.d; ++j) {
            fixed_rows.at(row, j) = (*vec)[j];
            fallback_mask.at(row, j) = 0.0;
          }
        }
        ++row;
      }
    }
    tok_words = tape.add(tape.constant(std::move(fixed_rows)),
                         tape.mul(tok_words, tape.constant(std::move(fallback_mask))));
  }
  Var tok_emb = tape.add(tok_words, tape.gather_rows(pos, a.token_positions));

  auto project = [&](Var x) { return tape.add(tape.matmul(x, enc_w), enc_b); };

  // one feature per EDU: projected mean over its tokens
  std::vector<Var> edu_feats;
  for (const Edu& e : a.seg.edus) {
    std::size_t offset = 0;
    switch (e.role) {
      case Role::Context: offset = a.ctx_offset; break;
      case Role::Question: offset = a.q_offset; break;
      case Role::Answer: offset = a.ans_offset; break;
    }
    std::vector<std::size_t> idx;
    for (std::size_t t = e.first_token; t <= e.last_token; ++t) idx.push_back(offset + t);
    edu_feats.push_back(project(tape.mean_rows(tape.gather_rows(tok_emb, idx))));
  }

  // one feature per KPH: plain mean of its word embeddings
  std::vector<Var> kph_feats;
  for (const KeyPhrase& p : a.kph.phrases) {
    std::vector<std::string> words;
    for (const Token& t : tokenize(p.surface))
      if (detail::is_word_token(t.text)) words.push_back(t.text);
    if (words.empty())
      throw std::invalid_argument("key phrase with no word tokens: " + p.surface);
    std::vector<std::size_t> buckets;
    for (const std::string& w : words) buckets.push_back(detail::bucket_of(w, cfg.hash_buckets));
    Var rows = tape.gather_rows(embed, buckets);
    if (pre) {
      Tensor fixed_rows(words.size(), cfg.d);
      Tensor fallback_mask(words.size(), cfg.d, 1.0);
      for (std::size_t r = 0; r < words.size(); ++r)
        if (const auto* vec = pre->lookup(detail::to_lower(words[r])))
          for (std::size_t j = 0; j < cfg.d; ++j) {
            fixed_rows.at(r, j) = (*vec)[j];
            fallback_mask.at(r, j) = 0.0;
          }
      rows = tape.add(tape.constant(std::move(fixed_rows)),
                      tape.mul(rows, tape.constant(std::move(fallback_mask))));
    }
    kph_feats.push_back(tape.mean_rows(rows));
  }

  Features f;
  f.H_sent = tape.stack_rows(edu_feats);
  f.H_c = project(tape.mean_rows(tok_emb));

  std::vector<Var> node_feats;
  if (!cfg.no_edu_nodes) {
    for (std::size_t i = 0; i < edu_feats.size(); ++i) f.edu_rows.push_back(i);
    node_feats = edu_feats;
  }
  for (auto& kf : kph_feats) {
    f.kph_rows.push_back(node_feats.size());
    node_feats.push_back(kf);
  }
  if (node_feats.empty()) throw std::invalid_argument("init_features: no graph nodes");
  f.H0 = tape.stack_rows(node_feats);
  return f;
}

// --- hierarchical interaction layers ------------------------------------------

struct AttnTrace {
  // [layer][node] -> (alpha_edu, alpha_kph); empty when type attention is off
  std::vector<std::vector<std::array<double, 2>>> type_weights;
  // [layer][node] -> (neighbor, weight); the attention mode's neighbor softmax
  std::vector<std::vector<std::vector<std::pair<std::size_t, double>>>> node_weights;
  // selector attention over KPH nodes
  std::vector<double> kph_attention;
};

// per-node aggregated feature of one node type: row v is
// sum over nodes u of that type of Ã_{vu} (W h_u); zero when v has no
// neighbors of the type
inline Var type_features(Tape& tape, const HolisticGraph& g, Var proj, NodeKind tau) {
  const std::size_t V = g.node_count();
  Tensor mask = g.normalized_adjacency;
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t u = 0; u < V; ++u) {
      const bool u_is_edu = u < g.edu_count;
      if ((tau == NodeKind::EduNode) != u_is_edu) mask.at(v, u) = 0.0;
    }
  return tape.matmul(tape.constant(mask), proj);
}

namespace detail {

// V x 2 matrix of type-level attention weights (columns: EDU, KPH)
inline Var type_attention(Tape& tape, const ParamVars& pv, const HolisticGraph& g, Var proj,
                          const HGNConfig& cfg) {
  // scores e_tau = leaky(mu_tau^T [W h_v || W_tau h_tau]) per node
  auto type_score = [&](NodeKind tau, const char* w_name, const char* attn_name) {
    Var type_feat = type_features(tape, g, proj, tau);
    Var projected = tape.matmul(type_feat, pv[w_name]);
    Var cat = tape.concat_cols(proj, projected);
    return tape.leaky_relu(tape.matmul(cat, pv[attn_name]), cfg.leaky_slope);
  };
  Var score_edu = type_score(NodeKind::EduNode, "type_w_edu", "type_attn_edu");
  Var score_kph = type_score(NodeKind::KphNode, "type_w_kph", "type_attn_kph");
  return tape.softmax_row(tape.concat_cols(score_edu, score_kph));  // V x 2
}

}  // namespace detail

// One propagation layer. In attention mode the neighbor weights are a
// softmax over N(v) of leaky(nu^T alpha_tau [W h_v || W h_v']); with node
// attention ablated the weights are the fixed normalized adjacency, which is
// the graph-convolution form.
inline Var hgn_layer(Tape& tape, const ParamVars& pv, const HolisticGraph& g, Var H,
                     const HGNConfig& cfg, AttnTrace* trace = nullptr) {
  const std::size_t V = g.node_count();
  Var proj = tape.matmul(H, pv["gnn_w"]);  // V x d

  Var attn;
  bool typed = false;
  Var alpha_types;
  if (cfg.no_node_attention) {
    attn = tape.constant(g.normalized_adjacency);
  } else {
    Var nu = pv["node_attn"];
    std::vector<std::size_t> head(cfg.d), tail(cfg.d);
    for (std::size_t i = 0; i < cfg.d; ++i) {
      head[i] = i;
      tail[i] = cfg.d + i;
    }
    Var u = tape.matmul(proj, tape.gather_rows(nu, head));  // V x 1
    Var w = tape.matmul(proj, tape.gather_rows(nu, tail));  // V x 1
    // B_{vv'} = u_v + w_{v'}
    Var B = tape.add(tape.matmul(u, tape.constant(Tensor(1, V, 1.0))),
                     tape.matmul(tape.constant(Tensor(V, 1, 1.0)), tape.transpose(w)));
    Var scores;
    if (cfg.no_type_attention) {
      scores = tape.leaky_relu(B, cfg.leaky_slope);
    } else {
      typed = true;
      alpha_types = detail::type_attention(tape, pv, g, proj, cfg);
      Tensor type_onehot(2, V);  // row: type ordinal, col: node
      for (std::size_t v = 0; v < V; ++v) type_onehot.at(v < g.edu_count ? 0 : 1, v) = 1.0;
      Var alpha_by_neighbor = tape.matmul(alpha_types, tape.constant(type_onehot));  // V x V
      scores = tape.leaky_relu(tape.mul(B, alpha_by_neighbor), cfg.leaky_slope);
    }
    // exclude non-neighbors from the softmax
    Tensor barrier(V, V, -1e30);
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t u2 : g.neighbors[v]) barrier.at(v, u2) = 0.0;
    attn = tape.softmax_row(tape.add(scores, tape.constant(barrier)));
  }

  if (trace) {
    std::vector<std::array<double, 2>> tw;
    if (typed) {
      const Tensor& at = tape.value(alpha_types);
      for (std::size_t v = 0; v < V; ++v) tw.push_back({at.at(v, 0), at.at(v, 1)});
    }
    trace->type_weights.push_back(std::move(tw));
    const Tensor& am = tape.value(attn);
    std::vector<std::vector<std::pair<std::size_t, double>>> nw(V);
    for (std::size_t v = 0; v < V; ++v)
      for (std::size_t u2 : g.neighbors[v]) nw[v].emplace_back(u2, am.at(v, u2));
    trace->node_weights.push_back(std::move(nw));
  }

  return tape.leaky_relu(tape.matmul(attn, proj), cfg.leaky_slope);
}

// --- answer selector -----------------------------------------------------------

namespace detail {

inline Var gru_direction(Tape& tape, const ParamVars& pv, Var seq, const std::string& prefix,
                         bool reverse, const HGNConfig& cfg) {
  const std::size_t l = tape.value(seq).rows;
  const std::size_t hd = cfg.gru_hidden();
  Var wz = pv[prefix + "wz"], uz = pv[prefix + "uz"], bz = pv[prefix + "bz"];
  Var wr = pv[prefix + "wr"], ur = pv[prefix + "ur"], br = pv[prefix + "br"];
  Var wn = pv[prefix + "wn"], un = pv[prefix + "un"], bn = pv[prefix + "bn"];
  Var h = tape.constant(Tensor(1, hd, 0.0));
  Var ones = tape.constant(Tensor(1, hd, 1.0));
  std::vector<Var> outputs(l);
  for (std::size_t step = 0; step < l; ++step) {
    const std::size_t t = reverse ? l - 1 - step : step;
    Var x = tape.row(seq, t);
    Var z = tape.sigmoid(tape.add(tape.add(tape.matmul(x, wz), tape.matmul(h, uz)), bz));
    Var r = tape.sigmoid(tape.add(tape.add(tape.matmul(x, wr), tape.matmul(h, ur)), br));
    Var n = tape.tanh(
        tape.add(tape.add(tape.matmul(x, wn), tape.matmul(tape.mul(r, h), un)), bn));
    h = tape.add(tape.mul(tape.sub(ones, z), n), tape.mul(z, h));
    outputs[t] = h;
  }
  return tape.stack_rows(outputs);  // l x hd
}

inline Var bigru(Tape& tape, const ParamVars& pv, Var seq, const HGNConfig& cfg) {
  Var fwd = gru_direction(tape, pv, seq, "gru_f_", false, cfg);
  Var bwd = gru_direction(tape, pv, seq, "gru_b_", true, cfg);
  return tape.concat_cols(fwd, bwd);  // l x d
}

}  // namespace detail

inline Var select_answer(Tape& tape, const ParamVars& pv, Var H_final, const Features& feats,
                         const HGNConfig& cfg, AttnTrace* trace = nullptr) {
  // EDU sequence with residual over the initial embeddings
  Var seq;
  if (feats.edu_rows.empty())
    seq = feats.H_sent;  // EDU nodes ablated away: encoder sequence only
  else
    seq = tape.add(tape.gather_rows(H_final, feats.edu_rows), feats.H_sent);
  Var tilde_E = cfg.no_bigru ? seq : detail::bigru(tape, pv, seq, cfg);

  // KPH side: attention against the sequence summary
  Var tilde_c;
  if (feats.kph_rows.empty()) {
    tilde_c = tape.add(tape.matmul(tape.constant(Tensor(1, cfg.d, 0.0)), pv["kph_out_w"]),
                       pv["kph_out_b"]);
  } else {
    Var H_K = tape.gather_rows(H_final, feats.kph_rows);  // nK x d
    Var pooled_k;
    if (cfg.no_kph_attention) {
      pooled_k = tape.mean_rows(H_K);
    } else {
      const std::size_t nK = feats.kph_rows.size();
      Var hc_rep = tape.gather_rows(feats.H_c, std::vector<std::size_t>(nK, 0));
      Var scores = tape.add(tape.matmul(tape.concat_cols(hc_rep, H_K), pv["kph_attn_w"]),
                            tape.gather_rows(pv["kph_attn_b"], std::vector<std::size_t>(nK, 0)));
      Var alpha = tape.softmax_row(tape.transpose(scores));  // 1 x nK
      if (trace) {
        trace->kph_attention.clear();
        const Tensor& av = tape.value(alpha);
        for (std::size_t i = 0; i < nK; ++i) trace->kph_attention.push_back(av.data[i]);
      }
      pooled_k = tape.matmul(alpha, H_K);
    }
    tilde_c = tape.add(tape.matmul(pooled_k, pv["kph_out_w"]), pv["kph_out_b"]);
  }

  // learned softmax pooling over sequence positions
  const std::size_t l = tape.value(tilde_E).rows;
  std::vector<std::size_t> pidx(l);
  for (std::size_t i = 0; i < l; ++i) pidx[i] = std::min(i, cfg.max_edus - 1);
  Var pw = tape.softmax_row(tape.transpose(tape.gather_rows(pv["pool_w"], pidx)));  // 1 x l
  Var pooled = tape.weighted_sum(pw, tilde_E);  // 1 x d

  Var fused = tape.matmul(tape.concat_cols(pooled, tilde_c), pv["fuse_w"]);  // 1 x d
  Var hidden = tape.tanh(tape.add(tape.matmul(fused, pv["mlp_w1"]), pv["mlp_b1"]));
  return tape.add(tape.matmul(hidden, pv["mlp_w2"]), pv["mlp_b2"]);  // 1 x 1 score
}

// full forward for one candidate
inline Var score_candidate(Tape& tape, const ParamVars& pv, const CandidateAnalysis& a,
                           const HolisticGraph& g, const HGNConfig& cfg,
                           AttnTrace* trace = nullptr,
                           const PrecomputedEmbeddings* pre = nullptr) {
  Features feats = init_features(tape, pv, a, cfg, pre);
  Var H = feats.H0;
  for (std::size_t layer = 0; layer < cfg.layers; ++layer)
    H = hgn_layer(tape, pv, g, H, cfg, trace);
  return select_answer(tape, pv, H, feats, cfg, trace);
}

// cross-entropy over the four candidate scores
inline Var candidate_loss(Tape& tape, const std::array<Var, 4>& scores, int label) {
  if (label < 0 || label > 3) throw std::invalid_argument("loss: label out of range");
  Var row = scores[0];
  for (int i = 1; i < 4; ++i) row = tape.concat_cols(row, scores[i]);
  Var logp = tape.log(tape.softmax_row(row));
  Tensor onehot(4, 1);
  onehot.data[static_cast<std::size_t>(label)] = 1.0;
  return tape.neg(tape.matmul(logp, tape.constant(onehot)));
}

// --- checkpoint io --------------------------------------------------------------

namespace detail {

constexpr char kCkptMagic[8] = {'H', 'G', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCkptVersion = 1;

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) return 0;  // caller checks the stream before trusting totals
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) return 0;
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in) {
  std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const HGNParams& params,
                            const HGNConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(detail::kCkptMagic, 8);
  detail::write_u32(out, detail::kCkptVersion);
  for (std::uint64_t v : {cfg.d, cfg.layers, cfg.k, cfg.ngram_len, cfg.min_word_len,
                          cfg.min_edu_tokens, cfg.hash_buckets, cfg.max_positions, cfg.max_edus})
    detail::write_u64(out, v);
  detail::write_f64(out, cfg.cos_threshold);
  detail::write_f64(out, cfg.leaky_slope);
  const bool flags[10] = {cfg.drop_edge_continue, cfg.drop_edge_overlap, cfg.drop_edge_mention,
                          cfg.drop_edge_relate,   cfg.no_type_attention, cfg.no_node_attention,
                          cfg.no_bigru,           cfg.no_kph_attention,  cfg.no_kph_nodes,
                          cfg.no_edu_nodes};
  for (bool f : flags) out.put(f ? 1 : 0);
  detail::write_u32(out, static_cast<std::uint32_t>(params.entries.size()));
  for (const auto& e : params.entries) {
    detail::write_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::write_u64(out, e.tensor.rows);
    detail::write_u64(out, e.tensor.cols);
    for (double v : e.tensor.data) detail::write_f64(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

struct Checkpoint {
  HGNConfig config;
  HGNParams params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kCkptMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  const std::uint32_t version = detail::read_u32(in);
  if (version != detail::kCkptVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  HGNConfig& cfg = ck.config;
  cfg.d = detail::read_u64(in);
  cfg.layers = detail::read_u64(in);
  cfg.k = detail::read_u64(in);
  cfg.ngram_len = detail::read_u64(in);
  cfg.min_word_len = detail::read_u64(in);
  cfg.min_edu_tokens = detail::read_u64(in);
  cfg.hash_buckets = detail::read_u64(in);
  cfg.max_positions = detail::read_u64(in);
  cfg.max_edus = detail::read_u64(in);
  cfg.cos_threshold = detail::read_f64(in);
  cfg.leaky_slope = detail::read_f64(in);
  bool flags[10];
  for (bool& f : flags) f = in.get() == 1;
  cfg.drop_edge_continue = flags[0];
  cfg.drop_edge_overlap = flags[1];
  cfg.drop_edge_mention = flags[2];
  cfg.drop_edge_relate = flags[3];
  cfg.no_type_attention = flags[4];
  cfg.no_node_attention = flags[5];
  cfg.no_bigru = flags[6];
  cfg.no_kph_attention = flags[7];
  cfg.no_kph_nodes = flags[8];
  cfg.no_edu_nodes = flags[9];
  const std::uint32_t count = detail::read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = detail::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint64_t rows = detail::read_u64(in);
    const std::uint64_t cols = detail::read_u64(in);
    Tensor t(rows, cols);
    for (double& v : t.data) v = detail::read_f64(in);
    ck.params.entries.push_back({std::move(name), std::move(t)});
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  cfg.validate();
  check_params_match(ck.params, cfg);
  return ck;
}

// --- precomputed embedding io ----------------------------------------------------

namespace detail {

constexpr char kEmbMagic[8] = {'H', 'G', 'N', 'E', 'M', 'B', '1', '\0'};

}  // namespace detail

// binary format so vectors round-trip bit-exactly
inline void save_embeddings(const std::string& path, const PrecomputedEmbeddings& emb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings " + path);
  out.write(detail::kEmbMagic, 8);
  detail::write_u64(out, emb.d);
  detail::write_u64(out, emb.vectors.size());
  for (const auto& [word, vec] : emb.vectors) {
    if (vec.size() != emb.d)
      throw std::invalid_argument("embedding for '" + word + "' has wrong dimension");
    detail::write_u32(out, static_cast<std::uint32_t>(word.size()));
    out.write(word.data(), static_cast<std::streamsize>(word.size()));
    for (double v : vec) detail::write_f64(out, v);
  }
  if (!out) throw std::runtime_error("embedding write failed: " + path);
}

inline PrecomputedEmbeddings load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read embeddings " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kEmbMagic, 8) != 0)
    throw std::runtime_error("not an embedding file: " + path);
  PrecomputedEmbeddings emb;
  emb.d = detail::read_u64(in);
  const std::uint64_t count = detail::read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t len = detail::read_u32(in);
    std::string word(len, '\0');
    in.read(word.data(), len);
    std::vector<double> vec(emb.d);
    for (double& v : vec) v = detail::read_f64(in);
    emb.vectors.emplace(std::move(word), std::move(vec));
  }
  if (!in) throw std::runtime_error("truncated embedding file: " + path);
  return emb;
}

}  // namespace hgn
