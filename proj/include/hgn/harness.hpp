#pragma once

// Orchestration: training with Adam (decoupled weight decay, linear warmup
// then linear decay), evaluation with optional attention dumps, ablation
// comparisons, k sweeps, and the whole-pipeline gradient check.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hgn/dataset.hpp"
#include "hgn/model.hpp"

namespace hgn {

struct RunConfig {
  HGNConfig model;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double warmup = 0.1;  // proportion of total steps
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 7;

  void validate() const {
    model.validate();
    if (lr < 0.0) throw std::invalid_argument("run config: negative learning rate");
    if (epochs < 1) throw std::invalid_argument("run config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("run config: batch size must be >= 1");
    if (warmup < 0.0 || warmup >= 1.0)
      throw std::invalid_argument("run config: warmup proportion must be in [0, 1)");
  }
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> dev_accuracy;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::array<double, 4>> scores;
  std::vector<double> losses;  // per example
  nlohmann::json attention;    // per-example dumps when requested
};

// --- shared forward helpers ---------------------------------------------------

namespace detail {

struct AnalyzedExample {
  std::array<CandidateAnalysis, 4> candidates;
  int label = 0;
};

inline AnalyzedExample analyze_example(const Example& e, const HGNConfig& cfg) {
  AnalyzedExample a;
  a.label = e.label;
  for (std::size_t i = 0; i < 4; ++i)
    a.candidates[i] = analyze_candidate(e.context, e.question, e.answers[i], cfg);
  return a;
}

struct ExampleRun {
  Var loss;
  std::array<double, 4> scores{};
  int prediction = 0;
};

inline ExampleRun run_example(Tape& tape, const ParamVars& pv, const HGNParams& params,
                              const AnalyzedExample& ex, const HGNConfig& cfg,
                              std::array<AttnTrace, 4>* traces = nullptr,
                              const PrecomputedEmbeddings* pre = nullptr) {
  std::array<Var, 4> score_vars;
  for (std::size_t i = 0; i < 4; ++i) {
    const HolisticGraph g = build_candidate_graph(ex.candidates[i], params, cfg, pre);
    AttnTrace* trace = traces ? &(*traces)[i] : nullptr;
    score_vars[i] = score_candidate(tape, pv, ex.candidates[i], g, cfg, trace, pre);
  }
  ExampleRun run;
  for (std::size_t i = 0; i < 4; ++i) run.scores[i] = tape.value(score_vars[i]).data[0];
  run.prediction = 0;
  for (int i = 1; i < 4; ++i)
    if (run.scores[static_cast<std::size_t>(i)] >
        run.scores[static_cast<std::size_t>(run.prediction)])
      run.prediction = i;
  run.loss = candidate_loss(tape, score_vars, ex.label);
  return run;
}

}  // namespace detail

// --- optimizer -----------------------------------------------------------------

class AdamOptimizer {
 public:
  AdamOptimizer(const HGNParams& params, double lr, double weight_decay)
      : lr_(lr), weight_decay_(weight_decay) {
    for (const auto& e : params.entries) {
      m_.emplace_back(e.tensor.rows, e.tensor.cols);
      v_.emplace_back(e.tensor.rows, e.tensor.cols);
    }
  }

  // grads[i] pairs with params.entries[i]; lr_scale applies the schedule
  void step(HGNParams& params, const std::vector<Tensor>& grads, double lr_scale) {
    if (grads.size() != params.entries.size())
      throw std::invalid_argument("optimizer step: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const double lr = lr_ * lr_scale;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      Tensor& theta = params.entries[i].tensor;
      for (std::size_t j = 0; j < theta.data.size(); ++j) {
        const double g = grads[i].data[j];
        m_[i].data[j] = kBeta1 * m_[i].data[j] + (1.0 - kBeta1) * g;
        v_[i].data[j] = kBeta2 * v_[i].data[j] + (1.0 - kBeta2) * g * g;
        const double mhat = m_[i].data[j] / bc1;
        const double vhat = v_[i].data[j] / bc2;
        theta.data[j] -= lr * (mhat / (std::sqrt(vhat) + kEps) + weight_decay_ * theta.data[j]);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  std::vector<Tensor> m_, v_;
  double lr_;
  double weight_decay_;
  std::size_t t_ = 0;
};

// --- evaluation -----------------------------------------------------------------

inline EvalReport evaluate(const HGNParams& params, const HGNConfig& cfg,
                           const std::vector<Example>& data, bool dump_attention = false,
                           const PrecomputedEmbeddings* pre = nullptr) {
  cfg.validate();
  check_params_match(params, cfg);
  EvalReport report;
  report.attention = nlohmann::json::array();
  std::size_t correct = 0;
  for (const Example& e : data) {
    auto analyzed = detail::analyze_example(e, cfg);
    Tape tape;
    ParamVars pv(tape, params, false);
    std::array<AttnTrace, 4> traces;
    auto run = detail::run_example(tape, pv, params, analyzed, cfg,
                                   dump_attention ? &traces : nullptr, pre);
    report.predictions.push_back(run.prediction);
    report.scores.push_back(run.scores);
    report.losses.push_back(tape.value(run.loss).data[0]);
    if (run.prediction == e.label) ++correct;
    if (dump_attention) {
      nlohmann::json ex;
      ex["id"] = e.id;
      ex["candidates"] = nlohmann::json::array();
      for (std::size_t i = 0; i < 4; ++i) {
        nlohmann::json cand;
        cand["kph_attention"] = traces[i].kph_attention;
        cand["layers"] = nlohmann::json::array();
        for (std::size_t layer = 0; layer < traces[i].node_weights.size(); ++layer) {
          nlohmann::json lj;
          lj["node_attention"] = nlohmann::json::array();
          for (std::size_t v = 0; v < traces[i].node_weights[layer].size(); ++v) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& [u, w] : traces[i].node_weights[layer][v])
              row.push_back({{"to", u}, {"weight", w}});
            lj["node_attention"].push_back(row);
          }
          if (!traces[i].type_weights[layer].empty()) {
            lj["type_attention"] = nlohmann::json::array();
            for (const auto& tw : traces[i].type_weights[layer])
              lj["type_attention"].push_back({tw[0], tw[1]});
          }
          cand["layers"].push_back(lj);
        }
        ex["candidates"].push_back(cand);
      }
      report.attention.push_back(ex);
    }
  }
  report.accuracy = data.empty() ? 0.0 : static_cast<double>(correct) / data.size();
  return report;
}

// accuracy of an arbitrary scorer, for harness plumbing tests
inline double scorer_accuracy(const std::vector<Example>& data,
                              const std::function<std::array<double, 4>(const Example&)>& scorer) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Example& e : data) {
    const auto scores = scorer(e);
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
    if (best == e.label) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

// --- training --------------------------------------------------------------------

struct TrainResult {
  HGNParams params;  // best dev accuracy when a dev set is given, else final
  TrainReport report;
};

inline TrainResult train(const std::vector<Example>& train_set,
                         const std::vector<Example>& dev_set, const RunConfig& rc,
                         const PrecomputedEmbeddings* pre = nullptr) {
  rc.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  const HGNConfig& cfg = rc.model;

  HGNParams params = HGNParams::init(cfg, rc.seed);
  AdamOptimizer adam(params, rc.lr, rc.weight_decay);
  Rng shuffle_rng(rc.seed ^ 0x5DEECE66DULL);

  std::vector<detail::AnalyzedExample> analyzed;
  analyzed.reserve(train_set.size());
  for (const Example& e : train_set) analyzed.push_back(detail::analyze_example(e, cfg));

  const std::size_t batches_per_epoch =
      (train_set.size() + rc.batch_size - 1) / rc.batch_size;
  const std::size_t total_steps = rc.epochs * batches_per_epoch;
  const double warmup_steps = rc.warmup * static_cast<double>(total_steps);
  std::size_t step = 0;
  auto lr_scale = [&]() {
    const double s = static_cast<double>(step);
    if (warmup_steps > 0.0 && s < warmup_steps) return (s + 1.0) / warmup_steps;
    const double total = static_cast<double>(total_steps);
    if (total <= warmup_steps) return 1.0;
    return (total - s) / (total - warmup_steps);
  };

  TrainResult result;
  result.params = params;
  TrainReport& report = result.report;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < rc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t begin = b * rc.batch_size;
      const std::size_t end = std::min(begin + rc.batch_size, train_set.size());
      if (begin >= end) break;
      std::vector<Tensor> grads;
      for (const auto& e : params.entries) grads.emplace_back(e.tensor.rows, e.tensor.cols);
      for (std::size_t i = begin; i < end; ++i) {
        Tape tape;
        ParamVars pv(tape, params, true);
        auto run = detail::run_example(tape, pv, params, analyzed[order[i]], cfg, nullptr, pre);
        const double loss_value = tape.value(run.loss).data[0];
        if (!std::isfinite(loss_value))
          throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                                   ", example " + train_set[order[i]].id);
        loss_sum += loss_value;
        tape.backward(run.loss);
        for (std::size_t p = 0; p < grads.size(); ++p) {
          const Tensor g = tape.grad(pv.vars()[p]);
          for (std::size_t j = 0; j < g.data.size(); ++j) grads[p].data[j] += g.data[j];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (auto& g : grads)
        for (double& v : g.data) v *= inv;
      adam.step(params, grads, lr_scale());
      ++step;
    }
    report.epoch_loss.push_back(loss_sum / static_cast<double>(train_set.size()));

    if (!dev_set.empty()) {
      const double acc = evaluate(params, cfg, dev_set, false, pre).accuracy;
      report.dev_accuracy.push_back(acc);
      if (acc > report.best_dev_accuracy || epoch == 0) {
        report.best_dev_accuracy = acc;
        report.best_epoch = epoch;
        result.params = params;
      }
    } else {
      result.params = params;
    }
  }
  return result;
}

// --- ablations and sweeps ----------------------------------------------------------

inline void apply_ablation_flag(HGNConfig& cfg, const std::string& flag) {
  if (flag == "no-edu") cfg.no_edu_nodes = true;
  else if (flag == "no-kph") cfg.no_kph_nodes = true;
  else if (flag == "no-continue") cfg.drop_edge_continue = true;
  else if (flag == "no-overlap") cfg.drop_edge_overlap = true;
  else if (flag == "no-mention") cfg.drop_edge_mention = true;
  else if (flag == "no-relate") cfg.drop_edge_relate = true;
  else if (flag == "no-type-attention") cfg.no_type_attention = true;
  else if (flag == "no-node-attention") cfg.no_node_attention = true;
  else if (flag == "gcn") { cfg.no_type_attention = true; cfg.no_node_attention = true; }
  else if (flag == "no-bigru") cfg.no_bigru = true;
  else if (flag == "no-kph-attention") cfg.no_kph_attention = true;
  else throw std::invalid_argument("unknown ablation flag: " + flag);
}

inline const std::vector<std::string>& default_ablation_flags() {
  static const std::vector<std::string> flags = {
      "no-edu",           "no-kph",  "no-continue",      "no-overlap", "no-mention",
      "no-type-attention", "gcn",     "no-bigru",         "no-kph-attention"};
  return flags;
}

struct AblationRow {
  std::string name;
  double dev_accuracy = 0.0;
  double delta = 0.0;  // against the unablated baseline
};

struct AblationReport {
  std::vector<AblationRow> rows;  // first row is the baseline
};

inline AblationReport ablate(const std::vector<Example>& train_set,
                             const std::vector<Example>& dev_set, const RunConfig& rc,
                             const std::vector<std::string>& flags = default_ablation_flags()) {
  // validate every variant before spending any training time
  for (const std::string& flag : flags) {
    HGNConfig cfg = rc.model;
    apply_ablation_flag(cfg, flag);
    cfg.validate();
  }
  AblationReport report;
  const double baseline = train(train_set, dev_set, rc).report.best_dev_accuracy;
  report.rows.push_back({"full", baseline, 0.0});
  for (const std::string& flag : flags) {
    RunConfig variant = rc;
    apply_ablation_flag(variant.model, flag);
    const double acc = train(train_set, dev_set, variant).report.best_dev_accuracy;
    report.rows.push_back({flag, acc, acc - baseline});
  }
  return report;
}

struct SweepRow {
  std::size_t k = 0;
  double dev_accuracy = 0.0;
};

inline std::vector<SweepRow> sweep_k(const std::vector<Example>& train_set,
                                     const std::vector<Example>& dev_set, const RunConfig& rc,
                                     const std::vector<std::size_t>& k_values) {
  if (k_values.empty()) throw std::invalid_argument("sweep_k: no k values");
  std::vector<SweepRow> rows;
  for (std::size_t k : k_values) {
    RunConfig variant = rc;
    variant.model.k = k;
    rows.push_back({k, train(train_set, dev_set, variant).report.best_dev_accuracy});
  }
  return rows;
}

// --- whole-pipeline gradient check ---------------------------------------------------

inline HGNConfig gradcheck_config() {
  HGNConfig cfg;
  cfg.d = 8;
  cfg.layers = 2;
  cfg.hash_buckets = 53;
  cfg.max_positions = 48;
  cfg.max_edus = 8;
  return cfg;
}

// fixed instance: 4 context EDUs + question + answer = 6 EDUs, 3 key phrases
inline Example gradcheck_fixture() {
  Example e;
  e.id = "gradcheck-fixture";
  e.context =
      "Most of the teachers are eccentric , because some of them explain with unusual "
      "examples . Students remember the unusual examples , although some of the teachers "
      "prefer plain lessons .";
  e.question = "which claim is supported ?";
  e.answers = {"the eccentric teachers are memorable .",
               "the eccentric teachers are non-memorable .",
               "the plain students are memorable .",
               "the unusual lessons are memorable ."};
  e.label = 0;
  return e;
}

struct PipelineGradCheck {
  GradCheckReport report;
  std::size_t edu_count = 0;
  std::size_t kph_count = 0;
};

// Central-difference check of the full four-candidate loss on the fixture,
// with the graphs frozen at the initial parameters so only the differentiable
// path varies. `corrupt_gradient` damages one analytic entry on purpose as a
// negative control.
inline PipelineGradCheck gradcheck_pipeline(const HGNConfig& cfg = gradcheck_config(),
                                            bool corrupt_gradient = false,
                                            double h = 1e-4, double tol = 1e-4) {
  cfg.validate();
  HGNParams params = HGNParams::init(cfg, 42);
  const Example fixture = gradcheck_fixture();
  auto analyzed = detail::analyze_example(fixture, cfg);
  std::array<HolisticGraph, 4> graphs;
  for (std::size_t i = 0; i < 4; ++i)
    graphs[i] = build_candidate_graph(analyzed.candidates[i], params, cfg);

  auto forward_loss = [&](Tape& tape, const ParamVars& pv) {
    std::array<Var, 4> scores;
    for (std::size_t i = 0; i < 4; ++i)
      scores[i] = score_candidate(tape, pv, analyzed.candidates[i], graphs[i], cfg);
    return candidate_loss(tape, scores, fixture.label);
  };

  auto eval_loss = [&]() {
    Tape tape;
    ParamVars pv(tape, params, false);
    return tape.value(forward_loss(tape, pv)).data[0];
  };

  Tape tape;
  ParamVars pv(tape, params, true);
  Var loss = forward_loss(tape, pv);
  tape.backward(loss);

  std::map<std::string, Tensor> analytic;
  std::vector<std::pair<std::string, Tensor*>> probe;
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    analytic[params.entries[i].name] = tape.grad(pv.vars()[i]);
    probe.emplace_back(params.entries[i].name, &params.entries[i].tensor);
  }
  if (corrupt_gradient) analytic["gnn_w"].data[0] += 0.5;

  PipelineGradCheck out;
  out.edu_count = graphs[0].edu_count;
  out.kph_count = graphs[0].kph_count;
  out.report = grad_check(eval_loss, probe, analytic, h, tol);
  return out;
}

// --- report serialization --------------------------------------------------------------

inline nlohmann::json to_json(const TrainReport& r) {
  return {{"epoch_loss", r.epoch_loss},
          {"dev_accuracy", r.dev_accuracy},
          {"best_epoch", r.best_epoch},
          {"best_dev_accuracy", r.best_dev_accuracy}};
}

inline nlohmann::json to_json(const EvalReport& r, bool include_attention = false) {
  nlohmann::json j = {{"accuracy", r.accuracy},
                      {"predictions", r.predictions},
                      {"scores", r.scores},
                      {"mean_loss",
                       r.losses.empty()
                           ? 0.0
                           : std::accumulate(r.losses.begin(), r.losses.end(), 0.0) /
                                 static_cast<double>(r.losses.size())}};
  if (include_attention) j["attention"] = r.attention;
  return j;
}

inline nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"model", row.name},
                    {"dev_accuracy", row.dev_accuracy},
                    {"delta", row.delta}});
  return {{"rows", rows}};
}

inline nlohmann::json to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows)
    arr.push_back({{"k", row.k}, {"dev_accuracy", row.dev_accuracy}});
  return {{"rows", arr}};
}

inline nlohmann::json to_json(const GradCheckReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"param", e.name},
                       {"max_rel_err", e.max_rel_err},
                       {"worst_index", e.worst_index}});
  return {{"pass", r.pass}, {"tol", r.tol}, {"max_rel_err", r.max_rel_err},
          {"params", entries}};
}

}  // namespace hgn
