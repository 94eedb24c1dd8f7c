// Command-line front end: segmentation, key-phrase extraction, graph export,
// synthetic data generation, training, evaluation, ablations, k sweeps,
// gradient checking and parameter counting.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hgn/harness.hpp"

namespace {

using nlohmann::json;

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << j.dump(2) << "\n";
}

void emit_lines(const std::vector<json>& lines, const std::string& out_path) {
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    os = &file;
  }
  for (const auto& j : lines) *os << j.dump() << "\n";
}

struct ModelFlags {
  hgn::HGNConfig cfg;

  void attach(CLI::App* cmd) {
    cmd->add_option("--d", cfg.d, "feature dimension (even)");
    cmd->add_option("--layers", cfg.layers, "number of propagation layers");
    cmd->add_option("--k", cfg.k, "number of key phrases");
    cmd->add_option("--ngram-len", cfg.ngram_len, "maximum n-gram length");
    cmd->add_option("--min-word-len", cfg.min_word_len, "minimum word length for grams");
    cmd->add_option("--threshold", cfg.cos_threshold, "cosine threshold for relate edges");
    cmd->add_option("--slope", cfg.leaky_slope, "leaky ReLU slope");
    cmd->add_option("--min-edu-tokens", cfg.min_edu_tokens, "EDU length floor");
    cmd->add_option("--buckets", cfg.hash_buckets, "embedding hash buckets");
    cmd->add_option("--max-positions", cfg.max_positions, "position table size");
    cmd->add_option("--max-edus", cfg.max_edus, "pooling table size");
    cmd->add_flag("--no-continue", cfg.drop_edge_continue, "drop continue edges");
    cmd->add_flag("--no-overlap", cfg.drop_edge_overlap, "drop overlap edges");
    cmd->add_flag("--no-mention", cfg.drop_edge_mention, "drop mention edges");
    cmd->add_flag("--no-relate", cfg.drop_edge_relate, "drop relate edges");
    cmd->add_flag("--no-type-attention", cfg.no_type_attention, "disable type-level attention");
    cmd->add_flag("--no-node-attention", cfg.no_node_attention,
                  "disable node-level attention (convolution form)");
    cmd->add_flag("--no-bigru", cfg.no_bigru, "bypass the BiGRU");
    cmd->add_flag("--no-kph-attention", cfg.no_kph_attention, "mean-pool KPH features");
    cmd->add_flag("--no-kph", cfg.no_kph_nodes, "remove KPH nodes");
    cmd->add_flag("--no-edu", cfg.no_edu_nodes, "remove EDU nodes");
  }
};

struct RunFlags {
  hgn::RunConfig rc;

  void attach(CLI::App* cmd, ModelFlags& model) {
    model.attach(cmd);
    cmd->add_option("--lr", rc.lr, "learning rate");
    cmd->add_option("--weight-decay", rc.weight_decay, "decoupled weight decay");
    cmd->add_option("--warmup", rc.warmup, "warmup proportion of total steps");
    cmd->add_option("--epochs", rc.epochs, "training epochs");
    cmd->add_option("--batch-size", rc.batch_size, "examples per optimizer step");
    cmd->add_option("--seed", rc.seed, "random seed");
  }

  hgn::RunConfig finalize(const ModelFlags& model) {
    rc.model = model.cfg;
    rc.validate();
    return rc;
  }
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holistic graph network for logical reading comprehension"};
  app.require_subcommand(1);

  // --- segment ---------------------------------------------------------------
  auto* seg_cmd = app.add_subcommand("segment", "split text into discourse units");
  std::string seg_context, seg_answer, seg_question, seg_out;
  std::size_t seg_min_tokens = 2;
  seg_cmd->add_option("--context", seg_context, "context text")->required();
  seg_cmd->add_option("--answer", seg_answer, "answer text")->required();
  seg_cmd->add_option("--question", seg_question, "question text");
  seg_cmd->add_option("--min-edu-tokens", seg_min_tokens, "EDU length floor");
  seg_cmd->add_option("--out", seg_out, "output path (default stdout)");
  seg_cmd->set_config("--config");

  // --- kph -------------------------------------------------------------------
  auto* kph_cmd = app.add_subcommand("kph", "extract key phrases");
  std::string kph_text, kph_file, kph_out;
  hgn::KphConfig kph_cfg;
  kph_cmd->add_option("--text", kph_text, "input text");
  kph_cmd->add_option("--file", kph_file, "read input text from a file");
  kph_cmd->add_option("--n", kph_cfg.n, "maximum n-gram length");
  kph_cmd->add_option("--m", kph_cfg.m, "minimum word length");
  kph_cmd->add_option("--k", kph_cfg.k, "number of key phrases");
  kph_cmd->add_option("--out", kph_out, "output path (default stdout)");
  kph_cmd->set_config("--config");

  // --- graph -------------------------------------------------------------------
  auto* graph_cmd = app.add_subcommand("graph", "build and export a holistic graph");
  std::string g_context, g_answer, g_question, g_format = "json", g_out;
  std::uint64_t g_seed = 7;
  ModelFlags graph_model;
  graph_model.attach(graph_cmd);
  graph_cmd->add_option("--context", g_context, "context text")->required();
  graph_cmd->add_option("--answer", g_answer, "answer text")->required();
  graph_cmd->add_option("--question", g_question, "question text");
  graph_cmd->add_option("--format", g_format, "dot or json")
      ->check(CLI::IsMember({"dot", "json"}));
  graph_cmd->add_option("--seed", g_seed, "seed for the embedding table");
  std::string g_embeddings;
  graph_cmd->add_option("--embeddings", g_embeddings, "precomputed embedding file");
  graph_cmd->add_option("--out", g_out, "output path (default stdout)");
  graph_cmd->set_config("--config");

  // --- gen-data -----------------------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::uint64_t gen_seed = 7;
  std::size_t gen_size = 1200;
  std::string gen_out;
  gen_cmd->add_option("--seed", gen_seed, "generator seed");
  gen_cmd->add_option("--size", gen_size, "number of examples");
  gen_cmd->add_option("--out", gen_out, "output JSONL path")->required();
  gen_cmd->set_config("--config");

  // --- train ----------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train on a JSONL dataset");
  std::string train_data, train_dev, train_ckpt, train_report;
  ModelFlags train_model;
  RunFlags train_run;
  train_run.attach(train_cmd, train_model);
  train_cmd->add_option("--data", train_data, "training JSONL")->required();
  train_cmd->add_option("--dev", train_dev, "development JSONL");
  std::string train_embeddings;
  train_cmd->add_option("--embeddings", train_embeddings, "precomputed embedding file");
  train_cmd->add_option("--checkpoint", train_ckpt, "checkpoint output path");
  train_cmd->add_option("--report", train_report, "report path (default stdout)");
  train_cmd->set_config("--config");

  // --- eval -----------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data, eval_out;
  bool eval_attention = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "evaluation JSONL")->required();
  std::string eval_embeddings;
  eval_cmd->add_option("--embeddings", eval_embeddings, "precomputed embedding file");
  eval_cmd->add_flag("--dump-attention", eval_attention, "include attention weights");
  eval_cmd->add_option("--out", eval_out, "report path (default stdout)");
  eval_cmd->set_config("--config");

  // --- ablate -----------------------------------------------------------------------
  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare ablated variants");
  std::string ab_data, ab_dev, ab_out;
  std::vector<std::string> ab_flags = hgn::default_ablation_flags();
  ModelFlags ab_model;
  RunFlags ab_run;
  ab_run.attach(ablate_cmd, ab_model);
  ablate_cmd->add_option("--data", ab_data, "training JSONL")->required();
  ablate_cmd->add_option("--dev", ab_dev, "development JSONL")->required();
  ablate_cmd->add_option("--flags", ab_flags, "ablation flags to run")->delimiter(',');
  ablate_cmd->add_option("--out", ab_out, "report path (default stdout)");
  ablate_cmd->set_config("--config");

  // --- sweep-k -----------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep-k", "dev accuracy for several k values");
  std::string sw_data, sw_dev, sw_out;
  std::vector<std::size_t> sw_ks = {1, 2, 3, 4, 5, 6};
  ModelFlags sw_model;
  RunFlags sw_run;
  sw_run.attach(sweep_cmd, sw_model);
  sweep_cmd->add_option("--data", sw_data, "training JSONL")->required();
  sweep_cmd->add_option("--dev", sw_dev, "development JSONL")->required();
  sweep_cmd->add_option("--k-values", sw_ks, "k values to sweep")->delimiter(',');
  sweep_cmd->add_option("--out", sw_out, "report path (default stdout)");
  sweep_cmd->set_config("--config");

  // --- gradcheck -----------------------------------------------------------------------
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the pipeline");
  double gc_h = 1e-4, gc_tol = 1e-4;
  bool gc_corrupt = false;
  std::string gc_out;
  ModelFlags gc_model;
  gc_model.cfg = hgn::gradcheck_config();
  gc_model.attach(grad_cmd);
  grad_cmd->add_option("--step", gc_h, "finite-difference step");
  grad_cmd->add_option("--tol", gc_tol, "relative error tolerance");
  grad_cmd->add_flag("--corrupt", gc_corrupt, "damage one gradient as a negative control");
  grad_cmd->add_option("--out", gc_out, "report path (default stdout)");
  grad_cmd->set_config("--config");

  // --- params ------------------------------------------------------------------------
  auto* params_cmd = app.add_subcommand("params", "count learnable parameters");
  ModelFlags params_model;
  std::string params_out;
  params_model.attach(params_cmd);
  params_cmd->add_option("--out", params_out, "output path (default stdout)");
  params_cmd->set_config("--config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*seg_cmd) {
      auto res = hgn::segment(seg_context, seg_answer, seg_question, seg_min_tokens);
      std::vector<json> lines;
      for (const auto& edu : res.edus)
        lines.push_back({{"id", edu.id},
                         {"role", hgn::role_name(edu.role)},
                         {"text", edu.text},
                         {"span", {edu.first_token, edu.last_token}}});
      emit_lines(lines, seg_out);
    } else if (*kph_cmd) {
      if (kph_text.empty() && kph_file.empty())
        throw std::runtime_error("kph: provide --text or --file");
      const std::string text = kph_text.empty() ? read_text_file(kph_file) : kph_text;
      auto res = hgn::extract_key_phrases(text, kph_cfg);
      json phrases = json::array();
      for (const auto& p : res.phrases)
        phrases.push_back({{"surface", p.surface},
                           {"source_gram", p.source_gram.joined()},
                           {"weight", p.weight}});
      emit({{"phrases", phrases}, {"short_of_k", res.short_of_k}}, kph_out);
    } else if (*graph_cmd) {
      graph_model.cfg.validate();
      auto params = hgn::HGNParams::init(graph_model.cfg, g_seed);
      auto analysis = hgn::analyze_candidate(g_context, g_question, g_answer, graph_model.cfg);
      hgn::PrecomputedEmbeddings g_pre;
      if (!g_embeddings.empty()) g_pre = hgn::load_embeddings(g_embeddings);
      auto graph = hgn::build_candidate_graph(analysis, params, graph_model.cfg,
                                              g_embeddings.empty() ? nullptr : &g_pre);
      if (g_format == "dot") {
        const std::string dot = hgn::to_dot(graph, analysis.seg.edus, analysis.kph.phrases);
        if (g_out.empty()) {
          std::cout << dot;
        } else {
          std::ofstream out(g_out);
          if (!out) throw std::runtime_error("cannot write " + g_out);
          out << dot;
        }
      } else {
        emit(hgn::graph_to_json(graph, analysis.seg.edus, analysis.kph.phrases), g_out);
      }
    } else if (*gen_cmd) {
      hgn::save_dataset(gen_out, hgn::gen_synthetic(gen_seed, gen_size));
      std::cout << "wrote " << gen_size << " examples to " << gen_out << "\n";
    } else if (*train_cmd) {
      auto rc = train_run.finalize(train_model);
      auto data = hgn::load_dataset(train_data);
      std::vector<hgn::Example> dev;
      if (!train_dev.empty()) dev = hgn::load_dataset(train_dev);
      hgn::PrecomputedEmbeddings train_pre;
      if (!train_embeddings.empty()) train_pre = hgn::load_embeddings(train_embeddings);
      auto result = hgn::train(data, dev, rc, train_embeddings.empty() ? nullptr : &train_pre);
      if (!train_ckpt.empty()) hgn::save_checkpoint(train_ckpt, result.params, rc.model);
      emit(hgn::to_json(result.report), train_report);
    } else if (*eval_cmd) {
      auto ck = hgn::load_checkpoint(eval_ckpt);
      auto data = hgn::load_dataset(eval_data);
      hgn::PrecomputedEmbeddings eval_pre;
      if (!eval_embeddings.empty()) eval_pre = hgn::load_embeddings(eval_embeddings);
      auto report = hgn::evaluate(ck.params, ck.config, data, eval_attention,
                                  eval_embeddings.empty() ? nullptr : &eval_pre);
      emit(hgn::to_json(report, eval_attention), eval_out);
    } else if (*ablate_cmd) {
      auto rc = ab_run.finalize(ab_model);
      auto report = hgn::ablate(hgn::load_dataset(ab_data), hgn::load_dataset(ab_dev), rc,
                                ab_flags);
      emit(hgn::to_json(report), ab_out);
    } else if (*sweep_cmd) {
      auto rc = sw_run.finalize(sw_model);
      auto rows = hgn::sweep_k(hgn::load_dataset(sw_data), hgn::load_dataset(sw_dev), rc, sw_ks);
      emit(hgn::to_json(rows), sw_out);
    } else if (*grad_cmd) {
      auto result = hgn::gradcheck_pipeline(gc_model.cfg, gc_corrupt, gc_h, gc_tol);
      json j = hgn::to_json(result.report);
      j["fixture"] = {{"edus", result.edu_count}, {"kphs", result.kph_count}};
      emit(j, gc_out);
      return result.report.pass ? 0 : 1;
    } else if (*params_cmd) {
      params_model.cfg.validate();
      auto params = hgn::HGNParams::init(params_model.cfg, 0);
      json shapes = json::object();
      for (const auto& e : params.entries)
        shapes[e.name] = {e.tensor.rows, e.tensor.cols};
      emit({{"param_count", params.param_count()}, {"shapes", shapes}}, params_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
