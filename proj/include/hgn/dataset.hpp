#pragma once

// Multiple-choice examples: JSONL loading/saving and a deterministic
// synthetic generator. Each synthetic context asserts topic/quality pairings
// joined by connectives; the gold answer restates one clause, the three
// distractors flip its polarity, swap the topic binding, or go off topic.

#include <array>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hgn/rng.hpp"

namespace hgn {

struct Example {
  std::string id;
  std::string context;
  std::string question;
  std::array<std::string, 4> answers;
  int label = 0;
};

inline std::vector<Example> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto complain = [&](const std::string& what) {
      problems.push_back("line " + std::to_string(lineno) + ": " + what);
    };
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      complain("not valid JSON");
      continue;
    }
    bool ok = true;
    for (const char* field : {"id", "context", "question", "answers", "label"})
      if (!j.contains(field)) {
        complain(std::string("missing field '") + field + "'");
        ok = false;
      }
    if (!ok) continue;
    if (!j["answers"].is_array() || j["answers"].size() != 4) {
      complain("expected exactly 4 answers");
      continue;
    }
    if (!j["label"].is_number_integer() || j["label"].get<int>() < 0 ||
        j["label"].get<int>() > 3) {
      complain("label out of range 0..3");
      continue;
    }
    Example e;
    e.id = j["id"].get<std::string>();
    e.context = j["context"].get<std::string>();
    e.question = j["question"].get<std::string>();
    for (int i = 0; i < 4; ++i) e.answers[static_cast<std::size_t>(i)] = j["answers"][i];
    e.label = j["label"].get<int>();
    out.push_back(std::move(e));
  }
  if (!problems.empty()) {
    std::string msg = "dataset " + path + " rejected:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::runtime_error(msg);
  }
  return out;
}

inline void save_dataset(const std::string& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path);
  for (const Example& e : examples) {
    nlohmann::json j;
    j["id"] = e.id;
    j["context"] = e.context;
    j["question"] = e.question;
    j["answers"] = e.answers;
    j["label"] = e.label;
    out << j.dump() << "\n";
  }
}

namespace detail {

// topics sort before the qualities so TF-IDF tie-breaks select topic grams;
// their stems then anchor the pluralized answer topics to the context
inline const std::vector<std::string>& synthetic_topics() {
  static const std::vector<std::string> topics = {
      "archer", "baker",    "banker", "barber", "broker", "builder",
      "carver", "dancer",   "doctor", "driver", "farmer", "fencer",
      "gardener", "guard",  "herder", "hunter"};
  return topics;
}

inline const std::vector<std::string>& synthetic_qualities() {
  static const std::vector<std::string> qualities = {
      "modest", "noble",  "patient", "polite", "proud",   "quiet",
      "rugged", "serene", "shrewd",  "sincere", "steady", "stern",
      "subtle", "tender", "wary",    "witty"};
  return qualities;
}

inline const std::vector<std::string>& synthetic_connectives() {
  static const std::vector<std::string> conn = {"because", "but",      "however", "therefore",
                                                "although", "moreover", "so",      "whereas"};
  return conn;
}

// answer fillers are stopwords: they never become key phrases, but they give
// every candidate the same amount of private lexical variation, which keeps
// untrained models at chance
inline const std::vector<std::string>& synthetic_fillers() {
  static const std::vector<std::string> fillers = {"again", "once", "only",  "very", "too",
                                                   "now",   "then", "there", "here", "just"};
  return fillers;
}

}  // namespace detail

// Deterministic 4-way consistency task. The gold answer restates one context
// clause verbatim; distractors are a polarity flip, a topic swap, and an
// off-topic statement. Gold positions are uniform.
inline std::vector<Example> gen_synthetic(std::uint64_t seed, std::size_t size) {
  if (size < 4) throw std::invalid_argument("gen_synthetic: size must be >= 4");
  const auto& topics = detail::synthetic_topics();
  const auto& qualities = detail::synthetic_qualities();
  const auto& connectives = detail::synthetic_connectives();
  Rng rng(seed);
  std::vector<Example> out;
  out.reserve(size);

  for (std::size_t idx = 0; idx < size; ++idx) {
    const std::size_t n_clauses = rng.uniform() < 0.25 ? 2 : 3;

    // distinct topics and qualities per instance
    std::vector<std::size_t> topic_ids, quality_ids;
    while (topic_ids.size() < n_clauses + 1) {  // one spare for the off-topic answer
      const std::size_t t = rng.index(topics.size());
      bool dup = false;
      for (std::size_t x : topic_ids) dup |= (x == t);
      if (!dup) topic_ids.push_back(t);
    }
    while (quality_ids.size() < n_clauses + 1) {
      const std::size_t q = rng.index(qualities.size());
      bool dup = false;
      for (std::size_t x : quality_ids) dup |= (x == q);
      if (!dup) quality_ids.push_back(q);
    }

    std::vector<bool> negated(n_clauses);
    for (std::size_t c = 0; c < n_clauses; ++c) negated[c] = rng.uniform() < 0.5;

    // half of the three-clause contexts carry an antonym pair: the last
    // clause reasserts the first clause's quality with opposite polarity
    if (n_clauses == 3 && rng.uniform() < 0.5) {
      quality_ids[2] = quality_ids[0];
      negated[2] = !negated[0];
    }

    auto clause = [&](std::size_t c, bool neg) {
      return "the " + topics[topic_ids[c]] + " is " + (neg ? "non-" : "") +
             qualities[quality_ids[c]];
    };

    std::string context = "The" + clause(0, negated[0]).substr(3);
    for (std::size_t c = 1; c < n_clauses; ++c)
      context += " " + connectives[rng.index(connectives.size())] + " " + clause(c, negated[c]);
    context += " .";

    const std::size_t target = rng.index(n_clauses);
    const std::size_t other = (target + 1) % n_clauses;

    const auto& fillers = detail::synthetic_fillers();
    std::vector<std::size_t> filler_ids;
    while (filler_ids.size() < 8) {
      const std::size_t f = rng.index(fillers.size());
      bool dup = false;
      for (std::size_t x : filler_ids) dup |= (x == f);
      if (!dup) filler_ids.push_back(f);
    }
    auto with_filler = [&](const std::string& body, std::size_t f) {
      return body + " " + fillers[filler_ids[2 * f]] + " " + fillers[filler_ids[2 * f + 1]] +
             " .";
    };

    // answers restate in the plural: topic words still match the context
    // through the stemmer (mention/overlap edges survive) without sharing the
    // context word's hash, which keeps untrained models near chance
    auto statement = [&](std::size_t topic_id, bool neg, std::size_t quality_id) {
      return "the " + topics[topic_id] + "s are " + (neg ? "non-" : "") +
             qualities[quality_id];
    };
    const std::string correct =
        with_filler(statement(topic_ids[target], negated[target], quality_ids[target]), 0);
    const std::string flipped =
        with_filler(statement(topic_ids[target], !negated[target], quality_ids[target]), 1);
    const std::string swapped =
        with_filler(statement(topic_ids[other], negated[target], quality_ids[target]), 2);
    // novel topic, borrowed quality: wrong because the subject is unmentioned
    const std::string off_topic =
        with_filler(statement(topic_ids[n_clauses], negated[other], quality_ids[other]), 3);

    Example e;
    e.id = "syn-" + std::to_string(seed) + "-" + std::to_string(idx);
    e.context = context;
    e.question = "which statement is consistent with the context ?";
    e.label = static_cast<int>(rng.index(4));
    std::vector<std::string> distractors = {flipped, swapped, off_topic};
    std::size_t d = 0;
    for (int slot = 0; slot < 4; ++slot) {
      if (slot == e.label)
        e.answers[static_cast<std::size_t>(slot)] = correct;
      else
        e.answers[static_cast<std::size_t>(slot)] = distractors[d++];
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace hgn
