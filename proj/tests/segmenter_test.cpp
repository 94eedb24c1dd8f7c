#include "hgn/segmenter.hpp"

#include <algorithm>

#include "doctest.h"

using namespace hgn;

namespace {

std::string strip_ws(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

std::string concat_tokens(const std::vector<Token>& toks) {
  std::string out;
  for (const auto& t : toks) out += t.text;
  return out;
}

}  // namespace

TEST_CASE("tokenize: empty input gives no tokens") {
  CHECK(tokenize("").empty());
}

TEST_CASE("tokenize: punctuation splits, hyphenated words stay whole") {
  auto toks = tokenize("eccentric, non-eccentric");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].text == "eccentric");
  CHECK(toks[1].text == ",");
  CHECK(toks[2].text == "non-eccentric");
  CHECK(toks[0].begin == 0);
  CHECK(toks[0].end == 9);
  CHECK(toks[1].begin == 9);
  CHECK(toks[2].begin == 11);
}

TEST_CASE("tokenize: whitespace split count") {
  CHECK(tokenize("who are effective teachers").size() == 4);
}

TEST_CASE("tokenize: spans are non-empty, non-overlapping, increasing; no content lost") {
  const std::string samples[] = {
      "Most effective teachers are eccentric, but some are good communicators.",
      "a (b) c... d!?",
      "  leading and trailing  ",
      "unicode caf\xc3\xa9 tokens"};
  for (const std::string& text : samples) {
    auto toks = tokenize(text);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      CHECK(toks[i].begin < toks[i].end);
      CHECK(toks[i].index == i);
      if (i > 0) CHECK(toks[i].begin >= toks[i - 1].end);
    }
    CHECK(concat_tokens(toks) == strip_ws(text));
  }
}

TEST_CASE("segment: connective 'but' opens a new context EDU") {
  auto res = segment("Most effective teachers are eccentric, but some are good communicators.",
                     "Some teachers are dull.", "");
  std::vector<Edu> ctx;
  for (const auto& e : res.edus)
    if (e.role == Role::Context) ctx.push_back(e);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx[0].text == "Most effective teachers are eccentric,");
  CHECK(ctx[1].text == "but some are good communicators.");
}

TEST_CASE("segment: single-sentence inputs with empty question give [Context, Answer]") {
  auto res = segment("X.", "Y.", "");
  REQUIRE(res.edus.size() == 2);
  CHECK(res.edus[0].role == Role::Context);
  CHECK(res.edus[1].role == Role::Answer);
  CHECK(res.edus[0].id == 0);
  CHECK(res.edus[1].id == 1);
}

TEST_CASE("segment: clause starter 'who' splits even when the head is short") {
  auto res = segment("teachers who are effective teachers succeed", "fine answer here", "");
  std::vector<Edu> ctx;
  for (const auto& e : res.edus)
    if (e.role == Role::Context) ctx.push_back(e);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx[0].text == "teachers");
  CHECK(ctx[1].text == "who are effective teachers succeed");
}

TEST_CASE("segment: question becomes one EDU between context and answer") {
  auto res = segment("The sky is blue. However the sea looks green.",
                     "The sea is not blue.", "Which claim follows?");
  REQUIRE(res.edus.size() >= 4);
  std::vector<Role> roles;
  for (const auto& e : res.edus) roles.push_back(e.role);
  auto qcount = std::count(roles.begin(), roles.end(), Role::Question);
  CHECK(qcount == 1);
  // roles must appear as a Context block, then Question, then Answer block
  std::size_t qpos = 0;
  for (std::size_t i = 0; i < roles.size(); ++i)
    if (roles[i] == Role::Question) qpos = i;
  for (std::size_t i = 0; i < qpos; ++i) CHECK(roles[i] == Role::Context);
  for (std::size_t i = qpos + 1; i < roles.size(); ++i) CHECK(roles[i] == Role::Answer);
}

TEST_CASE("segment: short fragment merges into its left neighbour") {
  // "World" alone is below the two-token floor, so it merges left
  auto res = segment("Hello there . World", "an answer text", "");
  std::vector<Edu> ctx;
  for (const auto& e : res.edus)
    if (e.role == Role::Context) ctx.push_back(e);
  REQUIRE(ctx.size() == 1);
  CHECK(ctx[0].text == "Hello there . World");

  // both sides at or above the floor stay separate
  auto res2 = segment("It is good . That was fine .", "an answer text", "");
  std::vector<Edu> ctx2;
  for (const auto& e : res2.edus)
    if (e.role == Role::Context) ctx2.push_back(e);
  REQUIRE(ctx2.size() == 2);
  CHECK(ctx2[0].text == "It is good .");
  CHECK(ctx2[1].text == "That was fine .");
}

TEST_CASE("segment: per-role spans partition the role tokens in order") {
  auto res = segment(
      "Jill plans carefully because the budget is tight. The team, however, moves fast; "
      "progress that stalls is rare.",
      "The team succeeds because planning is careful.", "What explains the outcome?");
  for (Role role : {Role::Context, Role::Question, Role::Answer}) {
    const auto& toks = res.tokens_for(role);
    std::vector<Edu> edus;
    for (const auto& e : res.edus)
      if (e.role == role) edus.push_back(e);
    if (toks.empty()) {
      CHECK(edus.empty());
      continue;
    }
    REQUIRE(!edus.empty());
    CHECK(edus.front().first_token == 0);
    CHECK(edus.back().last_token == toks.size() - 1);
    for (std::size_t i = 1; i < edus.size(); ++i)
      CHECK(edus[i].first_token == edus[i - 1].last_token + 1);
  }
  // ids increase in reading order
  for (std::size_t i = 0; i < res.edus.size(); ++i) CHECK(res.edus[i].id == i);
  // length floor holds for every EDU that has a left neighbour in its role
  for (std::size_t i = 1; i < res.edus.size(); ++i) {
    const Edu& e = res.edus[i];
    if (e.role == res.edus[i - 1].role)
      CHECK(e.last_token - e.first_token + 1 >= 2);
  }
}

TEST_CASE("segment: deterministic across calls") {
  const std::string c = "One thing leads to another, but nothing follows twice.";
  const std::string a = "Something follows once.";
  auto r1 = segment(c, a, "");
  auto r2 = segment(c, a, "");
  REQUIRE(r1.edus.size() == r2.edus.size());
  for (std::size_t i = 0; i < r1.edus.size(); ++i) {
    CHECK(r1.edus[i].text == r2.edus[i].text);
    CHECK(r1.edus[i].first_token == r2.edus[i].first_token);
  }
}

TEST_CASE("segment: rejects empty context") {
  CHECK_THROWS_AS(segment("", "answer", ""), std::invalid_argument);
  CHECK_THROWS_AS(segment("   ", "answer", ""), std::invalid_argument);
}
