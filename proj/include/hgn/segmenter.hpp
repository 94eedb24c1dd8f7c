#pragma once

// Rule-based discourse segmentation: tokenize raw text and split the
// context / answer into clause-like element discourse units (EDUs) at
// sentence-final punctuation, a fixed connective lexicon, and clause or
// parenthesis starters. The question is kept as a single unit between the
// context and the answer.

#include <cctype>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace hgn {

struct Token {
  std::string text;
  std::size_t index = 0;  // ordinal position within its sequence
  std::size_t begin = 0;  // byte offsets into the source, [begin, end)
  std::size_t end = 0;
};

enum class Role { Context, Question, Answer };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Context: return "context";
    case Role::Question: return "question";
    case Role::Answer: return "answer";
  }
  return "?";
}

struct Edu {
  std::size_t id = 0;
  Role role = Role::Context;
  std::size_t first_token = 0;  // inclusive, indices into the role's tokens
  std::size_t last_token = 0;   // inclusive
  std::string text;
};

namespace detail {

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// punctuation that always forms a standalone token; hyphens and apostrophes
// stay inside words so "non-eccentric" and "don't" survive whole
inline bool is_punct_token(unsigned char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '[': case ']': case '{': case '}':
    case '"':
      return true;
    default:
      return false;
  }
}

inline bool ends_sentence(const std::string& tok) {
  return tok == "." || tok == ";" || tok == ":" || tok == "!" || tok == "?";
}

inline std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline const std::unordered_set<std::string>& connective_lexicon() {
  static const std::unordered_set<std::string> lex = {
      "because", "however", "but", "therefore", "thus", "although", "since",
      "unless", "while", "whereas", "moreover", "if", "so"};
  return lex;
}

inline const std::unordered_set<std::string>& clause_starter_lexicon() {
  static const std::unordered_set<std::string> lex = {"which", "that", "who",
                                                      "whose", "where", "when"};
  return lex;
}

}  // namespace detail

inline std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (detail::is_space_byte(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.begin = i;
    if (detail::is_punct_token(c)) {
      tok.text = text.substr(i, 1);
      ++i;
    } else {
      std::size_t j = i;
      while (j < n) {
        const unsigned char cj = static_cast<unsigned char>(text[j]);
        if (detail::is_space_byte(cj) || detail::is_punct_token(cj)) break;
        ++j;
      }
      tok.text = text.substr(i, j - i);
      i = j;
    }
    tok.end = i;
    tok.index = tokens.size();
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

struct SegmentResult {
  std::vector<Token> context_tokens;
  std::vector<Token> question_tokens;
  std::vector<Token> answer_tokens;
  std::vector<Edu> edus;

  const std::vector<Token>& tokens_for(Role r) const {
    switch (r) {
      case Role::Context: return context_tokens;
      case Role::Question: return question_tokens;
      case Role::Answer: return answer_tokens;
    }
    return context_tokens;
  }
};

namespace detail {

// split one role's token sequence into EDU spans [first, last]
inline std::vector<std::pair<std::size_t, std::size_t>> split_spans(
    const std::vector<Token>& tokens, std::size_t min_edu_tokens) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  if (tokens.empty()) return spans;

  std::vector<std::size_t> starts = {0};
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string lower = to_lower(tokens[i].text);
    if (ends_sentence(tokens[i - 1].text) || connective_lexicon().count(lower) ||
        clause_starter_lexicon().count(lower)) {
      starts.push_back(i);
    }
  }
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const std::size_t last = (s + 1 < starts.size()) ? starts[s + 1] - 1 : tokens.size() - 1;
    spans.emplace_back(starts[s], last);
  }

  // merge fragments below the length floor into their left neighbour; the
  // leftmost span has nowhere to go and is kept as is
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 1; s < spans.size(); ++s) {
      if (spans[s].second - spans[s].first + 1 < min_edu_tokens) {
        spans[s - 1].second = spans[s].second;
        spans.erase(spans.begin() + static_cast<std::ptrdiff_t>(s));
        changed = true;
        break;
      }
    }
  }
  return spans;
}

inline std::string span_text(const std::string& source, const std::vector<Token>& tokens,
                             std::size_t first, std::size_t last) {
  return source.substr(tokens[first].begin, tokens[last].end - tokens[first].begin);
}

}  // namespace detail

inline SegmentResult segment(const std::string& context, const std::string& answer,
                             const std::string& question, std::size_t min_edu_tokens = 2) {
  SegmentResult result;
  result.context_tokens = tokenize(context);
  result.question_tokens = tokenize(question);
  result.answer_tokens = tokenize(answer);
  if (result.context_tokens.empty())
    throw std::invalid_argument("segment: context has no tokens");

  auto emit = [&](Role role, const std::string& source, const std::vector<Token>& tokens) {
    for (const auto& [first, last] : detail::split_spans(tokens, min_edu_tokens)) {
      Edu edu;
      edu.id = result.edus.size();
      edu.role = role;
      edu.first_token = first;
      edu.last_token = last;
      edu.text = detail::span_text(source, tokens, first, last);
      result.edus.push_back(std::move(edu));
    }
  };

  emit(Role::Context, context, result.context_tokens);
  if (!result.question_tokens.empty()) {
    Edu q;
    q.id = result.edus.size();
    q.role = Role::Question;
    q.first_token = 0;
    q.last_token = result.question_tokens.size() - 1;
    q.text = detail::span_text(question, result.question_tokens, 0,
                               result.question_tokens.size() - 1);
    result.edus.push_back(std::move(q));
  }
  emit(Role::Answer, answer, result.answer_tokens);
  return result;
}

}  // namespace hgn
