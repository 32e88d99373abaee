#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "masuq/trace.hpp"

namespace masuq {

// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TokenSpan&) const = default;
};

struct ExtractedAnswer {
  std::string raw;
  std::string normalized;
  std::optional<TokenSpan> answer_token_span;
  bool operator==(const ExtractedAnswer&) const = default;
};

/// Content of the last balanced \boxed{...} in text. When tokens are given,
/// the span covers every token overlapping the content's character range.
std::optional<ExtractedAnswer> extract_boxed(std::string_view text,
                                             std::span<const TokenRecord> tokens = {},
                                             TaskKind kind = TaskKind::math);

std::string normalize(std::string_view raw, TaskKind kind);

/// True when the normalized string is an exact rational in canonical form.
bool is_numeric_answer(std::string_view normalized);

bool answers_match(std::string_view extracted_normalized, std::string_view gold, TaskKind kind);

bool grade(const std::optional<ExtractedAnswer>& extracted, std::string_view gold, TaskKind kind);

/// Most frequent non-empty answer; ties go to the value seen first.
std::optional<std::string> majority_vote(std::span<const std::optional<std::string>> answers);

}  // namespace masuq
