#pragma once

#include <string>

namespace ratebench::llm {

enum class ParseFailure { None, NoNumber, OutOfRange, Empty };

std::string to_string(ParseFailure failure);

struct ParsedRating {
  double value = 0.0;  // meaningful only when ok()
  ParseFailure failure = ParseFailure::None;

  bool ok() const { return failure == ParseFailure::None; }
};

/// Extracts the first decimal number token from free-form model output and
/// accepts it when it lies in [1,5]. Total: any input maps to a value or a
/// failure reason, never an exception.
ParsedRating parse_rating(const std::string& response_text);

}  // namespace ratebench::llm
