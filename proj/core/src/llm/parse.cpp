#include "ratebench/llm/parse.hpp"

#include <cctype>
#include <regex>
#include <stdexcept>

namespace ratebench::llm {

std::string to_string(ParseFailure failure) {
  switch (failure) {
    case ParseFailure::None: return "none";
    case ParseFailure::NoNumber: return "no_number";
    case ParseFailure::OutOfRange: return "out_of_range";
    case ParseFailure::Empty: return "empty";
  }
  throw std::logic_error("unreachable parse failure");
}

ParsedRating parse_rating(const std::string& response_text) {
  bool all_space = true;
  for (const char c : response_text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      all_space = false;
      break;
    }
  }
  if (all_space) return {0.0, ParseFailure::Empty};

  static const std::regex number(R"(-?\d+(\.\d+)?)");
  std::smatch match;
  if (!std::regex_search(response_text, match, number)) {
    return {0.0, ParseFailure::NoNumber};
  }
  const double value = std::stod(match.str());
  if (value < 1.0 || value > 5.0) return {value, ParseFailure::OutOfRange};
  return {value, ParseFailure::None};
}

}  // namespace ratebench::llm
