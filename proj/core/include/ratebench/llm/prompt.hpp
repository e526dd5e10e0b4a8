#pragma once

#include <span>
#include <string>
#include <vector>

#include "ratebench/dataset.hpp"

namespace ratebench::llm {

/// Prompt skeleton for the rating task. The scale statement and both
/// suppression clauses are always rendered; build_prompt rejects templates
/// that drop them. Line formats use {title}, {attributes} and {rating}
/// placeholders; " ({attributes})" disappears when an item has none.
struct PromptTemplate {
  std::string instruction;
  std::string scale_statement;
  std::vector<std::string> suppression_clauses;
  std::string shot_header;
  std::string history_header;
  std::string history_line;
  std::string question;
  std::string answer_prefix;
  std::string no_history_note;

  static PromptTemplate movies();
  static PromptTemplate books();
};

/// "4" for whole ratings, "3.5" for halves; parse_rating round-trips both.
std::string format_rating(double rating);

/// Renders instruction + scale + clauses, each shot as a solved example, then
/// the target history (oldest first) and the candidate question, ending with
/// the bare answer prefix. No shots yields the zero-shot prompt. Item titles
/// and attributes resolve through the catalog; unknown items fall back to the
/// raw id. Throws std::invalid_argument if the template is missing the scale
/// statement or either suppression clause.
std::string build_prompt(const data::RatingExample& example,
                         std::span<const data::RatingExample> shots,
                         const data::Catalog& catalog, const PromptTemplate& tmpl);

}  // namespace ratebench::llm
