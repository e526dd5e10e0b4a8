#include "ratebench/llm/prompt.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ratebench::llm {

namespace {

void replace_all(std::string& text, const std::string& needle, const std::string& value) {
  std::size_t at = 0;
  while ((at = text.find(needle, at)) != std::string::npos) {
    text.replace(at, needle.size(), value);
    at += value.size();
  }
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct ItemText {
  std::string title;
  std::string attributes;
};

ItemText item_text(const data::Catalog& catalog, const std::string& item_id) {
  const data::ItemMeta* meta = catalog.find(item_id);
  if (!meta || meta->title.empty()) return {item_id, ""};
  return {meta->title, join(meta->attributes, ", ")};
}

std::string render_line(std::string format, const ItemText& item,
                        const std::string& rating) {
  if (item.attributes.empty()) {
    replace_all(format, " ({attributes})", "");
    replace_all(format, "({attributes})", "");
  }
  replace_all(format, "{title}", item.title);
  replace_all(format, "{attributes}", item.attributes);
  replace_all(format, "{rating}", rating);
  return format;
}

void render_example_block(std::ostringstream& out, const data::RatingExample& example,
                          const data::Catalog& catalog, const PromptTemplate& tmpl) {
  out << tmpl.history_header << '\n';
  if (example.history.empty()) {
    out << tmpl.no_history_note << '\n';
  } else {
    for (const data::HistoryStep& step : example.history) {
      out << render_line(tmpl.history_line, item_text(catalog, step.item_id),
                         format_rating(step.rating))
          << '\n';
    }
  }
  out << render_line(tmpl.question, item_text(catalog, example.item_id), "") << '\n';
}

}  // namespace

PromptTemplate PromptTemplate::movies() {
  PromptTemplate t;
  t.instruction =
      "You are a movie recommender system. Predict the rating the user will "
      "give to the candidate movie.";
  t.scale_statement = "The rating scale goes from 1 to 5.";
  t.suppression_clauses = {"Give a single number as rating without explanation.",
                           "Do not give reasoning."};
  t.shot_header = "Here is an example:";
  t.history_header = "The user rated the following movies, oldest to newest:";
  t.history_line = "{title} ({attributes}): {rating}";
  t.question = "How would the user rate \"{title}\" ({attributes})?";
  t.answer_prefix = "Answer:";
  t.no_history_note = "The user has no earlier ratings.";
  return t;
}

PromptTemplate PromptTemplate::books() {
  PromptTemplate t = movies();
  t.instruction =
      "You are a book recommender system. Predict the rating the user will "
      "give to the candidate book.";
  t.history_header = "The user rated the following books, oldest to newest:";
  return t;
}

std::string format_rating(double rating) {
  if (rating == std::floor(rating)) {
    return std::to_string(static_cast<long long>(rating));
  }
  std::ostringstream out;
  out << rating;
  return out.str();
}

std::string build_prompt(const data::RatingExample& example,
                         std::span<const data::RatingExample> shots,
                         const data::Catalog& catalog, const PromptTemplate& tmpl) {
  if (tmpl.scale_statement.empty()) {
    throw std::invalid_argument("prompt template must state the rating scale");
  }
  if (tmpl.suppression_clauses.size() < 2) {
    throw std::invalid_argument(
        "prompt template must keep both instruction-following clauses");
  }
  for (const std::string& clause : tmpl.suppression_clauses) {
    if (clause.empty()) {
      throw std::invalid_argument("prompt template has an empty clause");
    }
  }

  std::ostringstream out;
  out << tmpl.instruction << ' ' << tmpl.scale_statement << '\n'
      << join(tmpl.suppression_clauses, " ") << '\n';
  for (const data::RatingExample& shot : shots) {
    out << '\n' << tmpl.shot_header << '\n';
    render_example_block(out, shot, catalog, tmpl);
    out << tmpl.answer_prefix << ' ' << format_rating(shot.label) << '\n';
  }
  out << '\n';
  render_example_block(out, example, catalog, tmpl);
  out << tmpl.answer_prefix;
  return out.str();
}

}  // namespace ratebench::llm
