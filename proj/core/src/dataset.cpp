#include "ratebench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "ratebench/kernel/rng.hpp"

namespace ratebench::data {

namespace {

using json = nlohmann::json;

std::string latin1_to_utf8(const std::string& bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char c : bytes) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Splits a `::`-delimited MovieLens line into exactly `expected` fields,
// except that the middle field of a 3-field line may itself contain `::`
// (movie titles); in that case the first and last separators win.
bool split_double_colon(const std::string& line, std::size_t expected,
                        std::vector<std::string>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (fields.size() + 1 < expected) {
    std::size_t pos;
    if (expected == 3 && fields.size() == 1) {
      pos = line.rfind("::");
      if (pos == std::string::npos || pos < start) return false;
    } else {
      pos = line.find("::", start);
      if (pos == std::string::npos) return false;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 2;
  }
  fields.push_back(line.substr(start));
  return fields.size() == expected;
}

bool parse_rating_value(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    if (used != s.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return out >= 1.0 && out <= 5.0;
}

bool parse_timestamp_value(const std::string& s, std::int64_t& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(s, &used);
    if (used != s.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return out >= 0;
}

}  // namespace

std::size_t Catalog::add(ItemMeta meta) {
  auto it = index_.find(meta.item_id);
  if (it != index_.end()) {
    // Later records win; the Amazon metadata dump contains duplicates.
    items_[it->second] = std::move(meta);
    return it->second;
  }
  const std::size_t pos = items_.size();
  index_.emplace(meta.item_id, pos);
  items_.push_back(std::move(meta));
  return pos;
}

const ItemMeta* Catalog::find(const std::string& item_id) const {
  auto it = index_.find(item_id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

std::optional<std::size_t> Catalog::position(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LoadResult load_movielens(std::istream& ratings, std::istream& movies) {
  LoadResult result;
  std::string line;
  std::vector<std::string> fields;

  std::size_t line_no = 0;
  while (std::getline(movies, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!split_double_colon(line, 3, fields)) {
      throw RecordError("malformed movies line " + std::to_string(line_no), line_no);
    }
    ItemMeta meta;
    meta.item_id = fields[0];
    meta.title = latin1_to_utf8(fields[1]);
    meta.metadata_missing = meta.title.empty();
    if (!fields[2].empty()) {
      for (auto& genre : split_on(fields[2], '|')) {
        meta.attributes.push_back(latin1_to_utf8(genre));
      }
    }
    result.catalog.add(std::move(meta));
  }

  line_no = 0;
  while (std::getline(ratings, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Interaction e;
    if (!split_double_colon(line, 4, fields) || fields[0].empty() || fields[1].empty() ||
        !parse_rating_value(fields[2], e.rating) ||
        !parse_timestamp_value(fields[3], e.timestamp)) {
      throw RecordError("malformed ratings line " + std::to_string(line_no), line_no);
    }
    e.user_id = std::move(fields[0]);
    e.item_id = std::move(fields[1]);
    result.interactions.push_back(std::move(e));
  }
  return result;
}

LoadResult load_amazon_books(std::istream& reviews, std::istream& meta) {
  LoadResult result;
  std::string line;

  std::size_t offset = 0;
  while (std::getline(meta, line)) {
    const std::size_t record_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw RecordError("metadata JSON parse failure at byte offset " +
                            std::to_string(record_offset),
                        record_offset);
    }
    if (!record.contains("asin") || !record["asin"].is_string()) {
      ++result.n_skipped;
      continue;
    }
    ItemMeta m;
    m.item_id = record["asin"].get<std::string>();
    if (record.contains("title") && record["title"].is_string() &&
        !record["title"].get<std::string>().empty()) {
      m.title = record["title"].get<std::string>();
    } else {
      m.metadata_missing = true;
    }
    if (record.contains("brand") && record["brand"].is_string() &&
        !record["brand"].get<std::string>().empty()) {
      m.attributes.push_back(record["brand"].get<std::string>());
    }
    result.catalog.add(std::move(m));
  }

  offset = 0;
  while (std::getline(reviews, line)) {
    const std::size_t record_offset = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw RecordError("review JSON parse failure at byte offset " +
                            std::to_string(record_offset),
                        record_offset);
    }
    if (!record.contains("reviewerID") || !record.contains("asin") ||
        !record.contains("overall") || !record.contains("unixReviewTime") ||
        !record["reviewerID"].is_string() || !record["asin"].is_string() ||
        !record["overall"].is_number() || !record["unixReviewTime"].is_number_integer()) {
      ++result.n_skipped;
      continue;
    }
    Interaction e;
    e.user_id = record["reviewerID"].get<std::string>();
    e.item_id = record["asin"].get<std::string>();
    e.rating = record["overall"].get<double>();
    e.timestamp = record["unixReviewTime"].get<std::int64_t>();
    if (e.rating < 1.0 || e.rating > 5.0 || e.timestamp < 0) {
      ++result.n_skipped;
      continue;
    }
    result.interactions.push_back(std::move(e));
  }
  return result;
}

std::vector<Interaction> filter_missing_metadata(std::vector<Interaction> interactions,
                                                 const Catalog& catalog) {
  auto keep = [&](const Interaction& e) {
    const ItemMeta* m = catalog.find(e.item_id);
    return m != nullptr && !m->metadata_missing;
  };
  std::vector<Interaction> out;
  out.reserve(interactions.size());
  for (auto& e : interactions) {
    if (keep(e)) out.push_back(std::move(e));
  }
  return out;
}

ChronSplit chronological_split(std::vector<Interaction> interactions,
                               double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("chronological_split: fraction must be in (0,1)");
  }
  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const Interaction& a, const Interaction& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.item_id < b.item_id;
                   });
  const std::size_t n = interactions.size();
  const auto train_n = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(n)));

  ChronSplit split;
  split.train.assign(std::make_move_iterator(interactions.begin()),
                     std::make_move_iterator(interactions.begin() + train_n));
  split.test.assign(std::make_move_iterator(interactions.begin() + train_n),
                    std::make_move_iterator(interactions.end()));
  if (!split.train.empty()) {
    split.boundary_timestamp = split.train.back().timestamp;
  } else if (!split.test.empty()) {
    split.boundary_timestamp = split.test.front().timestamp;
  }
  return split;
}

void visit_examples(const ChronSplit& split, ExampleSource source,
                    const ExampleOptions& options,
                    const std::function<void(const RatingExample&)>& sink) {
  std::unordered_map<std::string, std::deque<const Interaction*>> windows;
  windows.reserve(1024);

  RatingExample example;
  auto emit = [&](const Interaction& e) {
    auto& window = windows[e.user_id];
    example.user_id = e.user_id;
    example.item_id = e.item_id;
    example.label = e.rating;
    example.timestamp = e.timestamp;
    example.history.clear();
    for (const Interaction* h : window) {
      example.history.push_back({h->item_id, h->rating, h->timestamp});
    }
    sink(example);
  };
  auto push = [&](const Interaction& e) {
    auto& window = windows[e.user_id];
    window.push_back(&e);
    if (window.size() > options.max_history) window.pop_front();
  };

  for (const Interaction& e : split.train) {
    if (source == ExampleSource::Train) emit(e);
    push(e);
  }
  if (source == ExampleSource::Test) {
    for (const Interaction& e : split.test) {
      emit(e);
      if (!options.train_only_history) push(e);
    }
  }
}

std::vector<RatingExample> build_examples(const ChronSplit& split, ExampleSource source,
                                          const ExampleOptions& options) {
  std::vector<RatingExample> out;
  out.reserve(source == ExampleSource::Train ? split.train.size() : split.test.size());
  visit_examples(split, source, options,
                 [&](const RatingExample& e) { out.push_back(e); });
  return out;
}

std::vector<RatingExample> sample_test(const std::vector<RatingExample>& examples,
                                       std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_test: n must be >= 1");
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  kernel::Rng rng(seed);
  const std::size_t take = std::min(n, examples.size());
  // Partial Fisher-Yates: position i draws from [i, N).
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::vector<RatingExample> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(examples[order[i]]);
  return out;
}

void write_interactions_jsonl(const std::vector<Interaction>& interactions,
                              std::ostream& out) {
  for (const Interaction& e : interactions) {
    json j{{"user_id", e.user_id},
           {"item_id", e.item_id},
           {"rating", e.rating},
           {"timestamp", e.timestamp}};
    out << j.dump() << '\n';
  }
}

std::vector<Interaction> read_interactions_jsonl(std::istream& in) {
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw RecordError("bad canonical interaction line " + std::to_string(line_no),
                        line_no);
    }
    Interaction e;
    e.user_id = j.at("user_id").get<std::string>();
    e.item_id = j.at("item_id").get<std::string>();
    e.rating = j.at("rating").get<double>();
    e.timestamp = j.at("timestamp").get<std::int64_t>();
    out.push_back(std::move(e));
  }
  return out;
}

void write_catalog_jsonl(const Catalog& catalog, std::ostream& out) {
  for (const ItemMeta& m : catalog.items()) {
    json j{{"item_id", m.item_id},
           {"title", m.title},
           {"attributes", m.attributes},
           {"missing", m.metadata_missing}};
    out << j.dump() << '\n';
  }
}

Catalog read_catalog_jsonl(std::istream& in) {
  Catalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw RecordError("bad canonical catalog line " + std::to_string(line_no), line_no);
    }
    ItemMeta m;
    m.item_id = j.at("item_id").get<std::string>();
    m.title = j.at("title").get<std::string>();
    m.attributes = j.at("attributes").get<std::vector<std::string>>();
    m.metadata_missing = j.at("missing").get<bool>();
    catalog.add(std::move(m));
  }
  return catalog;
}

std::uint64_t fnv1a_hash(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t content_hash(const std::vector<Interaction>& interactions) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const Interaction& e : interactions) {
    h = fnv1a_hash(e.user_id, h);
    h = fnv1a_hash(e.item_id, h);
    h = fnv1a_hash(std::to_string(e.rating), h);
    h = fnv1a_hash(std::to_string(e.timestamp), h);
  }
  return h;
}

}  // namespace ratebench::data
