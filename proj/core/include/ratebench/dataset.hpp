#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ratebench::data {

/// One (user, item, rating, timestamp) event.
struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;        // in [1,5]
  std::int64_t timestamp = 0; // seconds since epoch

  bool operator==(const Interaction&) const = default;
};

struct ItemMeta {
  std::string item_id;
  std::string title;
  std::vector<std::string> attributes;  // genres for movies, brand for books
  bool metadata_missing = false;        // set when the record lacks a title
};

/// Item metadata keyed by id, with dense positions for the feature encoder.
class Catalog {
 public:
  std::size_t add(ItemMeta meta);
  const ItemMeta* find(const std::string& item_id) const;
  std::optional<std::size_t> position(const std::string& item_id) const;
  const ItemMeta& at(std::size_t pos) const { return items_[pos]; }
  std::size_t size() const { return items_.size(); }
  const std::vector<ItemMeta>& items() const { return items_; }

 private:
  std::vector<ItemMeta> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Malformed input record. Corrupt input aborts the run instead of silently
/// shrinking the dataset.
class RecordError : public std::runtime_error {
 public:
  RecordError(const std::string& message, std::size_t where)
      : std::runtime_error(message), where_(where) {}
  /// Line number for line-oriented sources, byte offset for JSON-lines.
  std::size_t where() const { return where_; }

 private:
  std::size_t where_;
};

struct LoadResult {
  std::vector<Interaction> interactions;
  Catalog catalog;
  std::size_t n_skipped = 0;  // records dropped for missing required fields
};

/// MovieLens-1M format: `UserID::MovieID::Rating::Timestamp` ratings lines and
/// `MovieID::Title::Genres` movie lines, Latin-1 encoded. Titles are
/// transcoded to UTF-8; genres split on `|`.
LoadResult load_movielens(std::istream& ratings, std::istream& movies);

/// Amazon review JSON-lines: review records with reviewerID/asin/overall/
/// unixReviewTime and metadata records with asin/title/brand. The source is
/// assumed to be the 5-core cut already; no re-filtering happens here.
LoadResult load_amazon_books(std::istream& reviews, std::istream& meta);

/// Keeps exactly the interactions whose item has non-missing metadata,
/// preserving relative order.
std::vector<Interaction> filter_missing_metadata(std::vector<Interaction> interactions,
                                                 const Catalog& catalog);

/// Global single-time-point split. All interactions are ordered by
/// (timestamp, user_id, item_id); the first floor(fraction * N) become train.
struct ChronSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> test;
  std::int64_t boundary_timestamp = 0;  // timestamp of the last train interaction
};

ChronSplit chronological_split(std::vector<Interaction> interactions,
                               double train_fraction);

struct HistoryStep {
  std::string item_id;
  double rating;
  std::int64_t timestamp;
};

/// A candidate interaction plus the user's most recent prior interactions,
/// oldest first. History strictly precedes the candidate in the global order.
struct RatingExample {
  std::string user_id;
  std::string item_id;
  double label = 0.0;
  std::int64_t timestamp = 0;
  std::vector<HistoryStep> history;
};

enum class ExampleSource { Train, Test };

struct ExampleOptions {
  std::size_t max_history = 10;
  // When set, test-period candidates draw history from train interactions
  // only; earlier test-period interactions of the same user are excluded.
  bool train_only_history = false;
};

/// Streams examples in global order without materializing them all.
void visit_examples(const ChronSplit& split, ExampleSource source,
                    const ExampleOptions& options,
                    const std::function<void(const RatingExample&)>& sink);

std::vector<RatingExample> build_examples(const ChronSplit& split, ExampleSource source,
                                          const ExampleOptions& options = {});

/// Uniform sample without replacement of min(n, |examples|) examples.
/// Identical seeds yield identical samples in identical order.
std::vector<RatingExample> sample_test(const std::vector<RatingExample>& examples,
                                       std::size_t n, std::uint64_t seed);

// Canonical dataset files (JSON-lines), written by `prepare` so downstream
// stages never reparse raw formats.
void write_interactions_jsonl(const std::vector<Interaction>& interactions,
                              std::ostream& out);
std::vector<Interaction> read_interactions_jsonl(std::istream& in);
void write_catalog_jsonl(const Catalog& catalog, std::ostream& out);
Catalog read_catalog_jsonl(std::istream& in);

std::uint64_t fnv1a_hash(const std::string& bytes, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t content_hash(const std::vector<Interaction>& interactions);

}  // namespace ratebench::data
