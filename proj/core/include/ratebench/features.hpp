#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ratebench/dataset.hpp"

namespace ratebench::feat {

inline constexpr std::size_t kMaxHistory = 10;

/// Token vocabulary with a reserved unknown slot at id 0. Known ids are
/// dense in [1, size).
class Vocab {
 public:
  static constexpr std::int32_t kUnknownId = 0;

  std::int32_t add(const std::string& token, std::size_t count);
  std::int32_t id_of(const std::string& token) const;
  const std::string& token_of(std::int32_t id) const;
  std::size_t count_of(std::int32_t id) const { return counts_[static_cast<std::size_t>(id)]; }
  /// Total number of ids, unknown slot included.
  std::size_t size() const { return tokens_.size(); }

 private:
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<std::string> tokens_{"<unk>"};
  std::vector<std::size_t> counts_{0};
};

struct VocabSet {
  Vocab title;
  Vocab attribute;
  Vocab item;
  Vocab user;
};

/// Splits on whitespace runs. No lowercasing, no punctuation stripping.
std::vector<std::string> whitespace_tokens(const std::string& text);

/// Fits all four vocabularies on the training split only. Title tokens with
/// count < min_count (counted over distinct train items) map to unknown;
/// attribute/item/user vocabularies are unpruned.
VocabSet build_vocabs(const std::vector<data::Interaction>& train,
                      const data::Catalog& catalog, std::size_t min_count = 2);

/// Sparse id features for one item occurrence.
struct ItemFeatures {
  std::int32_t item_index = Vocab::kUnknownId;
  std::vector<std::int32_t> title_token_ids;  // multiset, token order preserved
  std::vector<std::int32_t> attribute_ids;    // set, sorted
  std::optional<std::int32_t> rating_bucket;  // round(rating) - 1, in [0,4]
};

/// Per-item id features in flat arenas, indexed by catalog position. Built
/// once so encoded examples can stay small.
class EncodedCatalog {
 public:
  EncodedCatalog(const data::Catalog& catalog, const VocabSet& vocabs);

  std::int32_t item_index(std::size_t pos) const { return item_index_[pos]; }
  std::span<const std::int32_t> title_ids(std::size_t pos) const;
  std::span<const std::int32_t> attribute_ids(std::size_t pos) const;
  ItemFeatures features(std::size_t pos,
                        std::optional<std::int32_t> rating_bucket = std::nullopt) const;
  std::size_t size() const { return item_index_.size(); }

 private:
  std::vector<std::int32_t> item_index_;
  std::vector<std::uint32_t> title_offset_, attr_offset_;  // size()+1 entries
  std::vector<std::int32_t> title_arena_, attr_arena_;
};

struct EncodedHistoryStep {
  std::int32_t catalog_pos;
  std::int32_t rating_bucket;
};

/// Fixed-size encoded example; item features are resolved through the
/// EncodedCatalog at forward time.
struct EncodedExample {
  std::int32_t user_index = Vocab::kUnknownId;
  std::int32_t candidate_pos = 0;  // catalog position
  float label = 0.0f;
  std::int32_t history_len = 0;
  std::array<EncodedHistoryStep, kMaxHistory> history;
};

std::int32_t rating_bucket(double rating);

/// Encodes one example against train-fitted vocabs. Unseen tokens,
/// attributes, items and users map to the unknown id.
EncodedExample encode_example(const data::RatingExample& example,
                              const VocabSet& vocabs, const data::Catalog& catalog);

void write_vocabs_json(const VocabSet& vocabs, std::ostream& out);
VocabSet read_vocabs_json(std::istream& in);

}  // namespace ratebench::feat
