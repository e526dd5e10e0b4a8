#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <ostream>
#include <string>

#include "ratebench/dataset.hpp"
#include "ratebench/features.hpp"

namespace ratebench::harness {

struct PrepareOptions {
  std::string kind;  // "movielens" | "amazon"
  std::filesystem::path raw_dir;
  std::filesystem::path out_dir;
  double split_fraction = 0.9;
  std::size_t vocab_min_count = 2;
};

struct PrepareStats {
  std::string kind;
  std::size_t n_users = 0;      // distinct, after the metadata filter
  std::size_t n_items = 0;      // distinct rated, after the metadata filter
  std::size_t n_interactions = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_filtered = 0;   // dropped by the metadata filter
  std::size_t n_skipped = 0;    // malformed-but-tolerated raw records
  std::size_t n_catalog = 0;    // catalog records (rated or not)
  std::int64_t boundary_timestamp = 0;
  std::uint64_t content_hash = 0;

  nlohmann::json to_json() const;
};

/// Raw files -> canonical dataset directory: `interactions.jsonl` (filtered,
/// chronologically ordered), `catalog.jsonl`, `vocabs.json` (train-fitted),
/// and `manifest.json` with the counts, the split boundary and a content
/// hash. Re-running over the same inputs writes identical bytes. The summary
/// table is printed to `log`.
PrepareStats cmd_prepare(const PrepareOptions& options, std::ostream& log);

/// A prepared dataset loaded back for experiments. The split is recomputed
/// from the manifest's fraction over the canonical interactions, so it
/// matches what `prepare` reported.
struct PreparedDataset {
  nlohmann::json manifest;
  std::string kind;
  double split_fraction = 0.9;
  data::Catalog catalog;
  data::ChronSplit split;
  feat::VocabSet vocabs;

  static PreparedDataset load(const std::filesystem::path& dir);
};

/// 1,234,567-style formatting for the stats table.
std::string with_thousands(std::uint64_t value);

}  // namespace ratebench::harness
