#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "ratebench/dataset.hpp"

namespace ratebench::models {

enum class HeuristicKind { Global, Item, User };

std::string to_string(HeuristicKind kind);
/// Accepts "global", "item", "user"; anything else throws std::invalid_argument.
HeuristicKind heuristic_kind_from_string(const std::string& name);

struct MeanAccum {
  double sum = 0.0;
  std::size_t count = 0;

  double mean() const { return sum / static_cast<double>(count); }
};

/// Exact running means over the training ratings: one global, one per item,
/// one per user.
struct HeuristicStats {
  double global_mean = 0.0;
  std::size_t n = 0;
  std::unordered_map<std::string, MeanAccum> per_item;
  std::unordered_map<std::string, MeanAccum> per_user;
};

/// Throws std::invalid_argument on an empty training set.
HeuristicStats fit_heuristics(const std::vector<data::Interaction>& train);

/// Requested mean; an unseen item or user falls back to the global mean.
/// Always in [1,5] because every stored mean averages in-range ratings.
double predict_heuristic(const HeuristicStats& stats, HeuristicKind kind,
                         const std::string& user_id, const std::string& item_id);

}  // namespace ratebench::models
