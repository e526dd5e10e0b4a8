#include "ratebench/models/heuristics.hpp"

#include <stdexcept>

namespace ratebench::models {

std::string to_string(HeuristicKind kind) {
  switch (kind) {
    case HeuristicKind::Global: return "global";
    case HeuristicKind::Item: return "item";
    case HeuristicKind::User: return "user";
  }
  throw std::logic_error("unreachable heuristic kind");
}

HeuristicKind heuristic_kind_from_string(const std::string& name) {
  if (name == "global") return HeuristicKind::Global;
  if (name == "item") return HeuristicKind::Item;
  if (name == "user") return HeuristicKind::User;
  throw std::invalid_argument("unknown heuristic kind: " + name);
}

HeuristicStats fit_heuristics(const std::vector<data::Interaction>& train) {
  if (train.empty()) {
    throw std::invalid_argument("fit_heuristics: empty training set");
  }
  HeuristicStats stats;
  for (const data::Interaction& e : train) {
    stats.global_mean += e.rating;
    MeanAccum& item = stats.per_item[e.item_id];
    item.sum += e.rating;
    ++item.count;
    MeanAccum& user = stats.per_user[e.user_id];
    user.sum += e.rating;
    ++user.count;
  }
  stats.n = train.size();
  stats.global_mean /= static_cast<double>(train.size());
  return stats;
}

double predict_heuristic(const HeuristicStats& stats, HeuristicKind kind,
                         const std::string& user_id, const std::string& item_id) {
  switch (kind) {
    case HeuristicKind::Global:
      return stats.global_mean;
    case HeuristicKind::Item: {
      const auto it = stats.per_item.find(item_id);
      return it == stats.per_item.end() ? stats.global_mean : it->second.mean();
    }
    case HeuristicKind::User: {
      const auto it = stats.per_user.find(user_id);
      return it == stats.per_user.end() ? stats.global_mean : it->second.mean();
    }
  }
  throw std::logic_error("unreachable heuristic kind");
}

}  // namespace ratebench::models
