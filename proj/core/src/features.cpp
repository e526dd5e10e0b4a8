#include "ratebench/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

namespace ratebench::feat {

namespace {
using json = nlohmann::json;
}

std::int32_t Vocab::add(const std::string& token, std::size_t count) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(token);
  counts_.push_back(count);
  return id;
}

std::int32_t Vocab::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnknownId : it->second;
}

const std::string& Vocab::token_of(std::int32_t id) const {
  return tokens_.at(static_cast<std::size_t>(id));
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

VocabSet build_vocabs(const std::vector<data::Interaction>& train,
                      const data::Catalog& catalog, std::size_t min_count) {
  VocabSet vocabs;

  // User and item ids in first-seen train order; counts are train
  // interaction counts.
  std::unordered_map<std::string, std::size_t> user_counts, item_counts;
  std::vector<const std::string*> user_order, item_order;
  for (const data::Interaction& e : train) {
    if (++user_counts[e.user_id] == 1) user_order.push_back(&e.user_id);
    if (++item_counts[e.item_id] == 1) item_order.push_back(&e.item_id);
  }
  for (const std::string* u : user_order) vocabs.user.add(*u, user_counts[*u]);
  for (const std::string* i : item_order) vocabs.item.add(*i, item_counts[*i]);

  // Title tokens and attributes over the distinct train items, counted once
  // per item.
  std::unordered_map<std::string, std::size_t> token_counts, attr_counts;
  std::vector<std::string> token_order, attr_order;
  for (const std::string* id : item_order) {
    const data::ItemMeta* meta = catalog.find(*id);
    if (!meta) continue;
    for (const std::string& tok : whitespace_tokens(meta->title)) {
      if (++token_counts[tok] == 1) token_order.push_back(tok);
    }
    for (const std::string& attr : meta->attributes) {
      if (++attr_counts[attr] == 1) attr_order.push_back(attr);
    }
  }
  for (const std::string& tok : token_order) {
    const std::size_t count = token_counts[tok];
    if (count >= min_count) vocabs.title.add(tok, count);
  }
  for (const std::string& attr : attr_order) vocabs.attribute.add(attr, attr_counts[attr]);

  return vocabs;
}

EncodedCatalog::EncodedCatalog(const data::Catalog& catalog, const VocabSet& vocabs) {
  const std::size_t n = catalog.size();
  item_index_.reserve(n);
  title_offset_.reserve(n + 1);
  attr_offset_.reserve(n + 1);
  title_offset_.push_back(0);
  attr_offset_.push_back(0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const data::ItemMeta& meta = catalog.at(pos);
    item_index_.push_back(vocabs.item.id_of(meta.item_id));
    for (const std::string& tok : whitespace_tokens(meta.title)) {
      title_arena_.push_back(vocabs.title.id_of(tok));
    }
    std::vector<std::int32_t> attrs;
    for (const std::string& attr : meta.attributes) {
      attrs.push_back(vocabs.attribute.id_of(attr));
    }
    std::sort(attrs.begin(), attrs.end());
    attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
    attr_arena_.insert(attr_arena_.end(), attrs.begin(), attrs.end());
    title_offset_.push_back(static_cast<std::uint32_t>(title_arena_.size()));
    attr_offset_.push_back(static_cast<std::uint32_t>(attr_arena_.size()));
  }
}

std::span<const std::int32_t> EncodedCatalog::title_ids(std::size_t pos) const {
  return {title_arena_.data() + title_offset_[pos],
          title_offset_[pos + 1] - title_offset_[pos]};
}

std::span<const std::int32_t> EncodedCatalog::attribute_ids(std::size_t pos) const {
  return {attr_arena_.data() + attr_offset_[pos],
          attr_offset_[pos + 1] - attr_offset_[pos]};
}

ItemFeatures EncodedCatalog::features(std::size_t pos,
                                      std::optional<std::int32_t> rating_bucket) const {
  ItemFeatures f;
  f.item_index = item_index_[pos];
  const auto titles = title_ids(pos);
  f.title_token_ids.assign(titles.begin(), titles.end());
  const auto attrs = attribute_ids(pos);
  f.attribute_ids.assign(attrs.begin(), attrs.end());
  f.rating_bucket = rating_bucket;
  return f;
}

std::int32_t rating_bucket(double rating) {
  if (rating < 1.0 || rating > 5.0) {
    throw std::invalid_argument("rating outside [1,5]: " + std::to_string(rating));
  }
  const auto bucket = static_cast<std::int32_t>(std::lround(rating)) - 1;
  return std::clamp(bucket, 0, 4);
}

EncodedExample encode_example(const data::RatingExample& example,
                              const VocabSet& vocabs, const data::Catalog& catalog) {
  if (example.history.size() > kMaxHistory) {
    throw std::invalid_argument("history length > " + std::to_string(kMaxHistory));
  }
  auto position_of = [&](const std::string& item_id) {
    const auto pos = catalog.position(item_id);
    if (!pos) throw std::invalid_argument("item not in catalog: " + item_id);
    return static_cast<std::int32_t>(*pos);
  };

  EncodedExample enc;
  enc.user_index = vocabs.user.id_of(example.user_id);
  enc.candidate_pos = position_of(example.item_id);
  if (example.label < 1.0 || example.label > 5.0) {
    throw std::invalid_argument("label outside [1,5]");
  }
  enc.label = static_cast<float>(example.label);
  enc.history_len = static_cast<std::int32_t>(example.history.size());
  for (std::size_t i = 0; i < example.history.size(); ++i) {
    enc.history[i] = {position_of(example.history[i].item_id),
                      rating_bucket(example.history[i].rating)};
  }
  return enc;
}

void write_vocabs_json(const VocabSet& vocabs, std::ostream& out) {
  auto dump_vocab = [](const Vocab& v) {
    json entries = json::array();
    for (std::size_t id = 1; id < v.size(); ++id) {
      entries.push_back({{"token", v.token_of(static_cast<std::int32_t>(id))},
                         {"id", id},
                         {"count", v.count_of(static_cast<std::int32_t>(id))}});
    }
    return json{{"unknown_id", 0}, {"entries", std::move(entries)}};
  };
  json j{{"title", dump_vocab(vocabs.title)},
         {"attribute", dump_vocab(vocabs.attribute)},
         {"item", dump_vocab(vocabs.item)},
         {"user", dump_vocab(vocabs.user)}};
  out << j.dump(2) << '\n';
}

VocabSet read_vocabs_json(std::istream& in) {
  const json j = json::parse(in);
  auto load_vocab = [](const json& spec, Vocab& v) {
    for (const auto& entry : spec.at("entries")) {
      const auto id = v.add(entry.at("token").get<std::string>(),
                            entry.at("count").get<std::size_t>());
      if (id != entry.at("id").get<std::int32_t>()) {
        throw std::runtime_error("vocab file ids are not dense");
      }
    }
  };
  VocabSet vocabs;
  load_vocab(j.at("title"), vocabs.title);
  load_vocab(j.at("attribute"), vocabs.attribute);
  load_vocab(j.at("item"), vocabs.item);
  load_vocab(j.at("user"), vocabs.user);
  return vocabs;
}

}  // namespace ratebench::feat
