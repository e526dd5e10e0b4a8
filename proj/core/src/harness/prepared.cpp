#include "ratebench/harness/prepared.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <unordered_set>

namespace ratebench::harness {

namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing input file: " + path.string());
  return in;
}

void print_row(std::ostream& log, const std::string& label, const std::string& value) {
  log << "  " << std::left << std::setw(24) << label << std::right << std::setw(14)
      << value << '\n';
}

}  // namespace

std::string with_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  out.reserve(digits.size() + digits.size() / 3);
  std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i == lead && i != 0) {
      out += ',';
      lead += 3;
    } else if (i > lead && (i - lead) % 3 == 0) {
      out += ',';
    }
    out += digits[i];
  }
  return out;
}

json PrepareStats::to_json() const {
  return json{{"kind", kind},
              {"n_users", n_users},
              {"n_items", n_items},
              {"n_interactions", n_interactions},
              {"n_train", n_train},
              {"n_test", n_test},
              {"n_filtered", n_filtered},
              {"n_skipped", n_skipped},
              {"n_catalog", n_catalog},
              {"boundary_timestamp", boundary_timestamp},
              {"content_hash", content_hash}};
}

PrepareStats cmd_prepare(const PrepareOptions& options, std::ostream& log) {
  if (options.kind != "movielens" && options.kind != "amazon") {
    throw std::invalid_argument("dataset kind must be \"movielens\" or \"amazon\"");
  }
  if (!(options.split_fraction > 0.0) || !(options.split_fraction < 1.0)) {
    throw std::invalid_argument("split fraction must lie strictly inside (0,1)");
  }

  data::LoadResult loaded;
  if (options.kind == "movielens") {
    auto ratings = open_or_throw(options.raw_dir / "ratings.dat");
    auto movies = open_or_throw(options.raw_dir / "movies.dat");
    loaded = data::load_movielens(ratings, movies);
  } else {
    auto reviews = open_or_throw(options.raw_dir / "reviews.json");
    auto meta = open_or_throw(options.raw_dir / "meta.json");
    loaded = data::load_amazon_books(reviews, meta);
  }

  const std::size_t before_filter = loaded.interactions.size();
  std::vector<data::Interaction> kept =
      data::filter_missing_metadata(std::move(loaded.interactions), loaded.catalog);
  data::ChronSplit split = data::chronological_split(std::move(kept), options.split_fraction);

  PrepareStats stats;
  stats.kind = options.kind;
  stats.n_train = split.train.size();
  stats.n_test = split.test.size();
  stats.n_interactions = stats.n_train + stats.n_test;
  stats.n_filtered = before_filter - stats.n_interactions;
  stats.n_skipped = loaded.n_skipped;
  stats.n_catalog = loaded.catalog.size();
  stats.boundary_timestamp = split.boundary_timestamp;

  std::unordered_set<std::string> users, items;
  std::vector<data::Interaction> ordered;
  ordered.reserve(stats.n_interactions);
  for (const auto* part : {&split.train, &split.test}) {
    for (const data::Interaction& it : *part) {
      users.insert(it.user_id);
      items.insert(it.item_id);
      ordered.push_back(it);
    }
  }
  stats.n_users = users.size();
  stats.n_items = items.size();
  stats.content_hash = data::content_hash(ordered);

  const feat::VocabSet vocabs =
      feat::build_vocabs(split.train, loaded.catalog, options.vocab_min_count);

  std::filesystem::create_directories(options.out_dir);
  {
    std::ofstream out(options.out_dir / "interactions.jsonl", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (options.out_dir / "interactions.jsonl").string());
    }
    data::write_interactions_jsonl(ordered, out);
  }
  {
    std::ofstream out(options.out_dir / "catalog.jsonl", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (options.out_dir / "catalog.jsonl").string());
    }
    data::write_catalog_jsonl(loaded.catalog, out);
  }
  {
    std::ofstream out(options.out_dir / "vocabs.json", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (options.out_dir / "vocabs.json").string());
    }
    feat::write_vocabs_json(vocabs, out);
  }
  {
    json manifest = stats.to_json();
    manifest["split_fraction"] = options.split_fraction;
    manifest["vocab_min_count"] = options.vocab_min_count;
    manifest["files"] = {{"interactions", "interactions.jsonl"},
                         {"catalog", "catalog.jsonl"},
                         {"vocabs", "vocabs.json"}};
    std::ofstream out(options.out_dir / "manifest.json", std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (options.out_dir / "manifest.json").string());
    }
    out << manifest.dump(2) << '\n';
  }

  log << "prepared " << options.kind << " dataset -> " << options.out_dir.string()
      << '\n';
  print_row(log, "users", with_thousands(stats.n_users));
  print_row(log, "items", with_thousands(stats.n_items));
  print_row(log, "interactions", with_thousands(stats.n_interactions));
  print_row(log, "train examples", with_thousands(stats.n_train));
  print_row(log, "test examples", with_thousands(stats.n_test));
  print_row(log, "dropped (no metadata)", with_thousands(stats.n_filtered));
  print_row(log, "skipped raw records", with_thousands(stats.n_skipped));
  print_row(log, "catalog records", with_thousands(stats.n_catalog));
  print_row(log, "split boundary", std::to_string(stats.boundary_timestamp));
  return stats;
}

PreparedDataset PreparedDataset::load(const std::filesystem::path& dir) {
  PreparedDataset p;
  {
    auto in = open_or_throw(dir / "manifest.json");
    in >> p.manifest;
  }
  p.kind = p.manifest.value("kind", std::string("movielens"));
  p.split_fraction = p.manifest.value("split_fraction", 0.9);
  {
    auto in = open_or_throw(dir / "interactions.jsonl");
    std::vector<data::Interaction> interactions = data::read_interactions_jsonl(in);
    p.split = data::chronological_split(std::move(interactions), p.split_fraction);
  }
  {
    auto in = open_or_throw(dir / "catalog.jsonl");
    p.catalog = data::read_catalog_jsonl(in);
  }
  {
    auto in = open_or_throw(dir / "vocabs.json");
    p.vocabs = feat::read_vocabs_json(in);
  }
  return p;
}

}  // namespace ratebench::harness
