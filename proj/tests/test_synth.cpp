#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "helpers.hpp"
#include "ratebench/dataset.hpp"
#include "ratebench/synth.hpp"

using namespace ratebench;
using synth::SynthSpec;
using synth::SynthSummary;

namespace {

data::LoadResult load_movielens_dir(const std::filesystem::path& dir) {
  std::ifstream ratings(dir / "ratings.dat", std::ios::binary);
  std::ifstream movies(dir / "movies.dat", std::ios::binary);
  REQUIRE(ratings.good());
  REQUIRE(movies.good());
  return data::load_movielens(ratings, movies);
}

data::LoadResult load_amazon_dir(const std::filesystem::path& dir) {
  std::ifstream reviews(dir / "reviews.json", std::ios::binary);
  std::ifstream meta(dir / "meta.json", std::ios::binary);
  REQUIRE(reviews.good());
  REQUIRE(meta.good());
  return data::load_amazon_books(reviews, meta);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("movielens writer is byte-for-byte deterministic") {
  const SynthSpec spec = SynthSpec::movielens_replica().scaled(0.01);
  testutil::TempDir a, b;
  const SynthSummary sa = synth::write_movielens_files(spec, a.path());
  const SynthSummary sb = synth::write_movielens_files(spec, b.path());
  CHECK(sa.n_events == sb.n_events);
  CHECK(testutil::read_file(a / "ratings.dat") == testutil::read_file(b / "ratings.dat"));
  CHECK(testutil::read_file(a / "movies.dat") == testutil::read_file(b / "movies.dat"));

  // A different seed changes the corpus.
  SynthSpec reseeded = spec;
  reseeded.seed += 1;
  testutil::TempDir c;
  (void)synth::write_movielens_files(reseeded, c.path());
  CHECK(testutil::read_file(a / "ratings.dat") != testutil::read_file(c / "ratings.dat"));
}

TEST_CASE("movielens corpus hits its configured counts exactly") {
  // Cap per-user activity below the catalogue size so the no-repeat property
  // is actually achievable at this tiny scale.
  SynthSpec spec = SynthSpec::movielens_replica().scaled(0.01);
  spec.max_user_events = 30;
  testutil::TempDir dir;
  const SynthSummary summary = synth::write_movielens_files(spec, dir.path());

  CHECK(summary.n_users == spec.n_users);
  CHECK(summary.n_events == spec.total_events);
  CHECK(summary.n_filtered_events == spec.n_uncatalogued_events);
  CHECK(summary.n_catalog_records == spec.n_rated_items + spec.n_catalog_extras);

  const data::LoadResult loaded = load_movielens_dir(dir.path());
  CHECK(loaded.interactions.size() == spec.total_events + spec.n_uncatalogued_events);
  CHECK(loaded.catalog.size() == summary.n_catalog_records);
  CHECK(loaded.n_skipped == 0);

  // The metadata filter drops exactly the uncatalogued-item events.
  const auto kept =
      data::filter_missing_metadata(loaded.interactions, loaded.catalog);
  CHECK(kept.size() == spec.total_events);

  // Every user appears, and nobody rates the same catalogued item twice.
  // (Uncatalogued extras are drawn with replacement by design.)
  std::set<std::string> users;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& e : loaded.interactions) {
    users.insert(e.user_id);
    if (loaded.catalog.find(e.item_id) != nullptr) {
      CHECK(pairs.emplace(e.user_id, e.item_id).second);
    }
  }
  CHECK(users.size() == spec.n_users);
}

TEST_CASE("movielens events stay inside the time range in per-user order") {
  const SynthSpec spec = SynthSpec::movielens_replica().scaled(0.01);
  testutil::TempDir dir;
  (void)synth::write_movielens_files(spec, dir.path());
  const data::LoadResult loaded = load_movielens_dir(dir.path());

  const auto range = static_cast<double>(spec.t_end - spec.t_start);
  const auto t_cap = spec.t_end + static_cast<std::int64_t>(0.02 * range);
  std::unordered_map<std::string, std::int64_t> last_seen;
  for (const auto& e : loaded.interactions) {
    CHECK(e.timestamp >= spec.t_start);
    CHECK(e.timestamp <= t_cap);
    CHECK(e.rating == std::floor(e.rating));  // whole stars only
    CHECK(e.rating >= 1.0);
    CHECK(e.rating <= 5.0);
    auto [it, fresh] = last_seen.emplace(e.user_id, e.timestamp);
    if (!fresh) {
      CHECK(e.timestamp >= it->second);  // each user's stream is chronological
      it->second = e.timestamp;
    }
  }
}

TEST_CASE("amazon corpus counts, formats and metadata holes") {
  const SynthSpec spec = SynthSpec::amazon_replica().scaled(0.01);
  testutil::TempDir dir;
  const SynthSummary summary = synth::write_amazon_files(spec, dir.path());
  CHECK(summary.n_users == spec.n_users);
  CHECK(summary.n_events == spec.total_events);
  CHECK(summary.n_filtered_events == spec.n_uncatalogued_events);

  const data::LoadResult loaded = load_amazon_dir(dir.path());
  CHECK(loaded.n_skipped == 0);
  CHECK(loaded.interactions.size() == spec.total_events + spec.n_uncatalogued_events);
  CHECK(loaded.catalog.size() == summary.n_catalog_records);

  const auto kept =
      data::filter_missing_metadata(loaded.interactions, loaded.catalog);
  CHECK(kept.size() == spec.total_events);

  for (const auto& e : loaded.interactions) {
    CHECK(e.rating == std::floor(e.rating));
    CHECK(e.user_id.rfind("A", 0) == 0);  // review-style reviewer ids
    CHECK(e.item_id.size() == 10);        // asin-shaped item ids
  }
}

TEST_CASE("amazon writer is deterministic too") {
  const SynthSpec spec = SynthSpec::amazon_replica().scaled(0.005);
  testutil::TempDir a, b;
  (void)synth::write_amazon_files(spec, a.path());
  (void)synth::write_amazon_files(spec, b.path());
  CHECK(testutil::read_file(a / "reviews.json") ==
        testutil::read_file(b / "reviews.json"));
  CHECK(testutil::read_file(a / "meta.json") == testutil::read_file(b / "meta.json"));
}

TEST_CASE("scaling keeps the spec self-consistent") {
  const SynthSpec base = SynthSpec::movielens_replica();
  const SynthSpec half = base.scaled(0.5);
  CHECK(half.n_users == 3020);
  CHECK(half.n_rated_items == 1845);
  CHECK(half.total_events <= base.total_events);
  CHECK(half.n_users * half.min_user_events <= half.total_events);
  CHECK(half.total_events <= half.n_users * half.n_rated_items);

  // Even absurdly small factors produce a writable corpus.
  const SynthSpec tiny = base.scaled(1e-6);
  CHECK(tiny.n_users == 1);
  CHECK(tiny.n_rated_items == 1);
  testutil::TempDir dir;
  const SynthSummary summary = synth::write_movielens_files(tiny, dir.path());
  CHECK(summary.n_events == tiny.total_events);

  CHECK_THROWS_AS((void)base.scaled(0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)base.scaled(-1.0), std::invalid_argument);
}

TEST_CASE("spec json round-trips and honors partial overrides") {
  SynthSpec spec = SynthSpec::amazon_replica();
  spec.mu = 4.11;
  spec.n_late_items = 77;
  const SynthSpec back = SynthSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK(back.mu == 4.11);
  CHECK(back.n_late_items == 77);
  CHECK(back.kind == "amazon");

  const SynthSpec partial = SynthSpec::from_json(R"({"mu": 4.0, "seed": 99})");
  CHECK(partial.mu == 4.0);
  CHECK(partial.seed == 99);
  CHECK(partial.n_users == SynthSpec{}.n_users);  // untouched default
  CHECK(partial.kind == "movielens");
}

TEST_CASE("invalid specs are rejected before any files are written") {
  testutil::TempDir dir;
  const auto expect_invalid = [&](SynthSpec spec) {
    if (spec.kind == "movielens") {
      CHECK_THROWS_AS((void)synth::write_movielens_files(spec, dir.path()),
                      std::invalid_argument);
    } else {
      CHECK_THROWS_AS((void)synth::write_amazon_files(spec, dir.path()),
                      std::invalid_argument);
    }
  };

  SynthSpec wrong_writer = SynthSpec::amazon_replica();
  CHECK_THROWS_AS((void)synth::write_movielens_files(wrong_writer, dir.path()),
                  std::invalid_argument);

  SynthSpec unknown = SynthSpec::movielens_replica().scaled(0.01);
  unknown.kind = "netflix";
  CHECK_THROWS_AS((void)synth::write_movielens_files(unknown, dir.path()),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)synth::write_amazon_files(unknown, dir.path()),
                  std::invalid_argument);

  SynthSpec empty_range = SynthSpec::movielens_replica().scaled(0.01);
  empty_range.t_end = empty_range.t_start;
  expect_invalid(empty_range);

  SynthSpec bad_mood = SynthSpec::movielens_replica().scaled(0.01);
  bad_mood.mood_rho = 1.0;
  expect_invalid(bad_mood);

  SynthSpec bad_shock = SynthSpec::amazon_replica().scaled(0.01);
  bad_shock.neg_shock_prob = 0.7;
  expect_invalid(bad_shock);

  SynthSpec unreachable = SynthSpec::movielens_replica().scaled(0.01);
  unreachable.total_events = unreachable.n_users * unreachable.max_user_events + 1;
  expect_invalid(unreachable);

  SynthSpec no_items = SynthSpec::movielens_replica().scaled(0.01);
  no_items.n_rated_items = 0;
  expect_invalid(no_items);
}

}  // TEST_SUITE
