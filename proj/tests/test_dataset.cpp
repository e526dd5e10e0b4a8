#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "ratebench/dataset.hpp"

using namespace ratebench::data;

TEST_SUITE("dataset") {

TEST_CASE("movielens loader parses ratings and movies") {
  std::istringstream movies(
      "1::Toy Story (1995)::Animation|Children's|Comedy\n"
      "2::Heat (1995)::Action|Crime|Thriller\n"
      "3::Subtitled::\n");
  std::istringstream ratings(
      "1::1::5::978300760\n"
      "1::2::3.5::978302109\n"
      "2::1::4::978301968\n");
  const LoadResult r = load_movielens(ratings, movies);
  REQUIRE(r.interactions.size() == 3);
  CHECK(r.n_skipped == 0);
  CHECK(r.interactions[0].user_id == "1");
  CHECK(r.interactions[0].item_id == "1");
  CHECK(r.interactions[0].rating == 5.0);
  CHECK(r.interactions[0].timestamp == 978300760);
  CHECK(r.interactions[1].rating == 3.5);

  REQUIRE(r.catalog.size() == 3);
  const ItemMeta* toy = r.catalog.find("1");
  REQUIRE(toy != nullptr);
  CHECK(toy->title == "Toy Story (1995)");
  CHECK(toy->attributes ==
        std::vector<std::string>{"Animation", "Children's", "Comedy"});
  CHECK_FALSE(toy->metadata_missing);
  CHECK(r.catalog.find("3")->attributes.empty());
  CHECK(r.catalog.find("missing") == nullptr);
}

TEST_CASE("movielens titles containing the separator survive") {
  std::istringstream movies("7::Face::Off (1997)::Action\n");
  std::istringstream ratings("");
  const LoadResult r = load_movielens(ratings, movies);
  REQUIRE(r.catalog.size() == 1);
  CHECK(r.catalog.find("7")->title == "Face::Off (1997)");
}

TEST_CASE("movielens latin-1 titles become utf-8") {
  // 0xE9 is e-acute in Latin-1; UTF-8 spells it 0xC3 0xA9.
  std::istringstream movies("9::Caf\xE9 des R\xEAves (1993)::Drama\n");
  std::istringstream ratings("");
  const LoadResult r = load_movielens(ratings, movies);
  CHECK(r.catalog.find("9")->title == "Caf\xC3\xA9 des R\xC3\xAAves (1993)");
}

TEST_CASE("movielens rejects malformed lines with the line number") {
  std::istringstream movies("1::Fine (2000)::Drama\n");
  std::istringstream bad_sep("1::1::5::978300760\n1:1:5:978300760\n");
  try {
    (void)load_movielens(bad_sep, movies);
    FAIL("expected RecordError");
  } catch (const RecordError& e) {
    CHECK(e.where() == 2);
  }

  std::istringstream movies2("1::Fine (2000)::Drama\n");
  std::istringstream bad_rating("1::1::9::978300760\n");
  CHECK_THROWS_AS((void)load_movielens(bad_rating, movies2), RecordError);

  std::istringstream bad_movie_line("1::No Genres Field\n");
  std::istringstream no_ratings("");
  CHECK_THROWS_AS((void)load_movielens(no_ratings, bad_movie_line), RecordError);
}

TEST_CASE("amazon loader reads reviews and metadata") {
  std::istringstream meta(
      R"({"asin":"B00001","title":"A Long Novel","brand":"Sample House"})"
      "\n"
      R"({"asin":"B00002"})"
      "\n"
      R"({"asin":"B00003","title":""})"
      "\n");
  std::istringstream reviews(
      R"({"reviewerID":"AUSER1","asin":"B00001","overall":5.0,"unixReviewTime":1400000000})"
      "\n"
      R"({"reviewerID":"AUSER2","asin":"B00002","overall":3.0,"unixReviewTime":1400000100})"
      "\n"
      R"({"reviewerID":"AUSER2","asin":"B00001","overall":9.0,"unixReviewTime":1400000200})"
      "\n"
      R"({"asin":"B00001","overall":4.0,"unixReviewTime":1400000300})"
      "\n");
  const LoadResult r = load_amazon_books(reviews, meta);
  REQUIRE(r.interactions.size() == 2);
  CHECK(r.n_skipped == 2);  // out-of-range rating + missing reviewerID
  CHECK(r.interactions[0].user_id == "AUSER1");
  CHECK(r.interactions[0].rating == 5.0);

  const ItemMeta* book = r.catalog.find("B00001");
  REQUIRE(book != nullptr);
  CHECK(book->title == "A Long Novel");
  CHECK(book->attributes == std::vector<std::string>{"Sample House"});
  CHECK_FALSE(book->metadata_missing);
  CHECK(r.catalog.find("B00002")->metadata_missing);  // no title at all
  CHECK(r.catalog.find("B00003")->metadata_missing);  // empty title
}

TEST_CASE("amazon loader throws on corrupt json with a byte offset") {
  std::istringstream meta("not json\n");
  std::istringstream reviews("");
  CHECK_THROWS_AS((void)load_amazon_books(reviews, meta), RecordError);
}

TEST_CASE("metadata filter drops unknown and missing-metadata items") {
  Catalog catalog;
  catalog.add({"known", "A Title", {}, false});
  catalog.add({"untitled", "", {}, true});
  std::vector<Interaction> log = {
      {"u1", "known", 4.0, 100},
      {"u1", "untitled", 3.0, 200},
      {"u1", "absent", 5.0, 300},
      {"u2", "known", 2.0, 400},
  };
  const auto kept = filter_missing_metadata(std::move(log), catalog);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].item_id == "known");
  CHECK(kept[1].timestamp == 400);
}

TEST_CASE("chronological split orders by time and cuts at the floor") {
  std::vector<Interaction> log = {
      {"u2", "i1", 3.0, 500},
      {"u1", "i1", 4.0, 100},
      {"u3", "i2", 5.0, 300},
      {"u1", "i2", 2.0, 200},
      {"u2", "i3", 1.0, 400},
  };
  const ChronSplit split = chronological_split(log, 0.6);
  REQUIRE(split.train.size() == 3);  // floor(0.6 * 5)
  REQUIRE(split.test.size() == 2);
  CHECK(split.train[0].timestamp == 100);
  CHECK(split.train[2].timestamp == 300);
  CHECK(split.test[0].timestamp == 400);
  CHECK(split.boundary_timestamp == 300);
  // Everything in test is at or after the boundary.
  for (const Interaction& e : split.test) {
    CHECK(e.timestamp >= split.boundary_timestamp);
  }
}

TEST_CASE("chronological split breaks timestamp ties deterministically") {
  std::vector<Interaction> log = {
      {"ub", "i2", 3.0, 100},
      {"ua", "i9", 4.0, 100},
      {"ub", "i1", 5.0, 100},
  };
  const ChronSplit split = chronological_split(log, 0.67);
  REQUIRE(split.train.size() == 2);
  CHECK(split.train[0].user_id == "ua");
  CHECK(split.train[1].item_id == "i1");  // (ub,i1) before (ub,i2)
  CHECK(split.test[0].item_id == "i2");
}

TEST_CASE("chronological split validates the fraction") {
  std::vector<Interaction> log = {{"u", "i", 3.0, 1}};
  CHECK_THROWS_AS((void)chronological_split(log, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)chronological_split(log, 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)chronological_split(log, -0.5), std::invalid_argument);
}

TEST_CASE("examples carry the most recent history, oldest first") {
  std::vector<Interaction> log;
  for (int t = 0; t < 15; ++t) {
    log.push_back({"u1", "i" + std::to_string(t), static_cast<double>(1 + t % 5),
                   static_cast<std::int64_t>(1000 + t)});
  }
  const ChronSplit split = chronological_split(log, 0.8);  // 12 train, 3 test
  ExampleOptions options;
  options.max_history = 10;

  const auto train_ex = build_examples(split, ExampleSource::Train, options);
  REQUIRE(train_ex.size() == 12);
  CHECK(train_ex[0].history.empty());
  CHECK(train_ex[5].history.size() == 5);
  CHECK(train_ex[11].history.size() == 10);  // capped
  // Oldest first, strictly before the candidate.
  const RatingExample& last = train_ex[11];
  CHECK(last.history.front().item_id == "i1");
  CHECK(last.history.back().item_id == "i10");
  CHECK(last.history.back().timestamp < last.timestamp);

  const auto test_ex = build_examples(split, ExampleSource::Test, options);
  REQUIRE(test_ex.size() == 3);
  // Default: test examples may use earlier test-period history.
  CHECK(test_ex[2].history.back().item_id == "i13");

  ExampleOptions train_only = options;
  train_only.train_only_history = true;
  const auto strict_ex = build_examples(split, ExampleSource::Test, train_only);
  CHECK(strict_ex[2].history.back().item_id == "i11");
}

TEST_CASE("visit and build produce identical streams") {
  const auto log = testutil::small_log(5, 9, 60);
  const ChronSplit split = chronological_split(log, 0.7);
  const auto built = build_examples(split, ExampleSource::Train, {});
  std::vector<RatingExample> streamed;
  visit_examples(split, ExampleSource::Train, {},
                 [&](const RatingExample& e) { streamed.push_back(e); });
  REQUIRE(streamed.size() == built.size());
  for (std::size_t i = 0; i < built.size(); ++i) {
    CHECK(streamed[i].user_id == built[i].user_id);
    CHECK(streamed[i].item_id == built[i].item_id);
    CHECK(streamed[i].label == built[i].label);
    CHECK(streamed[i].history.size() == built[i].history.size());
  }
}

TEST_CASE("history respects max_history") {
  std::vector<Interaction> log;
  for (int t = 0; t < 10; ++t) {
    log.push_back({"u", "i" + std::to_string(t), 3.0, static_cast<std::int64_t>(t)});
  }
  const ChronSplit split = chronological_split(log, 0.9);
  ExampleOptions options;
  options.max_history = 3;
  const auto ex = build_examples(split, ExampleSource::Train, options);
  CHECK(ex.back().history.size() == 3);
  CHECK(ex.back().history.front().item_id == "i5");
}

TEST_CASE("test sampling is seeded, unique and order stable") {
  const auto log = testutil::small_log(10, 20, 200);
  const ChronSplit split = chronological_split(log, 0.5);
  const auto pool = build_examples(split, ExampleSource::Test, {});
  REQUIRE(pool.size() == 100);

  const auto a = sample_test(pool, 30, 42);
  const auto b = sample_test(pool, 30, 42);
  const auto c = sample_test(pool, 30, 43);
  REQUIRE(a.size() == 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].user_id == b[i].user_id);
    CHECK(a[i].item_id == b[i].item_id);
    CHECK(a[i].timestamp == b[i].timestamp);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].item_id != c[i].item_id || a[i].timestamp != c[i].timestamp) {
      differs = true;
      break;
    }
  }
  CHECK(differs);

  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const auto& e : a) seen.insert({e.user_id + "/" + e.item_id, e.timestamp});
  CHECK(seen.size() == a.size());

  // Requesting more than available returns everything.
  CHECK(sample_test(pool, 1000, 1).size() == pool.size());
}

TEST_CASE("interactions round-trip through jsonl") {
  std::vector<Interaction> log = {
      {"u1", "i1", 4.5, 1000},
      {"u2", "caf\xC3\xA9", 1.0, 2000},  // utf-8 id survives
  };
  std::ostringstream out;
  write_interactions_jsonl(log, out);
  std::istringstream in(out.str());
  const auto back = read_interactions_jsonl(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == log[0]);
  CHECK(back[1] == log[1]);
}

TEST_CASE("catalog round-trips through jsonl") {
  Catalog catalog;
  catalog.add({"i1", "Caf\xC3\xA9 Lumi\xC3\xA8re (2001)", {"Drama", "Romance"}, false});
  catalog.add({"i2", "", {}, true});
  std::ostringstream out;
  write_catalog_jsonl(catalog, out);
  std::istringstream in(out.str());
  const Catalog back = read_catalog_jsonl(in);
  REQUIRE(back.size() == 2);
  CHECK(back.find("i1")->title == catalog.find("i1")->title);
  CHECK(back.find("i1")->attributes == catalog.find("i1")->attributes);
  CHECK(back.find("i2")->metadata_missing);
  CHECK(back.position("i2") == 1);
}

TEST_CASE("content hash is order and value sensitive") {
  std::vector<Interaction> a = {{"u", "i", 4.0, 1}, {"v", "j", 3.0, 2}};
  std::vector<Interaction> reordered = {a[1], a[0]};
  std::vector<Interaction> changed = {{"u", "i", 5.0, 1}, {"v", "j", 3.0, 2}};
  CHECK(content_hash(a) == content_hash(a));
  CHECK(content_hash(a) != content_hash(reordered));
  CHECK(content_hash(a) != content_hash(changed));
  CHECK(fnv1a_hash("abc") != fnv1a_hash("abd"));
}

}  // TEST_SUITE
