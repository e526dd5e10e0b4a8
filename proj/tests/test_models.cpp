#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "ratebench/models/heuristics.hpp"
#include "ratebench/models/supervised.hpp"

using namespace ratebench;
using namespace ratebench::models;

namespace {

/// Small end-to-end fixture: raw log -> split -> vocabs -> encoded examples.
struct Bench {
  data::Catalog catalog;
  data::ChronSplit split;
  feat::VocabSet vocabs;
  feat::EncodedCatalog enc;
  std::vector<feat::EncodedExample> train, test;

  Bench() : Bench(testutil::small_log(12, 9, 240)) {}

  explicit Bench(std::vector<data::Interaction> log)
      : catalog(testutil::small_catalog(9)),
        split(data::chronological_split(std::move(log), 0.8)),
        vocabs(feat::build_vocabs(split.train, catalog, 1)),
        enc(catalog, vocabs) {
    for (const auto& e : data::build_examples(split, data::ExampleSource::Train)) {
      train.push_back(feat::encode_example(e, vocabs, catalog));
    }
    for (const auto& e : data::build_examples(split, data::ExampleSource::Test)) {
      test.push_back(feat::encode_example(e, vocabs, catalog));
    }
  }

  ModelConfig config(ModelKind kind, HeadKind head = HeadKind::Regression) const {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.head = head;
    cfg.embedding_dim = 8;
    cfg.hidden = {12};
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.n_users = vocabs.user.size();
    cfg.n_items = vocabs.item.size();
    cfg.n_title_tokens = vocabs.title.size();
    cfg.n_attributes = vocabs.attribute.size();
    return cfg;
  }

  const feat::EncodedExample& with_history(std::int32_t at_least) const {
    for (const auto& e : train) {
      if (e.history_len >= at_least) return e;
    }
    throw std::logic_error("fixture lacks a long-history example");
  }

  const feat::EncodedExample& without_history() const {
    for (const auto& e : train) {
      if (e.history_len == 0) return e;
    }
    throw std::logic_error("fixture lacks a no-history example");
  }
};

/// Ratings driven by additive user and item effects, so bias models can
/// actually learn something.
std::vector<data::Interaction> structured_log() {
  std::vector<data::Interaction> log;
  for (int e = 0; e < 240; ++e) {
    const int u = e % 12;
    const int i = (e / 2) % 9;
    const double ub = 0.8 * static_cast<double>(u % 5 - 2);
    const double ib = 0.5 * static_cast<double>(i % 3 - 1);
    const double r = std::clamp(std::round(3.0 + ub + ib), 1.0, 5.0);
    log.push_back({"u" + std::to_string(u), "i" + std::to_string(i), r,
                   1000000 + 60 * static_cast<std::int64_t>(e)});
  }
  return log;
}

/// Central-difference check of accumulate_example's parameter gradients on a
/// handful of entries per tensor.
void check_model_gradients(const Bench& bench, const ModelConfig& cfg,
                           const feat::EncodedExample& example) {
  SupervisedModel model(cfg, /*init_seed=*/7);
  auto loss_at = [&]() {
    return accumulate_example(model, bench.enc, example, 1.0, nullptr);
  };

  model.params.zero_grads();
  (void)accumulate_example(model, bench.enc, example, 1.0, nullptr);
  std::vector<std::vector<double>> grads;
  for (const kernel::Parameter* p : model.params.all()) {
    grads.emplace_back(p->grad.values().begin(), p->grad.values().end());
  }

  kernel::Rng pick(31);
  const double h = 1e-6;
  std::size_t tensor_idx = 0;
  for (kernel::Parameter* p : model.params.all()) {
    const std::vector<double>& analytic = grads[tensor_idx++];
    const std::size_t n = p->value.size();
    const std::size_t n_probe = std::min<std::size_t>(4, n);
    for (std::size_t probe = 0; probe < n_probe; ++probe) {
      const auto i = static_cast<std::size_t>(pick.below(n));
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss_at();
      p->value[i] = saved - h;
      const double down = loss_at();
      p->value[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double err = testutil::rel_err(analytic[i], fd);
      INFO("tensor ", p->name, " index ", i, " analytic ", analytic[i], " fd ", fd);
      CHECK(err < 5e-4);
    }
  }
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("heuristic kinds round-trip through strings") {
  CHECK(to_string(HeuristicKind::Global) == "global");
  CHECK(heuristic_kind_from_string("item") == HeuristicKind::Item);
  CHECK(heuristic_kind_from_string("user") == HeuristicKind::User);
  CHECK_THROWS_AS((void)heuristic_kind_from_string("median"), std::invalid_argument);
}

TEST_CASE("heuristic stats match hand-computed means") {
  const std::vector<data::Interaction> train = {
      {"u1", "i1", 5.0, 1}, {"u1", "i2", 3.0, 2}, {"u2", "i1", 1.0, 3},
      {"u2", "i2", 4.0, 4}, {"u3", "i1", 3.0, 5},
  };
  const HeuristicStats stats = fit_heuristics(train);
  CHECK(stats.n == 5);
  CHECK(stats.global_mean == doctest::Approx(16.0 / 5.0).epsilon(1e-12));
  CHECK(stats.per_item.at("i1").mean() == doctest::Approx(3.0));
  CHECK(stats.per_item.at("i2").mean() == doctest::Approx(3.5));
  CHECK(stats.per_user.at("u1").mean() == doctest::Approx(4.0));
  CHECK(stats.per_user.at("u3").count == 1);

  CHECK(predict_heuristic(stats, HeuristicKind::Global, "u1", "i1") ==
        doctest::Approx(3.2));
  CHECK(predict_heuristic(stats, HeuristicKind::Item, "u9", "i2") ==
        doctest::Approx(3.5));
  CHECK(predict_heuristic(stats, HeuristicKind::User, "u2", "i9") ==
        doctest::Approx(2.5));
  // Unseen ids fall back to the global mean.
  CHECK(predict_heuristic(stats, HeuristicKind::Item, "u1", "unknown") ==
        doctest::Approx(3.2));
  CHECK(predict_heuristic(stats, HeuristicKind::User, "unknown", "i1") ==
        doctest::Approx(3.2));

  CHECK_THROWS_AS((void)fit_heuristics({}), std::invalid_argument);
}

TEST_CASE("heuristics agree with a brute-force recount on a random log") {
  const auto log = testutil::small_log(7, 11, 150);
  const HeuristicStats stats = fit_heuristics(log);
  for (const char* user : {"u0", "u3", "u6"}) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : log) {
      if (e.user_id == user) {
        sum += e.rating;
        ++n;
      }
    }
    CHECK(predict_heuristic(stats, HeuristicKind::User, user, "whatever") ==
          doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
  }
}

TEST_CASE("model enums round-trip through strings") {
  CHECK(model_kind_from_string("mf") == ModelKind::MF);
  CHECK(model_kind_from_string("mlp") == ModelKind::MLP);
  CHECK(model_kind_from_string("transformer_mlp") == ModelKind::TransformerMLP);
  CHECK(to_string(ModelKind::TransformerMLP) == "transformer_mlp");
  CHECK(head_kind_from_string("regression") == HeadKind::Regression);
  CHECK(head_kind_from_string("classification") == HeadKind::Classification);
  CHECK(aggregation_from_string("concat") == Aggregation::Concat);
  CHECK(to_string(Aggregation::Add) == "add");
  CHECK_THROWS_AS((void)model_kind_from_string("gbdt"), std::invalid_argument);
  CHECK_THROWS_AS((void)head_kind_from_string("ordinal"), std::invalid_argument);
  CHECK_THROWS_AS((void)aggregation_from_string("sum"), std::invalid_argument);
}

TEST_CASE("model config widths and json round-trip") {
  ModelConfig cfg;
  cfg.embedding_dim = 16;
  CHECK(cfg.d_model() == 16);
  cfg.aggregation = Aggregation::Concat;
  CHECK(cfg.d_model() == 64);
  CHECK(cfg.head_width() == 1);
  cfg.head = HeadKind::Classification;
  CHECK(cfg.head_width() == 5);

  cfg.kind = ModelKind::TransformerMLP;
  cfg.hidden = {32, 8};
  cfg.dropout = 0.1;
  cfg.l2 = 1e-5;
  cfg.n_users = 12;
  cfg.n_items = 34;
  const ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.kind == cfg.kind);
  CHECK(back.head == cfg.head);
  CHECK(back.embedding_dim == cfg.embedding_dim);
  CHECK(back.hidden == cfg.hidden);
  CHECK(back.aggregation == cfg.aggregation);
  CHECK(back.dropout == cfg.dropout);
  CHECK(back.l2 == cfg.l2);
  CHECK(back.n_users == cfg.n_users);
  CHECK(back.n_items == cfg.n_items);
}

TEST_CASE("mf accepts only the regression head") {
  const Bench bench;
  CHECK_THROWS_AS(SupervisedModel(bench.config(ModelKind::MF, HeadKind::Classification)),
                  std::invalid_argument);
}

TEST_CASE("head decode clamps regression and argmaxes classification") {
  CHECK(head_decode(HeadKind::Regression, kernel::Tensor::row({3.7})) == 3.7);
  CHECK(head_decode(HeadKind::Regression, kernel::Tensor::row({9.2})) == 5.0);
  CHECK(head_decode(HeadKind::Regression, kernel::Tensor::row({-0.4})) == 1.0);
  CHECK(head_decode(HeadKind::Classification,
                    kernel::Tensor::row({0.1, 2.0, -1.0, 1.9, 0.0})) == 2.0);
  // Strict comparison: the first of tied maxima wins.
  CHECK(head_decode(HeadKind::Classification,
                    kernel::Tensor::row({1.0, 1.0, 1.0, 1.0, 1.0})) == 1.0);
  CHECK_THROWS_AS((void)head_decode(HeadKind::Regression, kernel::Tensor::row({1, 2})),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)head_decode(HeadKind::Classification, kernel::Tensor::row({1, 2, 3})),
      std::invalid_argument);
}

TEST_CASE("forward widths match the head and predictions stay in range") {
  const Bench bench;
  for (const ModelKind kind :
       {ModelKind::MF, ModelKind::MLP, ModelKind::TransformerMLP}) {
    const SupervisedModel model(bench.config(kind), 3);
    const kernel::Tensor raw = forward(model, bench.enc, bench.with_history(2));
    CHECK(raw.size() == 1);
    for (const auto& e : bench.test) {
      const double p = predict(model, bench.enc, e);
      CHECK(p >= 1.0);
      CHECK(p <= 5.0);
    }
  }
  const SupervisedModel cls(
      bench.config(ModelKind::TransformerMLP, HeadKind::Classification), 3);
  CHECK(forward(cls, bench.enc, bench.with_history(2)).size() == 5);
  const double decoded = predict(cls, bench.enc, bench.test.front());
  CHECK(decoded == std::floor(decoded));  // classes decode to whole stars
}

TEST_CASE("example gradients match finite differences: mf") {
  const Bench bench;
  check_model_gradients(bench, bench.config(ModelKind::MF), bench.with_history(1));
}

TEST_CASE("example gradients match finite differences: mlp") {
  const Bench bench;
  check_model_gradients(bench, bench.config(ModelKind::MLP), bench.with_history(3));
  check_model_gradients(bench, bench.config(ModelKind::MLP), bench.without_history());
}

TEST_CASE("example gradients match finite differences: transformer") {
  const Bench bench;
  check_model_gradients(bench, bench.config(ModelKind::TransformerMLP),
                        bench.with_history(3));
  check_model_gradients(bench, bench.config(ModelKind::TransformerMLP),
                        bench.without_history());
  check_model_gradients(
      bench, bench.config(ModelKind::TransformerMLP, HeadKind::Classification),
      bench.with_history(2));
}

TEST_CASE("example gradients match finite differences: concat aggregation") {
  const Bench bench;
  ModelConfig cfg = bench.config(ModelKind::TransformerMLP);
  cfg.aggregation = Aggregation::Concat;
  check_model_gradients(bench, cfg, bench.with_history(2));
}

TEST_CASE("evaluate is independent of the thread count") {
  const Bench bench;
  const SupervisedModel model(bench.config(ModelKind::MLP), 11);
  const auto one = evaluate(model, bench.enc, bench.test, 1);
  const auto three = evaluate(model, bench.enc, bench.test, 3);
  const auto many = evaluate(model, bench.enc, bench.test, 64);
  CHECK(one.rmse == three.rmse);
  CHECK(one.mae == three.mae);
  CHECK(one.auc == three.auc);
  CHECK(one.rmse == many.rmse);
  CHECK(one.n == bench.test.size());
}

TEST_CASE("training is bitwise deterministic") {
  const Bench bench;
  TrainConfig tc;
  tc.steps = 40;
  tc.batch_size = 16;
  tc.seed = 5;
  tc.eval_every = 10;

  auto run = [&]() {
    SupervisedModel model(bench.config(ModelKind::MLP), 11);
    const TrainCurve curve = train(model, bench.enc, bench.train, tc, &bench.test);
    std::vector<double> preds;
    for (const auto& e : bench.test) preds.push_back(predict(model, bench.enc, e));
    return std::make_pair(curve, preds);
  };
  const auto [curve_a, preds_a] = run();
  const auto [curve_b, preds_b] = run();
  REQUIRE(curve_a.points.size() == curve_b.points.size());
  REQUIRE(curve_a.points.size() == 4);
  for (std::size_t i = 0; i < curve_a.points.size(); ++i) {
    CHECK(curve_a.points[i].step == curve_b.points[i].step);
    CHECK(curve_a.points[i].train_loss == curve_b.points[i].train_loss);
    CHECK(curve_a.points[i].eval_rmse == curve_b.points[i].eval_rmse);
  }
  CHECK(preds_a == preds_b);

  // A different ordering seed gives a different trajectory.
  SupervisedModel other(bench.config(ModelKind::MLP), 11);
  TrainConfig tc2 = tc;
  tc2.seed = 6;
  const TrainCurve curve_c = train(other, bench.enc, bench.train, tc2, &bench.test);
  CHECK(curve_c.points.back().train_loss != curve_a.points.back().train_loss);
}

TEST_CASE("training drives eval rmse below the initial model") {
  const Bench bench(structured_log());
  SupervisedModel model(bench.config(ModelKind::MF), 2);
  const double before = evaluate(model, bench.enc, bench.test).rmse;
  TrainConfig tc;
  tc.steps = 400;
  tc.batch_size = 32;
  tc.learning_rate = 1e-2;
  const TrainCurve curve = train(model, bench.enc, bench.train, tc, &bench.test);
  REQUIRE(curve.points.size() == 1);
  CHECK(curve.points.back().step == 400);
  CHECK(curve.points.back().eval_rmse < before - 0.3);
  CHECK(curve.points.back().eval_rmse == evaluate(model, bench.enc, bench.test).rmse);
}

TEST_CASE("train rejects bad configurations") {
  const Bench bench;
  SupervisedModel model(bench.config(ModelKind::MF), 1);
  TrainConfig tc;
  tc.steps = 0;
  CHECK_THROWS_AS((void)train(model, bench.enc, bench.train, tc), std::invalid_argument);
  tc.steps = 1;
  tc.batch_size = 0;
  CHECK_THROWS_AS((void)train(model, bench.enc, bench.train, tc), std::invalid_argument);
  tc.batch_size = 4;
  tc.data_fraction = 0.0;
  CHECK_THROWS_AS((void)train(model, bench.enc, bench.train, tc), std::invalid_argument);
  tc.data_fraction = 1.5;
  CHECK_THROWS_AS((void)train(model, bench.enc, bench.train, tc), std::invalid_argument);
  tc.data_fraction = 1.0;
  tc.learning_rate = 0.0;
  CHECK_THROWS_AS((void)train(model, bench.enc, bench.train, tc), std::invalid_argument);
  tc.learning_rate = 1e-3;
  CHECK_THROWS_AS((void)train(model, bench.enc, {}, tc), std::invalid_argument);
}

TEST_CASE("divergence carries the partial curve") {
  const Bench bench;
  ModelConfig cfg = bench.config(ModelKind::MLP);
  cfg.hidden = {12, 12};  // enough depth for activations to overflow
  SupervisedModel model(cfg, 1);
  TrainConfig tc;
  tc.steps = 500;
  tc.batch_size = 8;
  tc.learning_rate = 1e40;  // guaranteed blow-up
  tc.eval_every = 1;
  try {
    (void)train(model, bench.enc, bench.train, tc);
    FAIL("expected TrainDivergence");
  } catch (const TrainDivergence& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
    // Every completed step recorded a point; all of them are finite.
    for (const TrainPoint& p : e.partial_curve().points) {
      CHECK(std::isfinite(p.train_loss));
    }
    CHECK(e.partial_curve().points.size() < 500);
  }
}

TEST_CASE("train subsamples with data_fraction deterministically") {
  const Bench bench;
  TrainConfig tc;
  tc.steps = 30;
  tc.batch_size = 8;
  tc.data_fraction = 0.2;
  auto run = [&]() {
    SupervisedModel model(bench.config(ModelKind::MF), 4);
    return train(model, bench.enc, bench.train, tc).points.back().train_loss;
  };
  CHECK(run() == run());

  TrainConfig full = tc;
  full.data_fraction = 1.0;
  SupervisedModel model(bench.config(ModelKind::MF), 4);
  const double full_loss = train(model, bench.enc, bench.train, full).points.back().train_loss;
  CHECK(run() != full_loss);  // different data reached a different loss
}

TEST_CASE("curve serialization carries every recorded point") {
  TrainCurve curve;
  curve.points.push_back({10, 1.5, 1.1, 0.7});
  curve.points.push_back({20, 1.2, 1.05, 0.72});
  CHECK(TrainCurve::csv_header() == "step,train_loss,eval_rmse,eval_auc");
  const std::string rows = curve.csv_rows();
  CHECK(rows.find("10,1.5,1.1,0.7\n") != std::string::npos);
  CHECK(rows.find("20,1.2,1.05,0.72\n") != std::string::npos);
  CHECK(curve.to_json().find("\"step\": 10") != std::string::npos);
}

TEST_CASE("models survive a save/load round-trip") {
  const Bench bench;
  testutil::TempDir dir;
  SupervisedModel model(bench.config(ModelKind::TransformerMLP), 9);
  TrainConfig tc;
  tc.steps = 20;
  tc.batch_size = 8;
  (void)train(model, bench.enc, bench.train, tc);

  save_model(model, dir / "model");
  const SupervisedModel back = load_model(dir / "model");
  CHECK(back.config.kind == model.config.kind);
  CHECK(back.config.embedding_dim == model.config.embedding_dim);

  // Checkpoints narrow to float32, so predictions match to float precision
  // and a second round-trip is exact.
  for (const auto& e : bench.test) {
    CHECK(std::fabs(predict(model, bench.enc, e) - predict(back, bench.enc, e)) < 1e-4);
  }
  save_model(back, dir / "model2");
  const SupervisedModel again = load_model(dir / "model2");
  for (const auto& e : bench.test) {
    CHECK(predict(back, bench.enc, e) == predict(again, bench.enc, e));
  }

  CHECK_THROWS_AS((void)load_model(dir / "missing"), std::runtime_error);
}

}  // TEST_SUITE
