#include "ratebench/harness/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "ratebench/models/heuristics.hpp"

namespace ratebench::harness {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <typename T>
const T& pick(const std::vector<T>& choices, kernel::Rng& rng, const char* what) {
  if (choices.empty()) {
    throw std::invalid_argument(std::string("search space: no choices for ") + what);
  }
  return choices[rng.below(choices.size())];
}

double log_uniform(kernel::Rng& rng, double lo, double hi, const char* what) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument(std::string("search space: bad range for ") + what);
  }
  return std::exp(std::log(lo) + rng.uniform01() * (std::log(hi) - std::log(lo)));
}

std::vector<feat::EncodedExample> encode_all(
    const std::vector<data::RatingExample>& examples, const feat::VocabSet& vocabs,
    const data::Catalog& catalog) {
  std::vector<feat::EncodedExample> out;
  out.reserve(examples.size());
  for (const data::RatingExample& x : examples) {
    out.push_back(feat::encode_example(x, vocabs, catalog));
  }
  return out;
}

std::string hidden_to_string(const std::vector<std::size_t>& hidden) {
  std::string out;
  for (std::size_t h : hidden) {
    if (!out.empty()) out += '|';
    out += std::to_string(h);
  }
  return out.empty() ? "-" : out;
}

metrics::MetricsReport evaluate_lenient(const models::SupervisedModel& model,
                                        const feat::EncodedCatalog& enc,
                                        const std::vector<feat::EncodedExample>& examples) {
  metrics::MetricsAccumulator acc;
  for (const feat::EncodedExample& x : examples) {
    acc.add(models::predict(model, enc, x), x.label);
  }
  try {
    return acc.finalize();
  } catch (const metrics::UndefinedMetricError&) {
    metrics::MetricsReport report;
    report.rmse = metrics::rmse(acc.pairs());
    report.mae = metrics::mae(acc.pairs());
    report.auc = kNaN;
    report.n = acc.size();
    return report;
  }
}

metrics::MetricsReport finalize_lenient(const metrics::MetricsAccumulator& acc) {
  try {
    return acc.finalize();
  } catch (const metrics::UndefinedMetricError&) {
    metrics::MetricsReport report;
    report.rmse = metrics::rmse(acc.pairs());
    report.mae = metrics::mae(acc.pairs());
    report.auc = kNaN;
    report.n = acc.size();
    return report;
  }
}

/// Runs `body(i)` for i in [0, n) on up to `workers` threads; results must be
/// written into per-index slots so scheduling never changes the outcome.
void for_indices(std::size_t n, std::size_t workers,
                 const std::function<void(std::size_t)>& body) {
  workers = std::clamp<std::size_t>(workers, 1, n == 0 ? 1 : n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

SearchSpace SearchSpace::defaults(models::ModelKind kind) {
  SearchSpace s;
  switch (kind) {
    case models::ModelKind::MF:
      s.embedding_dim = {8, 16, 32, 64};
      s.dropout_lo = s.dropout_hi = 0.0;
      break;
    case models::ModelKind::MLP:
      s.embedding_dim = {16, 32, 64};
      break;
    case models::ModelKind::TransformerMLP:
      // Narrow widths: attention cost grows with d_model and these run on CPU.
      s.embedding_dim = {8, 16, 32};
      s.hidden = {{64}, {128, 64}};
      break;
  }
  return s;
}

json SearchSpace::to_json() const {
  std::vector<std::string> aggs;
  aggs.reserve(aggregation.size());
  for (const models::Aggregation a : aggregation) aggs.push_back(models::to_string(a));
  return json{{"embedding_dim", embedding_dim},
              {"hidden", hidden},
              {"layers", layers},
              {"heads", heads},
              {"aggregation", aggs},
              {"learning_rate_lo", learning_rate_lo},
              {"learning_rate_hi", learning_rate_hi},
              {"dropout_lo", dropout_lo},
              {"dropout_hi", dropout_hi},
              {"l2_lo", l2_lo},
              {"l2_hi", l2_hi},
              {"l2_zero_prob", l2_zero_prob},
              {"batch_size", batch_size}};
}

SearchSpace SearchSpace::from_json(const json& space) {
  return from_json(space, SearchSpace{});
}

SearchSpace SearchSpace::from_json(const json& space, SearchSpace base) {
  SearchSpace s = std::move(base);
  auto read = [&](const char* key, auto& out) {
    if (space.contains(key)) space.at(key).get_to(out);
  };
  read("embedding_dim", s.embedding_dim);
  read("hidden", s.hidden);
  read("layers", s.layers);
  read("heads", s.heads);
  if (space.contains("aggregation")) {
    s.aggregation.clear();
    for (const auto& name : space.at("aggregation")) {
      s.aggregation.push_back(models::aggregation_from_string(name.get<std::string>()));
    }
  }
  read("learning_rate_lo", s.learning_rate_lo);
  read("learning_rate_hi", s.learning_rate_hi);
  read("dropout_lo", s.dropout_lo);
  read("dropout_hi", s.dropout_hi);
  read("l2_lo", s.l2_lo);
  read("l2_hi", s.l2_hi);
  read("l2_zero_prob", s.l2_zero_prob);
  read("batch_size", s.batch_size);
  return s;
}

ExperimentConfig SearchSpace::sample(const ExperimentConfig& base,
                                     kernel::Rng& rng) const {
  if (!base.is_supervised()) {
    throw std::invalid_argument("search needs a supervised model kind");
  }
  ExperimentConfig c = base;
  models::ModelConfig& m = c.model_config;
  m.embedding_dim = pick(embedding_dim, rng, "embedding_dim");
  c.train.learning_rate =
      log_uniform(rng, learning_rate_lo, learning_rate_hi, "learning_rate");
  c.train.batch_size = pick(batch_size, rng, "batch_size");
  if (rng.uniform01() < l2_zero_prob) {
    m.l2 = 0.0;
  } else {
    m.l2 = log_uniform(rng, l2_lo, l2_hi, "l2");
  }
  if (!(dropout_lo >= 0.0) || !(dropout_hi >= dropout_lo) || dropout_hi >= 1.0) {
    throw std::invalid_argument("search space: bad range for dropout");
  }
  const double drop = dropout_lo + rng.uniform01() * (dropout_hi - dropout_lo);

  switch (m.kind) {
    case models::ModelKind::MF:
      m.dropout = 0.0;  // no dropout site in the MF forward pass
      break;
    case models::ModelKind::MLP:
      m.hidden = pick(hidden, rng, "hidden");
      m.dropout = drop;
      break;
    case models::ModelKind::TransformerMLP: {
      m.hidden = pick(hidden, rng, "hidden");
      m.dropout = drop;
      m.layers = pick(layers, rng, "layers");
      m.aggregation = pick(aggregation, rng, "aggregation");
      const std::size_t d_model =
          (m.aggregation == models::Aggregation::Concat ? 4 : 1) * m.embedding_dim;
      std::vector<std::size_t> valid;
      for (const std::size_t h : heads) {
        if (h > 0 && d_model % h == 0) valid.push_back(h);
      }
      if (valid.empty()) valid.push_back(1);
      m.heads = pick(valid, rng, "heads");
      break;
    }
  }
  return c;
}

SearchOutcome cmd_search(const ExperimentConfig& base, const SearchSpace& space,
                         const SearchOptions& options,
                         const std::filesystem::path& out_dir, std::ostream& log) {
  if (options.n_trials == 0) throw std::invalid_argument("n_trials must be >= 1");
  if (options.budget_steps == 0) {
    throw std::invalid_argument("budget_steps must be >= 1");
  }
  if (!base.is_supervised()) {
    throw std::invalid_argument("search needs a supervised model kind");
  }
  std::filesystem::create_directories(out_dir);
  const PreparedDataset prepared = PreparedDataset::load(base.dataset.prepared_dir);

  // Validation protocol: the last 5% of the train split by time. The final
  // test split stays untouched.
  data::ChronSplit inner;
  {
    std::vector<data::Interaction> train_copy = prepared.split.train;
    inner = data::chronological_split(std::move(train_copy), 0.95);
  }
  data::ExampleOptions ex_opts;
  ex_opts.max_history = base.dataset.max_history;

  std::vector<feat::EncodedExample> fit_examples;
  fit_examples.reserve(inner.train.size());
  data::visit_examples(inner, data::ExampleSource::Train, ex_opts,
                       [&](const data::RatingExample& x) {
                         fit_examples.push_back(
                             feat::encode_example(x, prepared.vocabs, prepared.catalog));
                       });
  std::vector<feat::EncodedExample> val_examples;
  {
    std::vector<data::RatingExample> pool =
        data::build_examples(inner, data::ExampleSource::Test, ex_opts);
    if (base.dataset.test_sample > 0) {
      pool = data::sample_test(pool, base.dataset.test_sample,
                               base.dataset.test_seed ^ 0x76616cULL);
    }
    val_examples = encode_all(pool, prepared.vocabs, prepared.catalog);
  }
  const feat::EncodedCatalog enc(prepared.catalog, prepared.vocabs);
  log << "[search] trials=" << options.n_trials << " budget=" << options.budget_steps
      << " fit=" << fit_examples.size() << " val=" << val_examples.size() << '\n';

  // Sample every trial up front from one seeded stream; executing them in
  // any order (or on any worker count) then gives identical results.
  kernel::Rng rng(options.seed);
  std::vector<ExperimentConfig> configs;
  configs.reserve(options.n_trials);
  for (std::size_t t = 0; t < options.n_trials; ++t) {
    ExperimentConfig trial = space.sample(base, rng);
    trial.train.steps = options.budget_steps;
    trial.train.eval_every = 0;
    trial.train.seed = base.train.seed ^ (0x9E3779B97F4A7C15ULL * (t + 1));
    configs.push_back(std::move(trial));
  }

  SearchOutcome outcome;
  outcome.trials.resize(options.n_trials);
  std::mutex log_mutex;
  for_indices(options.n_trials, options.workers, [&](std::size_t t) {
    TrialRecord rec;
    rec.index = t;
    rec.config = configs[t].to_json();
    rec.val_rmse = kNaN;
    rec.val_auc = kNaN;
    rec.train_loss = kNaN;
    try {
      models::ModelConfig mc = configs[t].model_config;
      mc.n_users = prepared.vocabs.user.size();
      mc.n_items = prepared.vocabs.item.size();
      mc.n_title_tokens = prepared.vocabs.title.size();
      mc.n_attributes = prepared.vocabs.attribute.size();
      models::SupervisedModel model(mc, configs[t].train.seed);
      const models::TrainCurve curve =
          models::train(model, enc, fit_examples, configs[t].train, nullptr);
      if (!curve.points.empty()) rec.train_loss = curve.points.back().train_loss;
      const metrics::MetricsReport m = evaluate_lenient(model, enc, val_examples);
      rec.val_rmse = m.rmse;
      rec.val_auc = m.auc;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    {
      const std::lock_guard<std::mutex> hold(log_mutex);
      log << "[search] trial " << (t + 1) << "/" << options.n_trials;
      if (rec.ok) {
        log << " val_rmse=" << rec.val_rmse << " val_auc=" << rec.val_auc;
      } else {
        log << " failed: " << rec.error;
      }
      log << '\n';
    }
    outcome.trials[t] = std::move(rec);
  });

  std::size_t best = options.n_trials;
  for (std::size_t t = 0; t < options.n_trials; ++t) {
    const TrialRecord& rec = outcome.trials[t];
    if (!rec.ok || !std::isfinite(rec.val_rmse)) continue;
    if (best == options.n_trials || rec.val_rmse < outcome.trials[best].val_rmse) {
      best = t;
    }
  }
  if (best == options.n_trials) {
    throw std::runtime_error("every search trial failed; nothing to select");
  }
  outcome.best_index = best;
  outcome.best_config = base;
  outcome.best_config.model_config = configs[best].model_config;
  outcome.best_config.train.learning_rate = configs[best].train.learning_rate;
  outcome.best_config.train.batch_size = configs[best].train.batch_size;

  std::ostringstream csv;
  csv << "trial,status,val_rmse,val_auc,train_loss,embedding_dim,hidden,layers,heads,"
         "aggregation,dropout,l2,learning_rate,batch_size\n";
  csv.precision(10);
  for (const TrialRecord& rec : outcome.trials) {
    const json& mc = rec.config.at("model");
    const json& tc = rec.config.at("train");
    std::vector<std::size_t> hid = mc.value("hidden", std::vector<std::size_t>{});
    csv << rec.index << ',' << (rec.ok ? "ok" : "failed") << ',' << rec.val_rmse << ','
        << rec.val_auc << ',' << rec.train_loss << ','
        << mc.value("embedding_dim", std::size_t{0}) << ',' << hidden_to_string(hid)
        << ',' << mc.value("layers", std::size_t{0}) << ','
        << mc.value("heads", std::size_t{0}) << ','
        << mc.value("aggregation", std::string("-")) << ','
        << mc.value("dropout", 0.0) << ',' << mc.value("l2", 0.0) << ','
        << tc.value("learning_rate", 0.0) << ',' << tc.value("batch_size", std::size_t{0})
        << '\n';
  }
  write_text(out_dir / "trials.csv", csv.str());

  json trials_json = json::array();
  for (const TrialRecord& rec : outcome.trials) {
    trials_json.push_back({{"index", rec.index},
                           {"ok", rec.ok},
                           {"error", rec.error},
                           {"val_rmse", rec.val_rmse},
                           {"val_auc", rec.val_auc},
                           {"train_loss", rec.train_loss},
                           {"config", rec.config}});
  }
  outcome.report = json{{"status", "ok"},
                        {"config", base.to_json()},
                        {"space", space.to_json()},
                        {"options",
                         {{"n_trials", options.n_trials},
                          {"seed", options.seed},
                          {"budget_steps", options.budget_steps}}},
                        {"validation",
                         {{"n_fit", fit_examples.size()}, {"n_val", val_examples.size()}}},
                        {"trials", std::move(trials_json)},
                        {"best_index", outcome.best_index},
                        {"best_config", outcome.best_config.to_json()}};
  write_text(out_dir / "search_report.json", outcome.report.dump(2) + "\n");
  write_text(out_dir / "best_config.json",
             outcome.best_config.to_json().dump(2) + "\n");
  log << "[search] best trial " << best << " val_rmse="
      << outcome.trials[best].val_rmse << '\n';
  return outcome;
}

std::vector<CurvePoint> cmd_curve(const ExperimentConfig& config,
                                  const std::vector<double>& fractions,
                                  std::size_t workers,
                                  const std::filesystem::path& out_dir,
                                  std::ostream& log) {
  if (fractions.empty()) throw std::invalid_argument("no fractions given");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0) || fractions[i] > 1.0) {
      throw std::invalid_argument("fractions must lie in (0,1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      throw std::invalid_argument("fractions must be ascending");
    }
  }
  if (config.is_llm()) {
    throw std::invalid_argument("data-efficiency curves need a trainable model");
  }
  std::filesystem::create_directories(out_dir);
  const PreparedDataset prepared = PreparedDataset::load(config.dataset.prepared_dir);

  data::ExampleOptions ex_opts;
  ex_opts.max_history = config.dataset.max_history;
  std::vector<data::RatingExample> scored;
  {
    std::vector<data::RatingExample> pool =
        data::build_examples(prepared.split, data::ExampleSource::Test, ex_opts);
    scored = config.dataset.test_sample > 0
                 ? data::sample_test(pool, config.dataset.test_sample,
                                     config.dataset.test_seed)
                 : std::move(pool);
  }

  std::vector<CurvePoint> points(fractions.size());
  if (config.is_heuristic()) {
    const models::HeuristicKind kind = models::heuristic_kind_from_string(config.model);
    for (std::size_t i = 0; i < fractions.size(); ++i) {
      CurvePoint& p = points[i];
      p.fraction = fractions[i];
      p.n_train = std::max<std::size_t>(
          1, static_cast<std::size_t>(fractions[i] *
                                      static_cast<double>(prepared.split.train.size())));
      const std::vector<data::Interaction> prefix(
          prepared.split.train.begin(),
          prepared.split.train.begin() + static_cast<std::ptrdiff_t>(p.n_train));
      const models::HeuristicStats stats = models::fit_heuristics(prefix);
      metrics::MetricsAccumulator acc;
      for (const data::RatingExample& x : scored) {
        acc.add(models::predict_heuristic(stats, kind, x.user_id, x.item_id), x.label);
      }
      p.metrics = finalize_lenient(acc);
      p.ok = true;
      log << "[curve] fraction=" << p.fraction << " n=" << p.n_train
          << " rmse=" << p.metrics.rmse << " auc=" << p.metrics.auc << '\n';
    }
  } else {
    const feat::EncodedCatalog enc(prepared.catalog, prepared.vocabs);
    std::vector<feat::EncodedExample> train_enc;
    train_enc.reserve(prepared.split.train.size());
    data::visit_examples(prepared.split, data::ExampleSource::Train, ex_opts,
                         [&](const data::RatingExample& x) {
                           train_enc.push_back(feat::encode_example(
                               x, prepared.vocabs, prepared.catalog));
                         });
    const std::vector<feat::EncodedExample> test_enc =
        encode_all(scored, prepared.vocabs, prepared.catalog);
    models::ModelConfig mc = config.model_config;
    mc.n_users = prepared.vocabs.user.size();
    mc.n_items = prepared.vocabs.item.size();
    mc.n_title_tokens = prepared.vocabs.title.size();
    mc.n_attributes = prepared.vocabs.attribute.size();

    std::mutex log_mutex;
    for_indices(fractions.size(), workers, [&](std::size_t i) {
      CurvePoint& p = points[i];
      p.fraction = fractions[i];
      p.n_train = std::max<std::size_t>(
          1, static_cast<std::size_t>(fractions[i] *
                                      static_cast<double>(train_enc.size())));
      // The chronologically earliest slice, not a random subsample: growing
      // the fraction extends the same early period later in time.
      const std::vector<feat::EncodedExample> slice(
          train_enc.begin(), train_enc.begin() + static_cast<std::ptrdiff_t>(p.n_train));
      models::TrainConfig tc = config.train;
      tc.data_fraction = 1.0;
      try {
        models::SupervisedModel model(mc, tc.seed);
        const models::TrainCurve curve = models::train(
            model, enc, slice, tc, tc.eval_every > 0 ? &test_enc : nullptr);
        p.metrics = evaluate_lenient(model, enc, test_enc);
        p.ok = true;
        if (tc.eval_every > 0) {
          char name[64];
          std::snprintf(name, sizeof(name), "steps_%g.csv", p.fraction);
          write_text(out_dir / name,
                     models::TrainCurve::csv_header() + "\n" + curve.csv_rows());
        }
      } catch (const std::exception& e) {
        p.ok = false;
        p.error = e.what();
      }
      const std::lock_guard<std::mutex> hold(log_mutex);
      if (p.ok) {
        log << "[curve] fraction=" << p.fraction << " n=" << p.n_train
            << " rmse=" << p.metrics.rmse << " auc=" << p.metrics.auc << '\n';
      } else {
        log << "[curve] fraction=" << p.fraction << " failed: " << p.error << '\n';
      }
    });
  }

  std::ostringstream csv;
  csv << "fraction,n_train,rmse,mae,auc\n";
  csv.precision(10);
  json rows = json::array();
  bool all_ok = true;
  for (const CurvePoint& p : points) {
    all_ok = all_ok && p.ok;
    csv << p.fraction << ',' << p.n_train << ',' << p.metrics.rmse << ','
        << p.metrics.mae << ',' << p.metrics.auc << '\n';
    rows.push_back({{"fraction", p.fraction},
                    {"n_train", p.n_train},
                    {"ok", p.ok},
                    {"error", p.error},
                    {"metrics", json::parse(p.metrics.to_json())}});
  }
  write_text(out_dir / "curve.csv", csv.str());
  const json report{{"status", all_ok ? "ok" : "error"},
                    {"config", config.to_json()},
                    {"fractions", fractions},
                    {"n_test_scored", scored.size()},
                    {"points", std::move(rows)}};
  write_text(out_dir / "curve_report.json", report.dump(2) + "\n");
  return points;
}

}  // namespace ratebench::harness
