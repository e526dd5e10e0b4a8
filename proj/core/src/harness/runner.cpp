#include "ratebench/harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "ratebench/llm/evaluate.hpp"
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

void write_report_files(const std::filesystem::path& out_dir, const json& report,
                        const metrics::MetricsReport* report_metrics,
                        const models::TrainCurve* curve) {
  write_text(out_dir / "report.json", report.dump(2) + "\n");
  if (report_metrics) {
    write_text(out_dir / "metrics.csv", metrics::MetricsReport::csv_header() + "\n" +
                                            report_metrics->csv_row() + "\n");
  }
  if (curve && !curve->points.empty()) {
    write_text(out_dir / "curve.csv",
               models::TrainCurve::csv_header() + "\n" + curve->csv_rows());
  }
}

json metrics_to_json(const metrics::MetricsReport& m) { return json::parse(m.to_json()); }

json curve_points_json(const models::TrainCurve& curve) {
  return json::parse(curve.to_json()).at("points");
}

/// AUC degrades to NaN (null in JSON) when the slice has a single class.
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

/// Streams the train examples straight into their encoded form; the string
/// form of the full train split never lives in memory at once.
std::vector<feat::EncodedExample> encode_train_examples(
    const PreparedDataset& prepared, const data::ExampleOptions& options) {
  std::vector<feat::EncodedExample> out;
  out.reserve(prepared.split.train.size());
  data::visit_examples(prepared.split, data::ExampleSource::Train, options,
                       [&](const data::RatingExample& x) {
                         out.push_back(feat::encode_example(x, prepared.vocabs,
                                                            prepared.catalog));
                       });
  return out;
}

/// The shot provider only ever looks at the last `shots` train examples per
/// scored user plus the globally most recent ones, so only that subset is
/// retained from the streaming pass.
std::vector<data::RatingExample> collect_shot_examples(
    const PreparedDataset& prepared, const data::ExampleOptions& options,
    const std::vector<data::RatingExample>& scored, std::size_t shots) {
  std::unordered_set<std::string> wanted;
  for (const data::RatingExample& x : scored) wanted.insert(x.user_id);
  std::unordered_map<std::string, std::deque<data::RatingExample>> per_user;
  std::deque<data::RatingExample> global;
  data::visit_examples(prepared.split, data::ExampleSource::Train, options,
                       [&](const data::RatingExample& x) {
                         if (wanted.count(x.user_id)) {
                           auto& q = per_user[x.user_id];
                           q.push_back(x);
                           if (q.size() > shots) q.pop_front();
                         }
                         global.push_back(x);
                         if (global.size() > shots) global.pop_front();
                       });
  std::vector<data::RatingExample> kept;
  for (auto& [user, q] : per_user) {
    for (auto& x : q) kept.push_back(std::move(x));
  }
  for (auto& x : global) kept.push_back(std::move(x));
  std::stable_sort(kept.begin(), kept.end(),
                   [](const data::RatingExample& a, const data::RatingExample& b) {
                     if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                     if (a.user_id != b.user_id) return a.user_id < b.user_id;
                     return a.item_id < b.item_id;
                   });
  // Duplicates (a shot user inside the global tail) are harmless: the
  // provider keys by user and keeps the most recent occurrences.
  return kept;
}

}  // namespace

RunResult cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream& log, const RunOptions& options) {
  if (config.dataset.prepared_dir.empty()) {
    throw std::invalid_argument("dataset.prepared_dir is not set");
  }
  const PreparedDataset prepared = PreparedDataset::load(config.dataset.prepared_dir);
  return cmd_run_on(prepared, config, out_dir, log, options);
}

RunResult cmd_run_on(const PreparedDataset& prepared, const ExperimentConfig& config,
                     const std::filesystem::path& out_dir, std::ostream& log,
                     const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  RunResult result;
  json report;
  report["config"] = config.to_json();
  report["data"] = {{"kind", prepared.kind},
                    {"content_hash", prepared.manifest.value("content_hash", 0ULL)},
                    {"n_train", prepared.split.train.size()},
                    {"n_test", prepared.split.test.size()}};

  data::ExampleOptions ex_opts;
  ex_opts.max_history = config.dataset.max_history;

  std::vector<data::RatingExample> scored;
  {
    std::vector<data::RatingExample> pool =
        data::build_examples(prepared.split, data::ExampleSource::Test, ex_opts);
    report["data"]["n_test_pool"] = pool.size();
    scored = config.dataset.test_sample > 0
                 ? data::sample_test(pool, config.dataset.test_sample,
                                     config.dataset.test_seed)
                 : std::move(pool);
  }
  report["data"]["n_test_scored"] = scored.size();
  log << "[run] model=" << config.model << " kind=" << prepared.kind
      << " train=" << prepared.split.train.size() << " scored=" << scored.size()
      << '\n';

  auto finish_ok = [&](const metrics::MetricsReport& m) {
    result.ok = true;
    result.metrics = m;
    report["status"] = "ok";
    report["metrics"] = metrics_to_json(m);
  };
  auto finish_error = [&](const std::string& message) {
    result.ok = false;
    result.error = message;
    report["status"] = "error";
    report["error"] = message;
  };

  if (config.is_heuristic()) {
    const models::HeuristicKind kind = models::heuristic_kind_from_string(config.model);
    const models::HeuristicStats stats = models::fit_heuristics(prepared.split.train);
    metrics::MetricsAccumulator acc;
    for (const data::RatingExample& x : scored) {
      acc.add(models::predict_heuristic(stats, kind, x.user_id, x.item_id), x.label);
    }
    finish_ok(finalize_lenient(acc));
    report["heuristic"] = {{"global_mean", stats.global_mean},
                           {"n_items", stats.per_item.size()},
                           {"n_users", stats.per_user.size()}};
  } else if (config.is_supervised()) {
    const feat::EncodedCatalog enc(prepared.catalog, prepared.vocabs);
    std::vector<feat::EncodedExample> train_enc =
        encode_train_examples(prepared, ex_opts);
    std::vector<feat::EncodedExample> test_enc =
        encode_all(scored, prepared.vocabs, prepared.catalog);

    models::ModelConfig mc = config.model_config;
    mc.n_users = prepared.vocabs.user.size();
    mc.n_items = prepared.vocabs.item.size();
    mc.n_title_tokens = prepared.vocabs.title.size();
    mc.n_attributes = prepared.vocabs.attribute.size();
    models::SupervisedModel model(mc, config.train.seed);
    report["model"] = {{"parameters", model.params.total_values()}};

    try {
      result.curve = models::train(model, enc, train_enc, config.train,
                                   config.train.eval_every > 0 ? &test_enc : nullptr);
      const metrics::MetricsReport m =
          models::evaluate(model, enc, test_enc,
                           std::max<std::size_t>(1, config.train.eval_threads));
      finish_ok(m);
      report["curve"] = curve_points_json(result.curve);
      if (options.save_model) {
        models::save_model(model, out_dir / "model");
        report["model"]["checkpoint"] = "model.ckpt";
      }
    } catch (const models::TrainDivergence& e) {
      result.curve = e.partial_curve();
      finish_error(e.what());
      report["curve"] = curve_points_json(result.curve);
      if (!result.curve.points.empty()) {
        const models::TrainPoint& last = result.curve.points.back();
        report["last_finite_point"] = {{"step", last.step},
                                       {"train_loss", last.train_loss}};
      }
    }
  } else {  // llm
    double global_mean = config.llm.global_mean;
    if (!(global_mean > 0.0)) {
      global_mean = models::fit_heuristics(prepared.split.train).global_mean;
    }
    const llm::PromptTemplate tmpl =
        prepared.kind == "amazon" ? llm::PromptTemplate::books()
                                  : llm::PromptTemplate::movies();
    llm::LlmRunOptions run_opts;
    run_opts.fallback = config.llm.fallback;
    run_opts.global_mean = global_mean;
    run_opts.concurrency = config.llm.concurrency;
    if (config.llm.transcript) run_opts.transcript_path = out_dir / "transcript.jsonl";

    llm::ShotProvider shots;
    std::vector<data::RatingExample> shot_pool;
    if (config.llm.shots > 0) {
      shot_pool = collect_shot_examples(prepared, ex_opts, scored, config.llm.shots);
      shots = llm::make_recent_shot_provider(shot_pool, config.llm.shots);
    }

    std::unique_ptr<llm::CompletionClient> owned;
    llm::CompletionClient* client = options.client_override;
    if (!client) {
      if (config.llm.client == "mock") {
        owned = std::make_unique<llm::MockCompletionClient>(config.llm.mock_response);
      } else {
        owned = std::make_unique<llm::HttpCompletionClient>(config.llm.http);
      }
      client = owned.get();
    }
    report["llm"] = {{"global_mean", global_mean}, {"shots", config.llm.shots}};

    try {
      finish_ok(llm::evaluate_llm(*client, scored, prepared.catalog, tmpl, run_opts,
                                  shots));
    } catch (const llm::LlmRunError& e) {
      finish_error(e.what());
      report["llm"]["n_completed"] = e.n_completed();
      report["llm"]["n_failed"] = e.n_failed();
    } catch (const metrics::UndefinedMetricError& e) {
      finish_error(std::string("metrics undefined: ") + e.what());
    }
  }

  const auto dt = std::chrono::steady_clock::now() - t0;
  report["elapsed_seconds"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(dt).count() / 1000.0;
  write_report_files(out_dir, report, result.ok ? &result.metrics : nullptr,
                     &result.curve);
  result.report = std::move(report);
  if (result.ok) {
    log << "[run] rmse=" << result.metrics.rmse << " mae=" << result.metrics.mae
        << " auc=" << result.metrics.auc << " n=" << result.metrics.n << '\n';
  } else {
    log << "[run] error: " << result.error << '\n';
  }
  return result;
}

}  // namespace ratebench::harness
