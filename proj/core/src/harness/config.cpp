#include "ratebench/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <stdexcept>

namespace ratebench::harness {

namespace {

using nlohmann::json;

json yaml_scalar_to_json(const YAML::Node& node) {
  const std::string& raw = node.Scalar();
  if (node.Tag() == "!") return raw;  // explicitly quoted: keep the string
  if (raw.empty() || raw == "~" || raw == "null" || raw == "Null" || raw == "NULL") {
    return nullptr;
  }
  if (raw == "true" || raw == "True" || raw == "TRUE") return true;
  if (raw == "false" || raw == "False" || raw == "FALSE") return false;
  try {
    json parsed = json::parse(raw);
    if (parsed.is_number()) return parsed;
  } catch (const json::parse_error&) {
  }
  return raw;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return yaml_scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& child : node) arr.push_back(yaml_to_json(child));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) {
        obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      }
      return obj;
    }
  }
  return nullptr;
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

void read_enum(const json& j, const char* key, models::HeadKind& out) {
  if (j.contains(key)) out = models::head_kind_from_string(j.at(key).get<std::string>());
}

void read_enum(const json& j, const char* key, models::Aggregation& out) {
  if (j.contains(key)) out = models::aggregation_from_string(j.at(key).get<std::string>());
}

json train_to_json(const models::TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
              {"steps", t.steps},                 {"seed", t.seed},
              {"eval_every", t.eval_every},       {"data_fraction", t.data_fraction},
              {"eval_threads", t.eval_threads}};
}

void train_from_json(const json& j, models::TrainConfig& t) {
  read_if(j, "learning_rate", t.learning_rate);
  read_if(j, "batch_size", t.batch_size);
  read_if(j, "steps", t.steps);
  read_if(j, "seed", t.seed);
  read_if(j, "eval_every", t.eval_every);
  read_if(j, "data_fraction", t.data_fraction);
  read_if(j, "eval_threads", t.eval_threads);
}

json http_to_json(const llm::ClientConfig& c) {
  return json{{"base_url", c.base_url},
              {"path", c.path},
              {"model", c.model},
              {"auth_env", c.auth_env},
              {"temperature", c.temperature},
              {"max_tokens", c.max_tokens},
              {"timeout_seconds", c.timeout_seconds},
              {"max_retries", c.max_retries},
              {"backoff_initial_ms", c.backoff_initial_ms},
              {"backoff_factor", c.backoff_factor}};
}

void http_from_json(const json& j, llm::ClientConfig& c) {
  read_if(j, "base_url", c.base_url);
  read_if(j, "path", c.path);
  read_if(j, "model", c.model);
  read_if(j, "auth_env", c.auth_env);
  read_if(j, "temperature", c.temperature);
  read_if(j, "max_tokens", c.max_tokens);
  read_if(j, "timeout_seconds", c.timeout_seconds);
  read_if(j, "max_retries", c.max_retries);
  read_if(j, "backoff_initial_ms", c.backoff_initial_ms);
  read_if(j, "backoff_factor", c.backoff_factor);
}

}  // namespace

nlohmann::json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path.string());
  if (path.extension() == ".json") {
    json j;
    in >> j;
    return j;
  }
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw std::runtime_error("config file " + path.string() +
                             " is not valid YAML: " + e.what());
  }
  return yaml_to_json(root);
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like dotted.key=value: " +
                                assignment);
  }
  std::string pointer = "/" + assignment.substr(0, eq);
  for (auto& c : pointer) {
    if (c == '.') c = '/';
  }
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  config[json::json_pointer(pointer)] = std::move(value);
}

nlohmann::json ExperimentConfig::to_json() const {
  json j;
  j["dataset"] = {{"prepared_dir", dataset.prepared_dir},
                  {"max_history", dataset.max_history},
                  {"test_sample", dataset.test_sample},
                  {"test_seed", dataset.test_seed}};
  json m = json::object();
  m["kind"] = model;
  if (is_supervised()) {
    json full = json::parse(model_config.to_json());
    full["kind"] = model;  // the experiment-level name wins
    m = std::move(full);
    j["train"] = train_to_json(train);
  }
  if (is_llm()) {
    json l{{"client", llm.client},
           {"shots", llm.shots},
           {"fallback", llm::to_string(llm.fallback)},
           {"global_mean", llm.global_mean},
           {"concurrency", llm.concurrency},
           {"transcript", llm.transcript}};
    if (llm.client == "mock") l["mock_response"] = llm.mock_response;
    if (llm.client == "http") l["http"] = http_to_json(llm.http);
    j["llm"] = std::move(l);
  }
  j["model"] = std::move(m);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& config) {
  if (!config.is_object()) {
    throw std::invalid_argument("experiment config must be a JSON/YAML object");
  }
  ExperimentConfig c;
  if (config.contains("dataset")) {
    const json& d = config.at("dataset");
    read_if(d, "prepared_dir", c.dataset.prepared_dir);
    read_if(d, "max_history", c.dataset.max_history);
    read_if(d, "test_sample", c.dataset.test_sample);
    read_if(d, "test_seed", c.dataset.test_seed);
  }
  if (config.contains("model")) {
    const json& m = config.at("model");
    if (m.is_string()) {
      c.model = m.get<std::string>();
    } else if (m.is_object()) {
      c.model = m.value("kind", c.model);
      read_enum(m, "head", c.model_config.head);
      read_if(m, "embedding_dim", c.model_config.embedding_dim);
      read_if(m, "hidden", c.model_config.hidden);
      read_if(m, "layers", c.model_config.layers);
      read_if(m, "heads", c.model_config.heads);
      read_enum(m, "aggregation", c.model_config.aggregation);
      read_if(m, "dropout", c.model_config.dropout);
      read_if(m, "l2", c.model_config.l2);
      read_if(m, "init_mean", c.model_config.init_mean);
    } else {
      throw std::invalid_argument("model must be a name or an object");
    }
  }
  if (config.contains("train")) train_from_json(config.at("train"), c.train);
  if (config.contains("llm")) {
    const json& l = config.at("llm");
    read_if(l, "client", c.llm.client);
    read_if(l, "mock_response", c.llm.mock_response);
    if (l.contains("http")) http_from_json(l.at("http"), c.llm.http);
    read_if(l, "shots", c.llm.shots);
    if (l.contains("fallback")) {
      c.llm.fallback = llm::fallback_from_string(l.at("fallback").get<std::string>());
    }
    read_if(l, "global_mean", c.llm.global_mean);
    read_if(l, "concurrency", c.llm.concurrency);
    read_if(l, "transcript", c.llm.transcript);
  }

  if (!c.is_heuristic() && !c.is_supervised() && !c.is_llm()) {
    throw std::invalid_argument("unknown model kind: " + c.model);
  }
  if (c.is_supervised()) {
    c.model_config.kind = models::model_kind_from_string(c.model);
    if (c.dataset.max_history > feat::kMaxHistory) {
      throw std::invalid_argument("max_history above the encoder limit of " +
                                  std::to_string(feat::kMaxHistory));
    }
    if (c.train.steps == 0 || c.train.batch_size == 0) {
      throw std::invalid_argument("train.steps and train.batch_size must be positive");
    }
  }
  if (c.is_llm()) {
    if (c.llm.client != "mock" && c.llm.client != "http") {
      throw std::invalid_argument("llm.client must be \"mock\" or \"http\"");
    }
    if (c.llm.concurrency == 0) c.llm.concurrency = 1;
  }
  return c;
}

}  // namespace ratebench::harness
