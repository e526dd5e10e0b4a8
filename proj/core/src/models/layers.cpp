#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "ratebench/kernel/checkpoint.hpp"
#include "ratebench/models/supervised.hpp"

namespace ratebench::models {

namespace {

using json = nlohmann::json;
using kernel::Parameter;
using kernel::Rng;
using kernel::Tensor;

constexpr double kEmbeddingSd = 0.05;

Tensor normal_init(Rng& rng, std::vector<std::size_t> shape, double sd) {
  Tensor t(std::move(shape));
  rng.fill_normal(t, 0.0, sd);
  return t;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::MF: return "mf";
    case ModelKind::MLP: return "mlp";
    case ModelKind::TransformerMLP: return "transformer_mlp";
  }
  throw std::logic_error("unreachable model kind");
}

std::string to_string(HeadKind head) {
  return head == HeadKind::Regression ? "regression" : "classification";
}

std::string to_string(Aggregation agg) {
  return agg == Aggregation::Add ? "add" : "concat";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "mf") return ModelKind::MF;
  if (name == "mlp") return ModelKind::MLP;
  if (name == "transformer_mlp" || name == "tfmlp") return ModelKind::TransformerMLP;
  throw std::invalid_argument("unknown model kind: " + name);
}

HeadKind head_kind_from_string(const std::string& name) {
  if (name == "regression") return HeadKind::Regression;
  if (name == "classification") return HeadKind::Classification;
  throw std::invalid_argument("unknown head kind: " + name);
}

Aggregation aggregation_from_string(const std::string& name) {
  if (name == "add") return Aggregation::Add;
  if (name == "concat") return Aggregation::Concat;
  throw std::invalid_argument("unknown aggregation: " + name);
}

std::size_t ModelConfig::d_model() const {
  return aggregation == Aggregation::Add ? embedding_dim : 4 * embedding_dim;
}

std::string ModelConfig::to_json() const {
  json j{{"kind", models::to_string(kind)},
         {"head", models::to_string(head)},
         {"embedding_dim", embedding_dim},
         {"hidden", hidden},
         {"layers", layers},
         {"heads", heads},
         {"aggregation", models::to_string(aggregation)},
         {"dropout", dropout},
         {"l2", l2},
         {"init_mean", init_mean},
         {"n_users", n_users},
         {"n_items", n_items},
         {"n_title_tokens", n_title_tokens},
         {"n_attributes", n_attributes}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  c.head = head_kind_from_string(j.at("head").get<std::string>());
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
  c.dropout = j.at("dropout").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.init_mean = j.at("init_mean").get<double>();
  c.n_users = j.at("n_users").get<std::size_t>();
  c.n_items = j.at("n_items").get<std::size_t>();
  c.n_title_tokens = j.at("n_title_tokens").get<std::size_t>();
  c.n_attributes = j.at("n_attributes").get<std::size_t>();
  return c;
}

kernel::AttentionWeights BlockParams::attention_weights() const {
  return {&wq->value, &bq->value, &wk->value, &bk->value,
          &wv->value, &bv->value, &wo->value, &bo->value};
}

kernel::AttentionGrads BlockParams::attention_grads() const {
  return {&wq->grad, &bq->grad, &wk->grad, &bk->grad,
          &wv->grad, &bv->grad, &wo->grad, &bo->grad};
}

SupervisedModel::SupervisedModel(ModelConfig model_config, std::uint64_t init_seed)
    : config(std::move(model_config)) {
  const std::size_t d = config.embedding_dim;
  if (d == 0) throw std::invalid_argument("embedding_dim must be positive");
  if (config.dropout < 0.0 || config.dropout >= 1.0) {
    throw std::invalid_argument("dropout must lie in [0,1)");
  }
  if (config.n_users == 0 || config.n_items == 0 || config.n_title_tokens == 0 ||
      config.n_attributes == 0) {
    throw std::invalid_argument("vocabulary sizes must be positive");
  }
  if (config.kind == ModelKind::MF && config.head == HeadKind::Classification) {
    throw std::invalid_argument(
        "MF predicts a single score; the classification head is not defined for it");
  }

  Rng rng(init_seed);
  auto emb = [&](const char* name, std::size_t rows) {
    return &params.add(name, normal_init(rng, {rows, d}, kEmbeddingSd));
  };

  if (config.kind == ModelKind::MF) {
    mu = &params.add("mu", Tensor::full({1}, config.init_mean));
    user_bias = &params.add("user_bias", Tensor::zeros({config.n_users}));
    item_bias = &params.add("item_bias", Tensor::zeros({config.n_items}));
    user_emb = emb("user_emb", config.n_users);
    item_emb = emb("item_emb", config.n_items);
    return;
  }

  auto layer_norm_params = [&](const std::string& stem, std::size_t width,
                               Parameter*& g, Parameter*& b) {
    g = &params.add(stem + ".g", Tensor::full({width}, 1.0));
    b = &params.add(stem + ".b", Tensor::zeros({width}));
  };
  auto dense = [&](const std::string& stem, std::size_t d_in, std::size_t d_out,
                   double sd, double bias_init = 0.0) {
    DenseParam p;
    p.w = &params.add(stem + ".w", normal_init(rng, {d_in, d_out}, sd));
    p.b = &params.add(stem + ".b", Tensor::full({d_out}, bias_init));
    return p;
  };

  std::size_t head_in = 0;
  if (config.kind == ModelKind::MLP) {
    user_emb = emb("user_emb", config.n_users);
    item_emb = emb("item_emb", config.n_items);
    head_in = 2 * d;
  } else {
    const std::size_t dm = config.d_model();
    if (config.heads == 0 || dm % config.heads != 0) {
      throw std::invalid_argument("head count must divide the sequence width");
    }
    if (config.layers == 0) {
      throw std::invalid_argument("transformer needs at least one block");
    }
    item_emb = emb("item_emb", config.n_items);
    title_emb = emb("title_emb", config.n_title_tokens);
    attr_emb = emb("attr_emb", config.n_attributes);
    rating_emb = emb("rating_emb", 5);
    pos_emb = &params.add("pos_emb", normal_init(rng, {feat::kMaxHistory, dm}, kEmbeddingSd));
    no_history = &params.add("no_history", normal_init(rng, {dm}, kEmbeddingSd));

    const double attn_sd = std::sqrt(1.0 / static_cast<double>(dm));
    blocks.resize(config.layers);
    for (std::size_t l = 0; l < config.layers; ++l) {
      BlockParams& blk = blocks[l];
      const std::string stem = "block" + std::to_string(l);
      layer_norm_params(stem + ".ln1", dm, blk.ln1_g, blk.ln1_b);
      auto attn_dense = [&](const char* leaf, Parameter*& w, Parameter*& b) {
        w = &params.add(stem + ".attn." + leaf + "w", normal_init(rng, {dm, dm}, attn_sd));
        b = &params.add(stem + ".attn." + leaf + "b", Tensor::zeros({dm}));
      };
      attn_dense("q", blk.wq, blk.bq);
      attn_dense("k", blk.wk, blk.bk);
      attn_dense("v", blk.wv, blk.bv);
      attn_dense("o", blk.wo, blk.bo);
      layer_norm_params(stem + ".ln2", dm, blk.ln2_g, blk.ln2_b);
      blk.ffn1 = dense(stem + ".ffn1", dm, dm, std::sqrt(1.0 / static_cast<double>(dm)));
      blk.ffn2 = dense(stem + ".ffn2", dm, dm, std::sqrt(2.0 / static_cast<double>(dm)));
    }
    layer_norm_params("ln_f", dm, ln_f_g, ln_f_b);
    head_in = dm + 3 * d;
  }

  std::size_t width = head_in;
  for (std::size_t i = 0; i < config.hidden.size(); ++i) {
    const std::size_t next = config.hidden[i];
    if (next == 0) throw std::invalid_argument("hidden layer width must be positive");
    head_mlp.push_back(dense("head" + std::to_string(i), width, next,
                             std::sqrt(2.0 / static_cast<double>(width))));
    width = next;
  }
  const double out_bias = config.head == HeadKind::Regression ? config.init_mean : 0.0;
  head_mlp.push_back(dense("head_out", width, config.head_width(),
                           std::sqrt(1.0 / static_cast<double>(width)), out_bias));
}

void save_model(const SupervisedModel& model, const std::filesystem::path& prefix) {
  kernel::save_checkpoint(model.params, prefix.string() + ".ckpt");
  std::ofstream out(prefix.string() + ".json");
  if (!out) {
    throw std::runtime_error("cannot write model config: " + prefix.string() + ".json");
  }
  out << model.config.to_json() << '\n';
}

SupervisedModel load_model(const std::filesystem::path& prefix) {
  std::ifstream in(prefix.string() + ".json");
  if (!in) {
    throw std::runtime_error("cannot read model config: " + prefix.string() + ".json");
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  SupervisedModel model(ModelConfig::from_json(text));
  kernel::load_checkpoint(model.params, prefix.string() + ".ckpt");
  return model;
}

}  // namespace ratebench::models
