#pragma once

// Pipeline configuration and its JSON form. The JSON document is the
// config snapshot embedded in every report, so it must round-trip exactly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "commpool/classify/mlp.hpp"
#include "commpool/encoder/vgae.hpp"
#include "commpool/pooling/ep_module.hpp"
#include "commpool/synthgen/generators.hpp"
#include "json.hpp"

namespace commpool::pipeline {

using nlohmann::json;

struct ModuleConfig {
  encoder::VgaeConfig vgae;
  pooling::PoolConfig pool;
};

enum class SourceKind { synthetic, tu };

struct DatasetConfig {
  SourceKind source = SourceKind::synthetic;
  std::string tu_directory;
  std::string tu_name;
  synthgen::SimulationSpec synthetic;
  std::optional<std::uint64_t> seed;  // synthetic data seed; master seed when unset
};

struct PipelineConfig {
  DatasetConfig dataset;
  std::vector<ModuleConfig> modules;
  classify::MlpConfig classifier;
  std::size_t patience = 50;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  bool standardize = true;  // z-score graph embeddings with training-split statistics

  void validate() const {
    if (modules.empty()) throw ContractError("config: need at least one EP module");
    for (const auto& m : modules) {
      if (!m.pool.community_count && !(m.pool.ratio > 0.0 && m.pool.ratio <= 1.0))
        throw ContractError("config: community ratio must be in (0, 1]");
      if (m.vgae.hidden_dim == 0 || m.vgae.latent_dim == 0) throw ContractError("config: zero layer width");
    }
    if (repeats == 0) throw ContractError("config: repeats must be >= 1");
    if (dataset.source == SourceKind::tu && (dataset.tu_directory.empty() || dataset.tu_name.empty()))
      throw ContractError("config: tu source needs tu_directory and tu_name");
  }
};

// Two EP modules: 32→16 then 64→32, mid-grid weight decay and community
// ratio. The second module pools with cosine similarity at the lowest grid
// learning rate.
inline PipelineConfig default_config() {
  PipelineConfig c;
  ModuleConfig first;
  first.vgae.hidden_dim = 32;
  first.vgae.latent_dim = 16;
  ModuleConfig second;
  second.vgae.hidden_dim = 64;
  second.vgae.latent_dim = 32;
  second.vgae.learning_rate = 0.0001;
  second.pool.similarity = pooling::SimilarityKind::cosine;
  c.modules = {first, second};
  return c;
}

// Values searched by --grid.
struct SearchGrid {
  std::vector<double> first_module_rates{0.0001, 0.001, 0.005, 0.01, 0.05, 0.1};
  std::vector<double> later_module_rates{0.0001, 0.001, 0.005, 0.01};
  std::vector<double> ratios{0.4, 0.5, 0.6};
  std::vector<double> classifier_rates{0.001, 0.005, 0.01};
};

// --- enum <-> string ------------------------------------------------------

template <class E>
struct EnumNames;

#define COMMPOOL_ENUM_NAMES(E, ...)                                          \
  template <>                                                                \
  struct EnumNames<E> {                                                      \
    static constexpr std::pair<E, const char*> table[] = {__VA_ARGS__};      \
  };

COMMPOOL_ENUM_NAMES(encoder::LayerKind, {encoder::LayerKind::gcn, "gcn"}, {encoder::LayerKind::gat, "gat"})
COMMPOOL_ENUM_NAMES(encoder::Objective, {encoder::Objective::elbo, "elbo"},
                    {encoder::Objective::paper_literal, "paper-literal"})
COMMPOOL_ENUM_NAMES(encoder::Sharing, {encoder::Sharing::shared, "shared"}, {encoder::Sharing::per_graph, "per-graph"})
COMMPOOL_ENUM_NAMES(pooling::SimilarityKind, {pooling::SimilarityKind::l1_reciprocal, "l1-reciprocal"},
                    {pooling::SimilarityKind::cosine, "cosine"})
COMMPOOL_ENUM_NAMES(pooling::CoarsenMode, {pooling::CoarsenMode::medoid_edge, "medoid-edge"},
                    {pooling::CoarsenMode::community_edge, "community-edge"})
COMMPOOL_ENUM_NAMES(pooling::Clustering, {pooling::Clustering::pam, "pam"},
                    {pooling::Clustering::semi_random, "semi-random"})
COMMPOOL_ENUM_NAMES(synthgen::Generator, {synthgen::Generator::random_partition, "random-partition"},
                    {synthgen::Generator::relaxed_caveman, "relaxed-caveman"},
                    {synthgen::Generator::gaussian_partition, "gaussian-partition"})
COMMPOOL_ENUM_NAMES(SourceKind, {SourceKind::synthetic, "synthetic"}, {SourceKind::tu, "tu"})

#undef COMMPOOL_ENUM_NAMES

template <class E>
std::string enum_name(E v) {
  for (const auto& [e, n] : EnumNames<E>::table)
    if (e == v) return n;
  throw ContractError("enum value without a name");
}

template <class E>
E enum_from(const std::string& s) {
  for (const auto& [e, n] : EnumNames<E>::table)
    if (s == n) return e;
  std::string allowed;
  for (const auto& [e, n] : EnumNames<E>::table) allowed += std::string(allowed.empty() ? "" : ", ") + n;
  throw ContractError("unknown value '" + s + "' (expected one of: " + allowed + ")");
}

// --- JSON -------------------------------------------------------------------

inline json to_json(const synthgen::SynthConfig& c) {
  return {{"generator", enum_name(c.generator)}, {"communities", c.communities},
          {"mean_community_size", c.mean_community_size}, {"p_in", c.p_in}, {"p_out", c.p_out},
          {"size_std", c.size_std}, {"feature_dim", c.feature_dim}};
}

inline json to_json(const ModuleConfig& m) {
  return {{"layer", enum_name(m.vgae.layer)},
          {"hidden_dim", m.vgae.hidden_dim},
          {"latent_dim", m.vgae.latent_dim},
          {"learning_rate", m.vgae.learning_rate},
          {"weight_decay", m.vgae.weight_decay},
          {"max_epochs", m.vgae.max_epochs},
          {"objective", enum_name(m.vgae.objective)},
          {"kl_weight", m.vgae.kl_weight},
          {"sharing", enum_name(m.vgae.sharing)},
          {"ratio", m.pool.ratio},
          {"community_count", m.pool.community_count ? json(*m.pool.community_count) : json(nullptr)},
          {"similarity", enum_name(m.pool.similarity)},
          {"coarsen", enum_name(m.pool.coarsen)},
          {"clustering", enum_name(m.pool.clustering)},
          {"restarts", m.pool.restarts}};
}

inline json to_json(const PipelineConfig& c) {
  json classes = json::array();
  for (const auto& s : c.dataset.synthetic.classes) classes.push_back(to_json(s));
  json modules = json::array();
  for (const auto& m : c.modules) modules.push_back(to_json(m));
  return {
      {"dataset",
       {{"source", enum_name(c.dataset.source)},
        {"tu_directory", c.dataset.tu_directory},
        {"tu_name", c.dataset.tu_name},
        {"graphs_per_class", c.dataset.synthetic.graphs_per_class},
        {"classes", classes},
        {"seed", c.dataset.seed ? json(*c.dataset.seed) : json(nullptr)}}},
      {"modules", modules},
      {"classifier",
       {{"hidden1", c.classifier.hidden1},
        {"hidden2", c.classifier.hidden2},
        {"learning_rate", c.classifier.learning_rate},
        {"weight_decay", c.classifier.weight_decay},
        {"max_epochs", c.classifier.max_epochs}}},
      {"patience", c.patience},
      {"repeats", c.repeats},
      {"seed", c.seed},
      {"standardize", c.standardize},
  };
}

namespace detail {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ContractError(std::string("config key '") + key + "': " + e.what());
  }
}

template <class E>
void read_enum(const json& j, const char* key, E& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw ContractError(std::string("config key '") + key + "' must be a string");
  out = enum_from<E>(j.at(key).get<std::string>());
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    out.reset();
  else {
    T v{};
    read(j, key, v);
    out = v;
  }
}

inline void check_keys(const json& j, std::initializer_list<const char*> known, const char* where) {
  if (!j.is_object()) throw ContractError(std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) throw ContractError(std::string("unknown config key '") + k + "' in " + where);
  }
}

}  // namespace detail

inline synthgen::SynthConfig synth_from_json(const json& j, synthgen::SynthConfig c) {
  detail::check_keys(j, {"generator", "communities", "mean_community_size", "p_in", "p_out", "size_std", "feature_dim"},
                     "dataset.classes[]");
  detail::read_enum(j, "generator", c.generator);
  detail::read(j, "communities", c.communities);
  detail::read(j, "mean_community_size", c.mean_community_size);
  detail::read(j, "p_in", c.p_in);
  detail::read(j, "p_out", c.p_out);
  detail::read(j, "size_std", c.size_std);
  detail::read(j, "feature_dim", c.feature_dim);
  c.validate();
  return c;
}

inline ModuleConfig module_from_json(const json& j, ModuleConfig m) {
  detail::check_keys(j,
                     {"layer", "hidden_dim", "latent_dim", "learning_rate", "weight_decay", "max_epochs", "objective",
                      "kl_weight", "sharing", "ratio", "community_count", "similarity", "coarsen", "clustering",
                      "restarts"},
                     "modules[]");
  detail::read_enum(j, "layer", m.vgae.layer);
  detail::read(j, "hidden_dim", m.vgae.hidden_dim);
  detail::read(j, "latent_dim", m.vgae.latent_dim);
  detail::read(j, "learning_rate", m.vgae.learning_rate);
  detail::read(j, "weight_decay", m.vgae.weight_decay);
  detail::read(j, "max_epochs", m.vgae.max_epochs);
  detail::read_enum(j, "objective", m.vgae.objective);
  detail::read(j, "kl_weight", m.vgae.kl_weight);
  detail::read_enum(j, "sharing", m.vgae.sharing);
  detail::read(j, "ratio", m.pool.ratio);
  detail::read_optional(j, "community_count", m.pool.community_count);
  detail::read_enum(j, "similarity", m.pool.similarity);
  detail::read_enum(j, "coarsen", m.pool.coarsen);
  detail::read_enum(j, "clustering", m.pool.clustering);
  detail::read(j, "restarts", m.pool.restarts);
  return m;
}

// Keys absent from `j` keep their default_config() values.
inline PipelineConfig config_from_json(const json& j) {
  PipelineConfig c = default_config();
  detail::check_keys(j, {"dataset", "modules", "classifier", "patience", "repeats", "seed", "standardize"}, "config");
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    detail::check_keys(d, {"source", "tu_directory", "tu_name", "graphs_per_class", "classes", "seed"}, "dataset");
    detail::read_enum(d, "source", c.dataset.source);
    detail::read(d, "tu_directory", c.dataset.tu_directory);
    detail::read(d, "tu_name", c.dataset.tu_name);
    detail::read(d, "graphs_per_class", c.dataset.synthetic.graphs_per_class);
    detail::read_optional(d, "seed", c.dataset.seed);
    if (d.contains("classes")) {
      const json& cls = d.at("classes");
      if (!cls.is_array()) throw ContractError("dataset.classes must be an array");
      std::vector<synthgen::SynthConfig> parsed;
      for (std::size_t i = 0; i < cls.size(); ++i) {
        const auto base = i < c.dataset.synthetic.classes.size() ? c.dataset.synthetic.classes[i] : synthgen::SynthConfig{};
        parsed.push_back(synth_from_json(cls[i], base));
      }
      c.dataset.synthetic.classes = std::move(parsed);
    }
  }
  if (j.contains("modules")) {
    const json& ms = j.at("modules");
    if (!ms.is_array()) throw ContractError("modules must be an array");
    std::vector<ModuleConfig> parsed;
    for (std::size_t i = 0; i < ms.size(); ++i)
      parsed.push_back(module_from_json(ms[i], i < c.modules.size() ? c.modules[i] : c.modules.back()));
    c.modules = std::move(parsed);
  }
  if (j.contains("classifier")) {
    const json& m = j.at("classifier");
    detail::check_keys(m, {"hidden1", "hidden2", "learning_rate", "weight_decay", "max_epochs"}, "classifier");
    detail::read(m, "hidden1", c.classifier.hidden1);
    detail::read(m, "hidden2", c.classifier.hidden2);
    detail::read(m, "learning_rate", c.classifier.learning_rate);
    detail::read(m, "weight_decay", c.classifier.weight_decay);
    detail::read(m, "max_epochs", c.classifier.max_epochs);
  }
  detail::read(j, "patience", c.patience);
  detail::read(j, "repeats", c.repeats);
  detail::read(j, "seed", c.seed);
  detail::read(j, "standardize", c.standardize);
  for (auto& m : c.modules) m.vgae.patience = c.patience;
  c.classifier.patience = c.patience;
  c.validate();
  return c;
}

// Applies `path=value` where path is dotted (array elements by index). The
// value is parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ContractError("override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ContractError("empty segment in override path: " + path);
    json* next;
    if (node->is_array()) {
      std::size_t idx;
      try {
        idx = std::stoul(key);
      } catch (...) {
        throw ContractError("expected array index in override path at '" + key + "'");
      }
      while (node->size() <= idx) node->push_back(node->empty() ? json::object() : node->back());
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ContractError("override path descends into a scalar at '" + key + "'");
      next = &(*node)[key];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

}  // namespace commpool::pipeline
