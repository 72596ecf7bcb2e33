// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "embrec/error.hpp"
#include "embrec/model.hpp"

namespace embrec {
namespace {

constexpr const char* kFields[] = {"n_layers", "d_model", "n_heads", "d_ff",
                                   "vocab_size", "max_seq", "ln_eps", "seed"};

}  // namespace

std::string config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["n_layers"] = c.n_layers;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["vocab_size"] = c.vocab_size;
  j["max_seq"] = c.max_seq;
  j["ln_eps"] = c.ln_eps;
  j["seed"] = c.seed;
  return j.dump();
}

ModelConfig config_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("model config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "model config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* f : kFields) known = known || key == f;
    if (!known) throw Error(ErrorKind::kConfig, "unknown model config field '" + key + "'");
  }
  ModelConfig c;
  try {
    for (const char* f : kFields) {
      if (!j.contains(f)) throw Error(ErrorKind::kConfig, std::string("model config missing field '") + f + "'");
    }
    c.n_layers = j.at("n_layers").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_seq = j.at("max_seq").get<int>();
    c.ln_eps = j.at("ln_eps").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("model config field has the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read model config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

}  // namespace embrec
