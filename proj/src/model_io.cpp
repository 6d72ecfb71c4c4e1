#include "noisygap/model_io.hpp"

#include <string>

#include "noisygap/error.hpp"

namespace noisygap {

nlohmann::json to_json(const ModelSpec& spec) {
  return {{"kind", std::string(model_kind_name(spec.kind))},
          {"X", spec.size},
          {"beta", spec.beta},
          {"angles", spec.angles},
          {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where, "must be an object");
  const auto field = [&](const char* key) { return where + "." + key; };
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "X" && key != "beta" && key != "angles" && key != "seed")
      throw ConfigError(field(key.c_str()), "unknown key");
  }

  ModelSpec spec;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError(field("kind"), "must be a string");
    try {
      spec.kind = parse_model_kind(j["kind"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(field("kind"), e.message());
    }
  }
  spec.angles = default_angles(spec.kind);
  if (j.contains("X")) {
    const auto& x = j["X"];
    if (!x.is_number_integer() || x.get<long long>() < 0) throw ConfigError(field("X"), "must be a non-negative integer");
    spec.size = x.get<std::size_t>();
  }
  if (j.contains("beta")) {
    if (!j["beta"].is_number()) throw ConfigError(field("beta"), "must be a number");
    spec.beta = j["beta"].get<double>();
  }
  if (j.contains("angles")) {
    const auto& a = j["angles"];
    if (!a.is_array()) throw ConfigError(field("angles"), "must be an array of numbers");
    spec.angles.clear();
    for (const auto& v : a) {
      if (!v.is_number()) throw ConfigError(field("angles"), "must be an array of numbers");
      spec.angles.push_back(v.get<double>());
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      throw ConfigError(field("seed"), "must be a non-negative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(where + "." + e.field(), e.message());
  }
  return spec;
}

}  // namespace noisygap
