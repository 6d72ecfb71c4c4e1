#pragma once

// JSON form of a model:
//   {"kind": "BrickworkLoss", "X": 20, "beta": 0.3, "angles": [...], "seed": 1}
// Angles are in radians. Missing keys take the defaults of ModelSpec (angles
// default per kind); unknown keys are rejected.

#include "json.hpp"

#include "noisygap/models.hpp"

namespace noisygap {

nlohmann::json to_json(const ModelSpec& spec);

/// Parses and validates; throws ConfigError with the field path prefixed by `where`.
ModelSpec model_spec_from_json(const nlohmann::json& j, const std::string& where = "model");

}  // namespace noisygap
