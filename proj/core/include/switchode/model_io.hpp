// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#pragma once

#include <optional>
#include <string>

#include "switchode/env_chain.hpp"
#include "switchode/flows.hpp"
#include "switchode/lotka.hpp"
#include "switchode/splitting.hpp"

namespace switchode {

struct ObservableSpec {
  Eigen::VectorXd consts;
  std::vector<Eigen::VectorXd> grads;
};

// Parsed model file. Which members are present depends on "kind":
//   linear / logistic / projective_linear  -> fields (+ env, observable)
//   lv                                     -> lv + fields
//   split                                  -> split
struct ModelFile {
  int schema_version = 1;
  std::string kind;
  std::optional<VectorFieldSet> fields;
  std::optional<EnvKind> env;
  std::optional<LVCoefficients> lv;
  std::optional<SplitScheme> split;
  std::optional<ObservableSpec> observable;
};

// Schema-validated parse; unknown keys are rejected.
ModelFile parse_model(const std::string& json_text);
ModelFile load_model(const std::string& path);

// Canonical serialization (round-trips through parse_model).
std::string serialize_model(const ModelFile& model);

ObservableF make_observable(const ObservableSpec& spec);

}  // namespace switchode
