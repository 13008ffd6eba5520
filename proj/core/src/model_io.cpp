// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 the switchode authors
#include "switchode/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "switchode/errors.hpp"

namespace switchode {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
  if (!obj.is_object())
    throw ValidationError("model: " + where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key()))
      throw ValidationError("model: unknown key \"" + item.key() + "\" in " + where);
  }
  for (const auto& key : required)
    if (!obj.count(key))
      throw ValidationError("model: missing key \"" + key + "\" in " + where);
}

Eigen::VectorXd to_vector(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw ValidationError("model: " + where + " must be a non-empty array");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number())
      throw ValidationError("model: " + where + " must contain numbers");
    v[i] = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty())
    throw ValidationError("model: " + where + " must be a non-empty 2-D array");
  const std::size_t rows = arr.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = to_vector(arr[i], where + " row");
    if (i == 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw ValidationError("model: ragged matrix in " + where);
    }
    m.row(i) = row;
  }
  return m;
}

json from_vector(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json from_matrix(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    a.push_back(from_vector(m.row(i).transpose()));
  return a;
}

EnvKind parse_env(const json& obj) {
  require_keys(obj, {"kind", "rates", "pi"}, {"kind"}, "env");
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "rate_matrix") {
    if (!obj.count("rates"))
      throw ValidationError("model: env.rates required for rate_matrix");
    return EnvGenerator(to_matrix(obj.at("rates"), "env.rates"));
  }
  if (kind == "resample") {
    if (!obj.count("pi"))
      throw ValidationError("model: env.pi required for resample");
    return make_resample(to_vector(obj.at("pi"), "env.pi"));
  }
  throw ValidationError("model: env.kind must be rate_matrix or resample");
}

json serialize_env(const EnvKind& env) {
  json obj;
  if (const auto* gen = std::get_if<EnvGenerator>(&env)) {
    obj["kind"] = "rate_matrix";
    obj["rates"] = from_matrix(gen->rates());
  } else {
    obj["kind"] = "resample";
    obj["pi"] = from_vector(std::get<ResampleEnv>(env).dist.pi);
  }
  return obj;
}

Region parse_region(const json& obj, int dim_hint) {
  require_keys(obj, {"kind", "lo", "hi"}, {"kind"}, "region");
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "box")
    return Region::box(to_vector(obj.at("lo"), "region.lo"),
                       to_vector(obj.at("hi"), "region.hi"));
  if (kind == "interval")
    return Region::interval(obj.at("lo").get<double>(), obj.at("hi").get<double>());
  if (kind == "simplex") {
    if (obj.count("lo") || obj.count("hi"))
      throw ValidationError("model: simplex region takes no bounds");
    if (dim_hint < 1)
      throw ValidationError("model: simplex region needs a known dimension");
    return Region::simplex(dim_hint);
  }
  throw ValidationError("model: region.kind must be box, interval or simplex");
}

json serialize_region(const Region& r) {
  json obj;
  if (r.kind == Region::Kind::Simplex) {
    obj["kind"] = "simplex";
  } else if (r.dim == 1) {
    obj["kind"] = "interval";
    obj["lo"] = r.lo(0);
    obj["hi"] = r.hi(0);
  } else {
    obj["kind"] = "box";
    obj["lo"] = from_vector(r.lo);
    obj["hi"] = from_vector(r.hi);
  }
  return obj;
}

std::vector<Eigen::MatrixXd> parse_matrices(const json& arr) {
  if (!arr.is_array() || arr.empty())
    throw ValidationError("model: matrices must be a non-empty array");
  std::vector<Eigen::MatrixXd> ms;
  for (std::size_t s = 0; s < arr.size(); ++s)
    ms.push_back(to_matrix(arr[s], "matrices[" + std::to_string(s) + "]"));
  return ms;
}

ObservableSpec parse_observable(const json& obj) {
  require_keys(obj, {"kind", "consts", "grads"}, {"kind", "consts", "grads"},
               "observable");
  if (obj.at("kind").get<std::string>() != "per_state_affine")
    throw ValidationError("model: observable.kind must be per_state_affine");
  ObservableSpec spec;
  spec.consts = to_vector(obj.at("consts"), "observable.consts");
  const json& grads = obj.at("grads");
  if (!grads.is_array() ||
      grads.size() != static_cast<std::size_t>(spec.consts.size()))
    throw ValidationError("model: observable.grads must match consts length");
  for (std::size_t s = 0; s < grads.size(); ++s)
    spec.grads.push_back(to_vector(grads[s], "observable.grads"));
  return spec;
}

Subflow parse_subflow(const json& obj, int idx) {
  const std::string where = "subflows[" + std::to_string(idx) + "]";
  require_keys(obj, {"kind", "matrix", "offset", "a10", "a11"}, {"kind"}, where);
  const std::string kind = obj.at("kind").get<std::string>();
  if (kind == "linear") {
    LinearSub sub;
    sub.a = to_matrix(obj.at("matrix"), where + ".matrix");
    if (obj.count("offset")) sub.b = to_vector(obj.at("offset"), where + ".offset");
    return sub;
  }
  if (kind == "logistic") {
    return LogisticSub{obj.at("a10").get<double>(), obj.at("a11").get<double>()};
  }
  throw ValidationError("model: subflow kind must be linear or logistic");
}

}  // namespace

ObservableF make_observable(const ObservableSpec& spec) {
  return per_state_affine(spec.consts, spec.grads);
}

ModelFile parse_model(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model: JSON parse error: ") + e.what());
  }
  require_keys(root,
               {"schema_version", "kind", "dim", "matrices", "offsets", "coeffs",
                "subflows", "region", "env", "observable", "epsilon"},
               {"schema_version", "kind"}, "model");
  ModelFile mf;
  mf.schema_version = root.at("schema_version").get<int>();
  if (mf.schema_version != 1)
    throw ValidationError("model: unsupported schema_version");
  mf.kind = root.at("kind").get<std::string>();

  if (root.count("env")) mf.env = parse_env(root.at("env"));
  if (root.count("observable"))
    mf.observable = parse_observable(root.at("observable"));

  if (mf.kind == "linear") {
    if (!root.count("matrices") || !root.count("region"))
      throw ValidationError("model: linear kind requires matrices and region");
    auto ms = parse_matrices(root.at("matrices"));
    std::vector<Eigen::VectorXd> offs;
    if (root.count("offsets")) {
      const json& o = root.at("offsets");
      if (!o.is_array() || o.size() != ms.size())
        throw ValidationError("model: offsets must match matrices count");
      for (std::size_t s = 0; s < o.size(); ++s)
        offs.push_back(to_vector(o[s], "offsets"));
    }
    Region region = parse_region(root.at("region"), static_cast<int>(ms.front().rows()));
    mf.fields = make_linear(std::move(ms), std::move(offs), std::move(region));
  } else if (mf.kind == "projective_linear") {
    if (!root.count("matrices"))
      throw ValidationError("model: projective_linear kind requires matrices");
    auto ms = parse_matrices(root.at("matrices"));
    if (root.count("region") &&
        parse_region(root.at("region"), static_cast<int>(ms.front().rows())).kind !=
            Region::Kind::Simplex)
      throw ValidationError("model: projective_linear region must be the simplex");
    mf.fields = make_projective(std::move(ms));
  } else if (mf.kind == "logistic" || mf.kind == "lv") {
    if (!root.count("coeffs"))
      throw ValidationError("model: " + mf.kind + " kind requires coeffs");
    const json& c = root.at("coeffs");
    require_keys(c, {"a10", "a11", "a20", "a21"},
                 mf.kind == "lv"
                     ? std::set<std::string>{"a10", "a11", "a20", "a21"}
                     : std::set<std::string>{"a10", "a11"},
                 "coeffs");
    const Eigen::VectorXd a10 = to_vector(c.at("a10"), "coeffs.a10");
    const Eigen::VectorXd a11 = to_vector(c.at("a11"), "coeffs.a11");
    std::optional<Region> region;
    if (root.count("region")) region = parse_region(root.at("region"), 1);
    if (mf.kind == "lv") {
      mf.lv = make_lv(a10, a11, to_vector(c.at("a20"), "coeffs.a20"),
                      to_vector(c.at("a21"), "coeffs.a21"));
      mf.fields = lv_logistic_fields(*mf.lv, region);
    } else {
      if (c.count("a20") || c.count("a21"))
        throw ValidationError("model: logistic kind takes only a10/a11");
      mf.fields = make_logistic(a10, a11, region);
    }
  } else if (mf.kind == "split") {
    if (!root.count("subflows") || !root.count("region"))
      throw ValidationError("model: split kind requires subflows and region");
    const json& arr = root.at("subflows");
    if (!arr.is_array() || arr.empty())
      throw ValidationError("model: subflows must be a non-empty array");
    std::vector<Subflow> subs;
    for (std::size_t i = 0; i < arr.size(); ++i)
      subs.push_back(parse_subflow(arr[i], static_cast<int>(i)));
    int dim_hint = 1;
    if (const auto* lin = std::get_if<LinearSub>(&subs.front()))
      dim_hint = static_cast<int>(lin->a.rows());
    const double eps =
        root.count("epsilon") ? root.at("epsilon").get<double>() : 0.1;
    mf.split =
        make_split(std::move(subs), eps, parse_region(root.at("region"), dim_hint));
  } else {
    throw ValidationError("model: unknown kind \"" + mf.kind + "\"");
  }

  if (root.count("dim") && mf.fields &&
      root.at("dim").get<int>() != mf.fields->dim)
    throw ValidationError("model: dim does not match the parsed fields");

  if (mf.fields && mf.env &&
      mf.fields->env_states() != env_states(*mf.env))
    throw ValidationError("model: env state count does not match the fields");
  return mf;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model: cannot open \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string serialize_model(const ModelFile& mf) {
  json root;
  root["schema_version"] = mf.schema_version;
  root["kind"] = mf.kind;
  if (mf.env) root["env"] = serialize_env(*mf.env);
  if (mf.observable) {
    json obs;
    obs["kind"] = "per_state_affine";
    obs["consts"] = from_vector(mf.observable->consts);
    json grads = json::array();
    for (const auto& g : mf.observable->grads) grads.push_back(from_vector(g));
    obs["grads"] = grads;
    root["observable"] = obs;
  }
  if (mf.kind == "linear" && mf.fields) {
    const auto& lf = std::get<LinearFields>(mf.fields->fields);
    json ms = json::array();
    for (const auto& m : lf.a) ms.push_back(from_matrix(m));
    root["matrices"] = ms;
    if (!lf.b.empty()) {
      json os = json::array();
      for (const auto& b : lf.b) os.push_back(from_vector(b));
      root["offsets"] = os;
    }
    root["region"] = serialize_region(mf.fields->region);
    root["dim"] = mf.fields->dim;
  } else if (mf.kind == "projective_linear" && mf.fields) {
    const auto& pf = std::get<ProjectiveFields>(mf.fields->fields);
    json ms = json::array();
    for (const auto& m : pf.a) ms.push_back(from_matrix(m));
    root["matrices"] = ms;
    root["dim"] = mf.fields->dim;
  } else if ((mf.kind == "logistic" || mf.kind == "lv") && mf.fields) {
    const auto& lg = std::get<LogisticFields>(mf.fields->fields);
    json c;
    c["a10"] = from_vector(lg.a10);
    c["a11"] = from_vector(lg.a11);
    if (mf.lv) {
      c["a20"] = from_vector(mf.lv->a20);
      c["a21"] = from_vector(mf.lv->a21);
    }
    root["coeffs"] = c;
    root["region"] = serialize_region(mf.fields->region);
  } else if (mf.kind == "split" && mf.split) {
    json subs = json::array();
    for (const auto& sub : mf.split->subflows) {
      json s;
      if (const auto* lin = std::get_if<LinearSub>(&sub)) {
        s["kind"] = "linear";
        s["matrix"] = from_matrix(lin->a);
        if (lin->b.size()) s["offset"] = from_vector(lin->b);
      } else if (const auto* lg = std::get_if<LogisticSub>(&sub)) {
        s["kind"] = "logistic";
        s["a10"] = lg->a10;
        s["a11"] = lg->a11;
      } else {
        throw ValidationError("serialize_model: general subflows not serializable");
      }
      subs.push_back(s);
    }
    root["subflows"] = subs;
    root["epsilon"] = mf.split->epsilon;
    root["region"] = serialize_region(mf.split->region);
  }
  return root.dump(2) + "\n";
}

}  // namespace switchode
