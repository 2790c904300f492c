#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "imc/chain.hpp"
#include "imc/credal.hpp"
#include "imc/gamble.hpp"

namespace imc {

/// Local model written as an explicit list of probability vectors.
struct VertexEncoding {
  std::vector<std::vector<double>> vertices;
  friend bool operator==(const VertexEncoding&, const VertexEncoding&) = default;
};

/// Local model written as (1-eps) p + eps vacuous.
struct LinearVacuousEncoding {
  std::vector<double> p;
  double eps = 0.0;
  friend bool operator==(const LinearVacuousEncoding&, const LinearVacuousEncoding&) = default;
};

using ModelEncoding = std::variant<VertexEncoding, LinearVacuousEncoding>;

/// In-memory form of a chain specification file. Keeps the encoding the
/// author used so that serialize(parse(text)) reproduces it.
struct ChainSpecFile {
  std::vector<std::string> states;
  ModelEncoding initial;
  std::vector<ModelEncoding> rows;
  std::string metadata;

  friend bool operator==(const ChainSpecFile&, const ChainSpecFile&) = default;
};

/// Spec file rejected; `what()` names the line/column or the field path.
class SpecError : public InputError {
 public:
  using InputError::InputError;
};

namespace detail {

using nlohmann::json;

inline std::vector<double> parse_vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw SpecError(path + ": expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SpecError(path + "[" + std::to_string(i) + "]: expected a number");
    v.push_back(j[i].get<double>());
  }
  return v;
}

inline MassFunction checked_mass(const std::vector<double>& v, const std::string& path) {
  try {
    return MassFunction(v);
  } catch (const InputError& e) {
    throw SpecError(path + ": " + e.what());
  }
}

inline ModelEncoding parse_model(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_object()) throw SpecError(path + ": expected an object with 'vertices' or 'linear_vacuous'");
  const bool has_v = j.contains("vertices"), has_lv = j.contains("linear_vacuous");
  if (has_v == has_lv) throw SpecError(path + ": exactly one of 'vertices' or 'linear_vacuous' is required");
  for (const auto& [key, _] : j.items())
    if (key != "vertices" && key != "linear_vacuous") throw SpecError(path + ": unknown field '" + key + "'");

  auto check_dim = [&](const std::vector<double>& v, const std::string& p) {
    if (v.size() != n)
      throw SpecError(p + ": expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
    checked_mass(v, p);
  };

  if (has_v) {
    const std::string vp = path + ".vertices";
    const json& vs = j["vertices"];
    if (!vs.is_array() || vs.empty()) throw SpecError(vp + ": expected a nonempty array of probability vectors");
    VertexEncoding enc;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string ip = vp + "[" + std::to_string(i) + "]";
      enc.vertices.push_back(parse_vector(vs[i], ip));
      check_dim(enc.vertices.back(), ip);
    }
    return enc;
  }
  const std::string lp = path + ".linear_vacuous";
  const json& lv = j["linear_vacuous"];
  if (!lv.is_object() || !lv.contains("p") || !lv.contains("eps"))
    throw SpecError(lp + ": expected an object with 'p' and 'eps'");
  for (const auto& [key, _] : lv.items())
    if (key != "p" && key != "eps") throw SpecError(lp + ": unknown field '" + key + "'");
  LinearVacuousEncoding enc;
  enc.p = parse_vector(lv["p"], lp + ".p");
  check_dim(enc.p, lp + ".p");
  if (!lv["eps"].is_number()) throw SpecError(lp + ".eps: expected a number");
  enc.eps = lv["eps"].get<double>();
  if (!(enc.eps >= 0.0 && enc.eps <= 1.0)) throw SpecError(lp + ".eps: must lie in [0,1]");
  return enc;
}

inline nlohmann::ordered_json model_to_json(const ModelEncoding& m) {
  nlohmann::ordered_json j;
  if (const auto* v = std::get_if<VertexEncoding>(&m)) {
    j["vertices"] = v->vertices;
    return j;
  }
  const auto& lv = std::get<LinearVacuousEncoding>(m);
  j["linear_vacuous"]["p"] = lv.p;
  j["linear_vacuous"]["eps"] = lv.eps;
  return j;
}

}  // namespace detail

inline ChainSpecFile parse_chain_spec(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in its message.
    std::string msg = e.what();
    const auto at = msg.find("line ");
    throw SpecError("spec parse error at " + (at == std::string::npos ? msg : msg.substr(at)));
  }
  if (!j.is_object()) throw SpecError("(root): expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "states" && key != "initial" && key != "rows" && key != "metadata")
      throw SpecError("(root): unknown field '" + key + "'");
  for (const char* key : {"states", "initial", "rows"})
    if (!j.contains(key)) throw SpecError(std::string("(root): missing field '") + key + "'");

  ChainSpecFile spec;
  const json& st = j["states"];
  if (!st.is_array() || st.empty()) throw SpecError("states: expected a nonempty array of labels");
  for (std::size_t i = 0; i < st.size(); ++i) {
    if (!st[i].is_string()) throw SpecError("states[" + std::to_string(i) + "]: expected a string");
    const auto label = st[i].get<std::string>();
    for (const auto& prev : spec.states)
      if (prev == label) throw SpecError("states[" + std::to_string(i) + "]: duplicate label '" + label + "'");
    spec.states.push_back(label);
  }
  const std::size_t n = spec.states.size();
  spec.initial = detail::parse_model(j["initial"], "initial", n);
  const json& rows = j["rows"];
  if (!rows.is_array() || rows.size() != n)
    throw SpecError("rows: expected an array with one entry per state (" + std::to_string(n) + ")");
  for (std::size_t x = 0; x < n; ++x) spec.rows.push_back(detail::parse_model(rows[x], "rows[" + std::to_string(x) + "]", n));
  if (j.contains("metadata")) {
    if (!j["metadata"].is_string()) throw SpecError("metadata: expected a string");
    spec.metadata = j["metadata"].get<std::string>();
  }
  return spec;
}

inline ChainSpecFile load_chain_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_chain_spec(ss.str());
}

/// Canonical text: two-space indentation, shortest round-trip number form.
inline std::string serialize_chain_spec(const ChainSpecFile& spec) {
  using nlohmann::ordered_json;
  ordered_json rows = ordered_json::array();
  for (const auto& r : spec.rows) rows.push_back(detail::model_to_json(r));
  ordered_json j;
  j["states"] = spec.states;
  j["initial"] = detail::model_to_json(spec.initial);
  j["rows"] = rows;
  if (!spec.metadata.empty()) j["metadata"] = spec.metadata;
  return j.dump(2) + "\n";
}

inline CredalSet to_credal_set(const ModelEncoding& m, const std::string& label = {}) {
  if (const auto* v = std::get_if<VertexEncoding>(&m)) {
    std::vector<MassFunction> vs;
    for (const auto& p : v->vertices) vs.emplace_back(p);
    return CredalSet(std::move(vs), label);
  }
  const auto& lv = std::get<LinearVacuousEncoding>(m);
  return make_linear_vacuous(MassFunction(lv.p), lv.eps, label);
}

inline ImpreciseMarkovChain to_chain(const ChainSpecFile& spec) {
  std::vector<CredalSet> rows;
  for (std::size_t x = 0; x < spec.rows.size(); ++x) rows.push_back(to_credal_set(spec.rows[x], spec.states[x]));
  return ImpreciseMarkovChain(spec.states, to_credal_set(spec.initial, "initial"), LowerTransitionOperator(std::move(rows)));
}

}  // namespace imc
