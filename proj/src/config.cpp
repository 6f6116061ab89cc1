#include <fstream>
#include <map>
#include <sstream>

#include "wishart/cli.hpp"

namespace wishart {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(Errc::ConfigError, "field '" + field + "': " + msg);
}

double number_field(const json& j, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(key, "missing");
  }
  if (!j[key].is_number()) fail(key, "expected a number");
  return j[key].get<double>();
}

// A matrix is a nested array, a number c (meaning c I) or {"diag": c, "off": e}
// (meaning c I + e q with q the all-ones matrix minus the identity).
Matrix matrix_field(const json& j, const std::string& key, int d, std::optional<double> fallback_scale = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback_scale) return *fallback_scale * Matrix::Identity(d, d);
    fail(key, "missing");
  }
  const json& m = j[key];
  if (m.is_number()) return m.get<double>() * Matrix::Identity(d, d);
  if (m.is_object()) {
    for (auto it = m.begin(); it != m.end(); ++it)
      if (it.key() != "diag" && it.key() != "off") fail(key, "unknown matrix key '" + it.key() + "'");
    const double diag = number_field(m, "diag", 0.0);
    const double off = number_field(m, "off", 0.0);
    return Matrix::Constant(d, d, off) + (diag - off) * Matrix::Identity(d, d);
  }
  if (!m.is_array() || static_cast<int>(m.size()) != d) fail(key, "expected " + std::to_string(d) + " rows");
  Matrix out(d, d);
  for (int i = 0; i < d; ++i) {
    const json& row = m[i];
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      fail(key, "row " + std::to_string(i) + " must have " + std::to_string(d) + " entries");
    for (int k = 0; k < d; ++k) {
      if (!row[k].is_number()) fail(key, "entry (" + std::to_string(i) + "," + std::to_string(k) + ") is not a number");
      out(i, k) = row[k].get<double>();
    }
  }
  return out;
}

SymMatrix sym_field(const json& j, const std::string& key, int d, std::optional<double> fallback_scale = std::nullopt) {
  const Matrix m = matrix_field(j, key, d, fallback_scale);
  if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm())) fail(key, "matrix must be symmetric");
  return SymMatrix(m);
}

template <class E>
E enum_field(const json& j, const std::string& key, const std::map<std::string, E>& values, E fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(key, "expected a string");
  const auto it = values.find(j[key].get<std::string>());
  if (it == values.end()) fail(key, "unknown value '" + j[key].get<std::string>() + "'");
  return it->second;
}

SchemeSpec parse_scheme(const json& j, const std::string& field) {
  SchemeSpec s;
  if (j.is_string()) {
    try {
      s.kind = scheme_kind_from_string(j.get<std::string>());
    } catch (const Error& e) {
      fail(field, e.what());
    }
    return s;
  }
  if (!j.is_object()) fail(field, "expected a scheme name or object");
  s.kind = enum_field<SchemeKind>(j, "kind",
                                  {{"exact", SchemeKind::exact},
                                   {"order2", SchemeKind::order2},
                                   {"order2bis", SchemeKind::order2bis},
                                   {"order3", SchemeKind::order3},
                                   {"euler", SchemeKind::euler}},
                                  SchemeKind::exact);
  s.cir_mode = enum_field<CirMode>(j, "cir_mode", {{"exact", CirMode::exact}, {"fast", CirMode::fast}}, CirMode::exact);
  if (j.contains("gauss_mode"))
    s.gauss_mode = enum_field<GaussMode>(
        j, "gauss_mode",
        {{"gaussian", GaussMode::gaussian}, {"match3", GaussMode::match3}, {"match5", GaussMode::match5}},
        GaussMode::gaussian);
  s.composition = enum_field<Composition>(j, "composition",
                                          {{"sequential", Composition::sequential},
                                           {"strang_half", Composition::strang_half},
                                           {"bernoulli_random", Composition::bernoulli_random}},
                                          Composition::strang_half);
  s.epsilon_perturb = number_field(j, "epsilon_perturb", 0.0);
  if (j.contains("force")) {
    if (!j["force"].is_boolean()) fail(field + ".force", "expected a boolean");
    s.force = j["force"].get<bool>();
  }
  try {
    validate(s);
  } catch (const Error& e) {
    fail(field, e.what());
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "configuration must be a JSON object");
  ExperimentConfig cfg;
  if (j.contains("name") && j["name"].is_string()) cfg.name = j["name"].get<std::string>();
  cfg.model = enum_field<ModelKind>(
      j, "model", {{"wishart", ModelKind::wishart}, {"affine", ModelKind::affine}, {"gourieroux", ModelKind::gourieroux}},
      ModelKind::wishart);

  if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<int>() < 1) fail("d", "expected a positive integer");
  const int d = j["d"].get<int>();

  const SymMatrix x = sym_field(j, "x", d);
  const Matrix a = matrix_field(j, "a", d, 1.0);
  try {
    if (cfg.model == ModelKind::affine) {
      cfg.affine.x = x;
      cfg.affine.a = a;
      cfg.affine.alpha_bar = sym_field(j, "alpha_bar", d);
      if (!j.contains("B") || !j["B"].is_object()) fail("B", "expected an object with a 'type'");
      const json& bj = j["B"];
      const std::string type = bj.value("type", "");
      if (type == "wishart") {
        cfg.affine.B = LinearMap::wishart(matrix_field(bj, "b", d, 0.0));
      } else if (type == "dense") {
        const int p = packed_size(d);
        cfg.affine.B = LinearMap::dense(d, matrix_field(bj, "coeffs", p));
      } else {
        fail("B.type", "expected 'wishart' or 'dense'");
      }
      validate(cfg.affine);
    } else {
      cfg.wishart.x = x;
      cfg.wishart.a = a;
      cfg.wishart.b = matrix_field(j, "b", d, 0.0);
      cfg.wishart.alpha = number_field(j, "alpha");
      validate(cfg.wishart);
      cfg.affine = as_affine(cfg.wishart);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, std::string("model parameters: ") + e.what());
  }

  if (j.contains("schemes")) {
    if (!j["schemes"].is_array() || j["schemes"].empty()) fail("schemes", "expected a nonempty array");
    for (size_t i = 0; i < j["schemes"].size(); ++i)
      cfg.schemes.push_back(parse_scheme(j["schemes"][i], "schemes[" + std::to_string(i) + "]"));
  } else if (j.contains("scheme")) {
    cfg.schemes.push_back(parse_scheme(j["scheme"], "scheme"));
  } else {
    cfg.schemes.push_back(SchemeSpec{});
  }

  cfg.horizon = number_field(j, "T", 1.0);
  if (!(cfg.horizon > 0.0)) fail("T", "must be positive");
  if (j.contains("N_grid")) {
    const json& g = j["N_grid"];
    if (!g.is_array() || g.empty()) fail("N_grid", "expected a nonempty array of positive integers");
    cfg.n_grid.clear();
    for (const json& n : g) {
      if (!n.is_number_integer() || n.get<int>() < 1) fail("N_grid", "entries must be positive integers");
      if (!cfg.n_grid.empty() && n.get<int>() <= cfg.n_grid.back()) fail("N_grid", "must be strictly increasing");
      cfg.n_grid.push_back(n.get<int>());
    }
  }
  if (j.contains("n_paths")) {
    if (!j["n_paths"].is_number_integer() || j["n_paths"].get<std::int64_t>() < 2) fail("n_paths", "must be >= 2");
    cfg.n_paths = j["n_paths"].get<std::int64_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0))
      fail("seed", "expected a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("functional")) {
    const json& f = j["functional"];
    if (!f.is_object()) fail("functional", "expected an object");
    cfg.functional.kind = enum_field<FunctionalSpec::Kind>(f, "type",
                                                          {{"charfn", FunctionalSpec::Kind::charfn},
                                                           {"max_trace", FunctionalSpec::Kind::max_trace},
                                                           {"put_on_max", FunctionalSpec::Kind::put_on_max}},
                                                          FunctionalSpec::Kind::charfn);
    cfg.functional.component =
        enum_field<Component>(f, "component", {{"re", Component::re}, {"im", Component::im}}, Component::re);
    if (cfg.functional.kind == FunctionalSpec::Kind::put_on_max) cfg.functional.strike = number_field(f, "K");
    if (cfg.functional.kind == FunctionalSpec::Kind::charfn) {
      cfg.functional.v.re = sym_field(f, "v_real", d, 0.0);
      cfg.functional.v.im = sym_field(f, "v_imag", d, 0.0);
    }
  } else {
    cfg.functional.v = {SymMatrix::zero(d), SymMatrix::zero(d)};
  }

  if (cfg.model == ModelKind::gourieroux) {
    cfg.rate = number_field(j, "rate", 0.0);
    cfg.s0 = Vector::Constant(d, 1.0);
    if (j.contains("s0")) {
      const json& s = j["s0"];
      if (s.is_number()) {
        cfg.s0 = Vector::Constant(d, s.get<double>());
      } else if (s.is_array() && static_cast<int>(s.size()) == d) {
        for (int i = 0; i < d; ++i) {
          if (!s[i].is_number()) fail("s0", "entries must be numbers");
          cfg.s0(i) = s[i].get<double>();
        }
      } else {
        fail("s0", "expected a number or an array of length d");
      }
    }
    if ((cfg.s0.array() <= 0.0).any()) fail("s0", "asset prices must be positive");
    if (cfg.functional.kind != FunctionalSpec::Kind::put_on_max)
      fail("functional", "the gourieroux model supports the put_on_max functional only");
  } else if (cfg.functional.kind == FunctionalSpec::Kind::put_on_max) {
    fail("functional", "put_on_max needs the gourieroux model");
  }

  if (j.contains("truth")) {
    const json& t = j["truth"];
    cfg.truth = Complex(number_field(t, "re", 0.0), number_field(t, "im", 0.0));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path + ": " + e.what());
  }
  return parse_config(j);
}

std::optional<Complex> closed_form_truth(const ExperimentConfig& cfg) {
  if (cfg.truth) return cfg.truth;
  if (cfg.model != ModelKind::wishart || cfg.functional.kind != FunctionalSpec::Kind::charfn) return std::nullopt;
  return wishart_charfn(cfg.wishart, cfg.horizon, cfg.functional.v);
}

// ---------------------------------------------------------------------------
// Presets. Matrices use the {"diag", "off"} shorthand: c I + e q where q has
// ones off the diagonal.

namespace {

const std::map<std::string, std::string>& preset_table() {
  static const std::map<std::string, std::string> table = {
      // Terminal characteristic function, a = I, b = 0, x = 10 I, v = 0.09 I, T = 1.
      {"table1-row1", R"({"d": 3, "alpha": 3.5, "x": 10, "T": 1, "N_grid": [10, 30], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": 0.09},
        "schemes": ["order2bis", "order2", "order3", "exact", "euler"]})"},
      {"table1-row2", R"({"d": 3, "alpha": 2.2, "x": 10, "T": 1, "N_grid": [10, 30], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": 0.09},
        "schemes": ["order2bis", "order2", "order3", "exact", "euler"]})"},
      {"table1-row3", R"({"d": 10, "alpha": 10.5, "x": 10, "T": 1, "N_grid": [10, 30], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": 0.09},
        "schemes": ["order2bis", "order2", "order3", "exact", "euler"]})"},
      {"table1-row4", R"({"d": 10, "alpha": 9.2, "x": 10, "T": 1, "N_grid": [10, 30], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": 0.09},
        "schemes": ["order2bis", "order2", "order3", "exact", "euler"]})"},
      // Weak convergence in d = 3 and d = 10 over T = 10.
      {"fig3-left", R"({"d": 3, "alpha": 4.5, "x": 0.4, "T": 10, "N_grid": [2, 4, 8, 16, 32], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": 0.05, "component": "re"},
        "schemes": ["exact", "order2", "order3", "euler"]})"},
      // The published value for this case is 0.239836; the closed form gives 0.240196.
      {"fig3-right", R"({"d": 3, "alpha": 2.22, "x": {"diag": 0.4, "off": 0.2}, "b": -0.5, "T": 10,
        "N_grid": [2, 4, 8, 16, 32], "n_paths": 1000000,
        "functional": {"type": "charfn", "v_imag": {"diag": 0.2, "off": 0.04}, "component": "re"},
        "schemes": ["exact", "order2", "order3", "euler"]})"},
      {"fig10-left", R"({"d": 10, "alpha": 12.5, "x": 0.4, "T": 10, "N_grid": [2, 4, 8, 16], "n_paths": 100000,
        "functional": {"type": "charfn", "v_imag": 0.009, "component": "im"},
        "schemes": ["exact", "order2", "order3", "euler"]})"},
      // The published value for this case is 0.572241; the closed form gives 0.671422.
      {"fig10-right", R"({"d": 10, "alpha": 9.2, "x": 0.4, "b": -0.5, "T": 10, "N_grid": [2, 4, 8, 16],
        "n_paths": 100000, "functional": {"type": "charfn", "v_imag": 0.009, "component": "re"},
        "schemes": ["exact", "order2", "order3", "euler"]})"},
      // Expected running maximum of the trace on the grid.
      {"fig-sup", R"({"d": 3, "alpha": 2.2, "x": {"diag": 0.4, "off": 0.2}, "T": 1, "N_grid": [2, 4, 8, 16, 32],
        "n_paths": 1000000, "functional": {"type": "max_trace"},
        "schemes": ["order2", "order3", "euler"]})"},
      // Put on the maximum of two assets.
      {"gourieroux", R"({"model": "gourieroux", "d": 2, "alpha": 4.5, "x": {"diag": 0.04, "off": 0.02},
        "a": 0.2, "b": 0.5, "T": 1, "rate": 0.02, "s0": 100, "N_grid": [1, 2, 5, 10, 20, 40, 80],
        "n_paths": 1000000, "functional": {"type": "put_on_max", "K": 120}, "schemes": ["order2", "euler"]})"},
      {"gourieroux-low", R"({"model": "gourieroux", "d": 2, "alpha": 1.05, "x": {"diag": 0.04, "off": 0.02},
        "a": 0.2, "b": 0.5, "T": 1, "rate": 0.02, "s0": 100, "N_grid": [1, 2, 5, 10, 20, 40, 80],
        "n_paths": 1000000, "functional": {"type": "put_on_max", "K": 120}, "schemes": ["order2", "euler"]})"},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, body] : preset_table()) out.push_back(name);
  return out;
}

json preset_json(const std::string& name) {
  std::string key = name;
  if (key.rfind("row", 0) == 0) key = "table1-" + key;
  const auto it = preset_table().find(key);
  if (it == preset_table().end()) throw Error(Errc::ConfigError, "unknown preset '" + name + "'");
  json j = json::parse(it->second);
  j["name"] = key;
  return j;
}

}  // namespace wishart
