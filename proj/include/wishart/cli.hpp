#pragma once

// Experiment configuration and the `wishart` command-line front end.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wishart/oracle.hpp"
#include "wishart/schemes.hpp"
#include "wishart/wishart_exact.hpp"

namespace wishart {

enum class ModelKind { wishart, affine, gourieroux };

struct FunctionalSpec {
  enum class Kind { charfn, max_trace, put_on_max };
  Kind kind = Kind::charfn;
  /// exp(Tr(v X)) with v = v_real + i v_imag.
  ComplexSymMatrix v;
  Component component = Component::re;
  double strike = 0.0;
};

struct ExperimentConfig {
  std::string name;
  ModelKind model = ModelKind::wishart;
  WishartParams wishart;  // wishart and gourieroux models
  AffineParams affine;    // affine model (also filled for wishart)
  std::vector<SchemeSpec> schemes;
  double horizon = 1.0;
  std::vector<int> n_grid{1};
  std::int64_t n_paths = 10000;
  std::uint64_t seed = 1;
  FunctionalSpec functional;
  std::optional<Complex> truth;
  double rate = 0.0;
  Vector s0;

  int dim() const { return affine.dim(); }
};

/// Parses and validates a configuration. Every failure is a ConfigError
/// naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> preset_names();
nlohmann::json preset_json(const std::string& name);

/// Closed-form truth for charfn functionals on the Wishart model.
std::optional<Complex> closed_form_truth(const ExperimentConfig& cfg);

/// Runs the CLI; returns the process exit code (0 ok, 2 config error,
/// 3 numerical error, 4 insufficient signal).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace wishart
