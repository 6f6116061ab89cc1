#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "wishart/cli.hpp"

namespace wishart {

using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> paths;
  int threads = 0;
  std::string out;
  std::string format = "csv";
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  if (o.config.empty() == o.preset.empty()) throw Error(Errc::ConfigError, "give exactly one of --config or --preset");
  ExperimentConfig cfg = o.preset.empty() ? load_config(o.config) : parse_config(preset_json(o.preset));
  if (o.seed) cfg.seed = *o.seed;
  if (o.paths) {
    if (*o.paths < 2) throw Error(Errc::ConfigError, "--paths must be >= 2");
    cfg.n_paths = *o.paths;
  }
  return cfg;
}

McOptions mc_options(const ExperimentConfig& cfg, const CommonOptions& o) {
  McOptions m;
  m.seed = cfg.seed;
  m.threads = o.threads;
  return m;
}

// Writes to --out when given, stdout otherwise; the file only appears once
// the command has produced its full output.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}
  std::ostream& stream() { return buf_; }
  void commit() {
    if (path_.empty()) {
      fallback_ << buf_.str();
      return;
    }
    std::ofstream f(path_, std::ios::binary);
    if (!f) throw Error(Errc::ConfigError, "cannot write '" + path_ + "'");
    f << buf_.str();
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buf_;
};

Stepper make_stepper(const ExperimentConfig& cfg, const SchemeSpec& spec, double dt) {
  if (cfg.model == ModelKind::affine) return affine_stepper(cfg.affine, dt, spec);
  return wishart_stepper(cfg.wishart, dt, spec);
}

PathFunctional make_path_functional(const ExperimentConfig& cfg, const SchemeSpec& spec, int n_steps) {
  const double dt = cfg.horizon / n_steps;
  if (cfg.model == ModelKind::gourieroux) {
    auto stepper = std::make_shared<GourierouxStepper>(cfg.rate, cfg.wishart, dt, spec);
    const GourierouxState start{cfg.s0, cfg.wishart.x};
    const double discount = std::exp(-cfg.rate * cfg.horizon);
    const double strike = cfg.functional.strike;
    return [stepper, start, discount, strike, n_steps](RngStream& rng) {
      GourierouxState st = start;
      for (int k = 0; k < n_steps; ++k) st = stepper->step(rng, st);
      return Complex(discount * std::max(strike - st.s.maxCoeff(), 0.0), 0.0);
    };
  }
  const Stepper stepper = make_stepper(cfg, spec, dt);
  const SymMatrix x0 = cfg.affine.x;
  if (cfg.functional.kind == FunctionalSpec::Kind::max_trace) {
    return [stepper, x0, n_steps](RngStream& rng) {
      SymMatrix x = x0;
      double best = x.trace();
      for (int k = 0; k < n_steps; ++k) {
        x = stepper(rng, x);
        best = std::max(best, x.trace());
      }
      return Complex(best, 0.0);
    };
  }
  const auto f = exp_trace_functional(cfg.functional.v);
  return [stepper, x0, n_steps, f](RngStream& rng) {
    SymMatrix x = x0;
    for (int k = 0; k < n_steps; ++k) x = stepper(rng, x);
    return f(x);
  };
}

json estimate_json(const McEstimate& e) {
  return {{"re", e.mean.real()}, {"im", e.mean.imag()}, {"se_re", e.se_re}, {"se_im", e.se_im},
          {"n", e.n},           {"elapsed_s", e.elapsed}};
}

// ---------------------------------------------------------------------------

int cmd_sample(const CommonOptions& o, bool full_paths, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  const SchemeSpec& spec = cfg.schemes.front();
  const int n_steps = cfg.n_grid.front();
  const double dt = cfg.horizon / n_steps;
  const int d = cfg.dim();
  const bool gour = cfg.model == ModelKind::gourieroux;

  std::unique_ptr<GourierouxStepper> gstep;
  Stepper stepper;
  if (gour) gstep = std::make_unique<GourierouxStepper>(cfg.rate, cfg.wishart, dt, spec);
  else stepper = make_stepper(cfg, spec, dt);

  Output sink(o.out, out);
  std::ostream& os = sink.stream();
  const bool as_json = o.format == "json";
  std::vector<std::string> columns;
  if (full_paths) columns = {"path", "step"};
  if (gour)
    for (int i = 1; i <= d; ++i) columns.push_back("s_" + std::to_string(i));
  for (int i = 1; i <= d; ++i)
    for (int j = i; j <= d; ++j) columns.push_back("x_" + std::to_string(i) + "_" + std::to_string(j));

  json rows = json::array();
  if (!as_json) {
    os << "# schema=wishart-sample-v1\n";
    for (size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
  }
  auto emit = [&](std::int64_t path, int step, const Vector* s, const SymMatrix& x) {
    std::vector<double> values;
    if (full_paths) {
      values.push_back(static_cast<double>(path));
      values.push_back(step);
    }
    if (s)
      for (int i = 0; i < d; ++i) values.push_back((*s)(i));
    const Vector p = x.packed();
    for (int i = 0; i < p.size(); ++i) values.push_back(p(i));
    if (as_json) {
      rows.push_back(values);
      return;
    }
    for (size_t c = 0; c < values.size(); ++c) os << (c ? "," : "") << fmt(values[c]);
    os << "\n";
  };

  for (std::int64_t path = 0; path < cfg.n_paths; ++path) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(path));
    if (gour) {
      GourierouxState st{cfg.s0, cfg.wishart.x};
      if (full_paths) emit(path, 0, &st.s, st.x);
      for (int k = 1; k <= n_steps; ++k) {
        st = gstep->step(rng, st);
        if (full_paths || k == n_steps) emit(path, k, &st.s, st.x);
      }
    } else {
      SymMatrix x = cfg.affine.x;
      if (full_paths) emit(path, 0, nullptr, x);
      for (int k = 1; k <= n_steps; ++k) {
        x = stepper(rng, x);
        if (full_paths || k == n_steps) emit(path, k, nullptr, x);
      }
    }
  }
  if (as_json) os << json{{"schema", "wishart-sample-v1"}, {"columns", columns}, {"rows", rows}}.dump() << "\n";
  sink.commit();
  return 0;
}

int cmd_table1(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.model != ModelKind::wishart || cfg.functional.kind != FunctionalSpec::Kind::charfn)
    throw Error(Errc::ConfigError, "table1 needs a Wishart model with a charfn functional");
  const Complex exact = *closed_form_truth(cfg);
  const McOptions mc = mc_options(cfg, o);

  struct Job {
    std::string label;
    SchemeSpec spec;
    int n;
    PathFunctional fn;
  };
  // Build every stepper first so that invalid combinations are reported
  // before any sampling.
  std::vector<Job> jobs;
  jobs.push_back({"exact_1step", SchemeSpec{}, 1, make_path_functional(cfg, SchemeSpec{}, 1)});
  for (int n : cfg.n_grid) {
    for (const SchemeSpec& spec : cfg.schemes) {
      try {
        jobs.push_back({to_string(spec.kind), spec, n, make_path_functional(cfg, spec, n)});
      } catch (const Error& e) {
        if (e.code() != Errc::NeedsDegreeAtLeastD && e.code() != Errc::UnsupportedParams) throw;
        if (n == cfg.n_grid.front()) err << to_string(spec.kind) << " skipped: " << e.what() << "\n";
      }
    }
  }

  Output sink(o.out, out);
  std::ostream& os = sink.stream();
  json rows = json::array();
  const bool as_json = o.format == "json";
  if (!as_json) os << "# schema=wishart-table1-v1\nscheme,N,re,im,se_re,se_im,elapsed_s,exact_re,exact_im,within_2sigma\n";
  for (const Job& job : jobs) {
    const McEstimate e = mc_estimate(job.fn, cfg.n_paths, mc);
    const bool inside = std::abs(e.mean.real() - exact.real()) <= 2.0 * e.se_re &&
                        std::abs(e.mean.imag() - exact.imag()) <= 2.0 * e.se_im;
    if (as_json) {
      json r = estimate_json(e);
      r["scheme"] = job.label;
      r["N"] = job.n;
      r["within_2sigma"] = inside;
      rows.push_back(r);
    } else {
      os << job.label << "," << job.n << "," << fmt(e.mean.real()) << "," << fmt(e.mean.imag()) << ","
         << fmt(e.se_re) << "," << fmt(e.se_im) << "," << fmt(e.elapsed) << "," << fmt(exact.real()) << ","
         << fmt(exact.imag()) << "," << (inside ? 1 : 0) << "\n";
    }
  }
  if (as_json)
    os << json{{"schema", "wishart-table1-v1"},
               {"name", cfg.name},
               {"exact", {{"re", exact.real()}, {"im", exact.imag()}}},
               {"rows", rows}}
              .dump(2)
       << "\n";
  sink.commit();
  return 0;
}

int cmd_converge(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.model == ModelKind::gourieroux) throw Error(Errc::ConfigError, "use the gourieroux command for this model");
  const McOptions mc = mc_options(cfg, o);
  const bool max_trace = cfg.functional.kind == FunctionalSpec::Kind::max_trace;
  if (max_trace && cfg.model != ModelKind::wishart)
    throw Error(Errc::ConfigError, "the max_trace study needs the Wishart model");
  std::optional<Complex> truth;
  if (!max_trace) {
    truth = closed_form_truth(cfg);
    if (!truth) throw Error(Errc::ConfigError, "converge needs a 'truth' entry for this configuration");
  }
  // Preflight: every (scheme, N) stepper must build.
  for (const SchemeSpec& spec : cfg.schemes)
    for (int n : cfg.n_grid) make_stepper(cfg, spec, cfg.horizon / n);

  std::vector<std::pair<std::string, ConvergenceReport>> reports;
  for (const SchemeSpec& spec : cfg.schemes) {
    ConvergenceReport r =
        max_trace ? pathwise_max_trace_study(spec, cfg.wishart, cfg.horizon, cfg.n_grid, cfg.n_paths, mc)
                  : run_convergence([&](int n) { return make_path_functional(cfg, spec, n); }, *truth,
                                    cfg.functional.component, cfg.n_grid, cfg.n_paths, mc);
    reports.emplace_back(to_string(spec.kind), std::move(r));
  }

  Output sink(o.out, out);
  std::ostream& os = sink.stream();
  bool any_fit = false;
  if (o.format == "json") {
    json js = json::array();
    for (const auto& [name, r] : reports) {
      json pts = json::array();
      for (const ConvergencePoint& p : r.points) {
        json e = estimate_json(p.estimate);
        e["N"] = p.n_steps;
        e["dt"] = cfg.horizon / p.n_steps;
        e["error"] = p.error;
        e["ci_half_width"] = 2.0 * p.se;
        e["above_noise"] = p.above_noise;
        pts.push_back(e);
      }
      json s = {{"scheme", name}, {"points", pts}, {"fitted", r.fitted}, {"used_points", r.used_points}};
      if (r.fitted) {
        s["slope"] = r.slope;
        s["slope_ci"] = {r.slope_ci.first, r.slope_ci.second};
      }
      any_fit = any_fit || r.fitted;
      js.push_back(s);
    }
    json doc = {{"schema", "wishart-converge-v1"}, {"name", cfg.name}, {"schemes", js}};
    if (truth) doc["truth"] = {{"re", truth->real()}, {"im", truth->imag()}};
    os << doc.dump(2) << "\n";
  } else {
    os << "# schema=wishart-converge-v1\n";
    if (truth) os << "# truth_re=" << fmt(truth->real()) << " truth_im=" << fmt(truth->imag()) << "\n";
    os << "scheme,N,dt,re,im,se_re,se_im,error,ci_half_width,above_noise\n";
    for (const auto& [name, r] : reports)
      for (const ConvergencePoint& p : r.points)
        os << name << "," << p.n_steps << "," << fmt(cfg.horizon / p.n_steps) << "," << fmt(p.estimate.mean.real())
           << "," << fmt(p.estimate.mean.imag()) << "," << fmt(p.estimate.se_re) << "," << fmt(p.estimate.se_im)
           << "," << fmt(p.error) << "," << fmt(2.0 * p.se) << "," << (p.above_noise ? 1 : 0) << "\n";
    for (const auto& [name, r] : reports) {
      if (r.fitted)
        os << "# slope scheme=" << name << " value=" << fmt(r.slope) << " ci=[" << fmt(r.slope_ci.first) << ","
           << fmt(r.slope_ci.second) << "] points=" << r.used_points << "\n";
      else
        os << "# slope scheme=" << name << " insufficient_signal points=" << r.used_points << "\n";
      any_fit = any_fit || r.fitted;
    }
  }
  sink.commit();
  for (const auto& [name, r] : reports)
    if (!r.fitted) err << name << ": fewer than three points above noise, no slope fitted\n";
  return any_fit ? 0 : 4;
}

int cmd_gourieroux(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.model != ModelKind::gourieroux) throw Error(Errc::ConfigError, "gourieroux needs model = gourieroux");
  const McOptions mc = mc_options(cfg, o);
  for (const SchemeSpec& spec : cfg.schemes)
    for (int n : cfg.n_grid) GourierouxStepper(cfg.rate, cfg.wishart, cfg.horizon / n, spec);

  Output sink(o.out, out);
  std::ostream& os = sink.stream();
  json js = json::array();
  const bool as_json = o.format == "json";
  if (!as_json) os << "# schema=wishart-gourieroux-v1\nscheme,N,price,se,ref_N,ref_price,ref_se,diff,within_3sigma\n";
  for (const SchemeSpec& spec : cfg.schemes) {
    std::vector<McEstimate> est;
    for (int n : cfg.n_grid) est.push_back(mc_estimate(make_path_functional(cfg, spec, n), cfg.n_paths, mc));
    const McEstimate& ref = est.back();
    for (size_t i = 0; i < est.size(); ++i) {
      const double diff = est[i].mean.real() - ref.mean.real();
      const double se = std::hypot(est[i].se_re, ref.se_re);
      const bool inside = std::abs(diff) <= 3.0 * se;
      if (as_json) {
        js.push_back({{"scheme", to_string(spec.kind)}, {"N", cfg.n_grid[i]}, {"price", est[i].mean.real()},
                      {"se", est[i].se_re}, {"ref_N", cfg.n_grid.back()}, {"ref_price", ref.mean.real()},
                      {"ref_se", ref.se_re}, {"diff", diff}, {"within_3sigma", inside}});
      } else {
        os << to_string(spec.kind) << "," << cfg.n_grid[i] << "," << fmt(est[i].mean.real()) << ","
           << fmt(est[i].se_re) << "," << cfg.n_grid.back() << "," << fmt(ref.mean.real()) << "," << fmt(ref.se_re)
           << "," << fmt(diff) << "," << (inside ? 1 : 0) << "\n";
      }
    }
  }
  if (as_json) os << json{{"schema", "wishart-gourieroux-v1"}, {"name", cfg.name}, {"rows", js}}.dump(2) << "\n";
  sink.commit();
  return 0;
}

int cmd_charfn(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_config(o);
  if (cfg.model != ModelKind::wishart || cfg.functional.kind != FunctionalSpec::Kind::charfn)
    throw Error(Errc::ConfigError, "charfn needs a Wishart model with a charfn functional");
  const Complex v = wishart_charfn(cfg.wishart, cfg.horizon, cfg.functional.v);
  Output sink(o.out, out);
  if (o.format == "json")
    sink.stream() << json{{"schema", "wishart-charfn-v1"}, {"re", v.real()}, {"im", v.imag()}}.dump() << "\n";
  else
    sink.stream() << "# schema=wishart-charfn-v1\nre,im\n" << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
  sink.commit();
  return 0;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "JSON experiment configuration");
  sub->add_option("--preset", o.preset, "built-in configuration (see --list-presets)");
  sub->add_option("--seed", o.seed, "base seed; path i uses stream i");
  sub->add_option("--paths", o.paths, "number of Monte-Carlo paths");
  sub->add_option("--threads", o.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", o.out, "output file (default: stdout)");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::ConfigError:
      return 2;
    case Errc::InsufficientSignal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact and high-order simulation of Wishart and affine processes"};
  app.require_subcommand(0, 1);
  bool list = false;
  app.add_flag("--list-presets", list, "print the built-in configurations");

  CommonOptions o;
  bool full_paths = false;
  CLI::App* sample = app.add_subcommand("sample", "write terminal samples (or whole paths)");
  add_common(sample, o);
  sample->add_flag("--full-paths", full_paths, "write every grid point of every path");
  CLI::App* table1 = app.add_subcommand("table1", "terminal characteristic function for every scheme");
  add_common(table1, o);
  CLI::App* converge = app.add_subcommand("converge", "weak convergence study over the N grid");
  add_common(converge, o);
  CLI::App* gour = app.add_subcommand("gourieroux", "put-on-max prices in the Gourieroux-Sufana model");
  add_common(gour, o);
  CLI::App* charfn = app.add_subcommand("charfn", "closed-form characteristic function");
  add_common(charfn, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (list) {
      for (const std::string& name : preset_names()) out << name << "\n";
      return 0;
    }
    if (sample->parsed()) return cmd_sample(o, full_paths, out);
    if (table1->parsed()) return cmd_table1(o, out, err);
    if (converge->parsed()) return cmd_converge(o, out, err);
    if (gour->parsed()) return cmd_gourieroux(o, out);
    if (charfn->parsed()) return cmd_charfn(o, out);
    err << app.help();
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace wishart
