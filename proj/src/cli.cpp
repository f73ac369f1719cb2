#include "hmmifs/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "hmmifs/derivatives.hpp"
#include "hmmifs/diagnostics.hpp"
#include "hmmifs/errors.hpp"
#include "hmmifs/estimation.hpp"
#include "hmmifs/filter.hpp"
#include "hmmifs/io.hpp"

namespace hmmifs::cli {

namespace {

using io::format_double;

struct Options {
  std::string model;
  std::vector<std::string> obs;
  std::string out;
  std::uint64_t seed = 7;
  int jobs = 1;

  Index n = 100;
  bool fd_check = false;
  double perturb = 0.0;
  int max_iterations = 500;
  std::string trace;
  std::string component;
  std::vector<double> values;
  double from = 0.0, to = 0.0;
  int points = 0;
  Index max_length = 4;
  double xi0 = 0.0, xi1 = 0.0;
  std::vector<double> bounds{1.0, 2.0, 3.0, 4.0};
  double step = 0.1;
  int sweep = 1000;
};

void ensure_parent(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
}

// Destination for a command's main output: the --out file, else `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) {
      ensure_parent(path);
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ValidationError(path + ": cannot open for writing");
    }
    stream_ = path.empty() ? &fallback : &file_;
  }

  std::ostream& stream() { return *stream_; }
  bool to_file() const { return !path_.empty(); }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

const std::string& single_obs(const Options& o) {
  if (o.obs.size() != 1) throw ValidationError("--obs: exactly one observation file required");
  return o.obs.front();
}

// Writes the verdict as a trailing comment of the CSV and echoes it to stdout
// when the CSV went to a file.
int verdict(Sink& sink, std::ostream& out, bool pass, const std::string& detail) {
  const std::string line = std::string(pass ? "PASS" : "FAIL") + " " + detail;
  sink.stream() << "# " << line << '\n';
  if (sink.to_file()) out << line << '\n';
  return pass ? kOk : kNumerical;
}

// --- subcommands ------------------------------------------------------------

int cmd_simulate(const Options& o, std::ostream& out) {
  const auto config = io::load_model_config(o.model);
  const auto seq = simulate(config.model(), o.n, o.seed);
  Sink sink(o.out, out);
  io::write_observations(sink.stream(), seq);
  return kOk;
}

int cmd_loglik(const Options& o, std::ostream& out) {
  const auto model = io::load_model_config(o.model).model();
  const auto obs = io::load_observations(single_obs(o));
  const auto trace = unnormalized_filter_trace(model, obs);
  const double ll = trace.log_mass(trace.log_mass.size() - 1);
  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "# log_lik=" << format_double(ll) << '\n';
  s << "t,log_c,log_mass\n";
  for (Index t = 0; t < trace.log_c.size(); ++t) {
    s << t << ',' << format_double(trace.log_c(t)) << ',' << format_double(trace.log_mass(t)) << '\n';
  }
  if (sink.to_file()) out << format_double(ll) << '\n';
  return kOk;
}

int cmd_score(const Options& o, std::ostream& out) {
  const auto model = io::load_model_config(o.model).model();
  const auto obs = io::load_observations(single_obs(o));
  const Vector g = score(model, obs);
  Vector fd;
  if (o.fd_check) fd = finite_difference_score(model, obs);
  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "name,theta,score" << (o.fd_check ? ",fd_score,residual" : "") << '\n';
  for (Index k = 0; k < g.size(); ++k) {
    s << model.layout()[k].name << ',' << format_double(model.theta()(k)) << ',' << format_double(g(k));
    if (o.fd_check) s << ',' << format_double(fd(k)) << ',' << format_double(std::abs(g(k) - fd(k)));
    s << '\n';
  }
  if (o.fd_check) {
    const double worst = g.size() ? (g - fd).cwiseAbs().maxCoeff() : 0.0;
    return verdict(sink, out, worst <= 1e-5, "max |score - fd| = " + format_double(worst) + " (tolerance 1e-5)");
  }
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const auto config = io::load_model_config(o.model);
  const auto obs = io::load_observations(single_obs(o));
  OptimizerOptions options;
  options.max_iterations = o.max_iterations;
  const Vector theta0 = config.theta.array() + o.perturb;
  const FitResult fit = mle_fit(config.spec, obs, theta0, options);

  Sink sink(o.out, out);
  sink.stream() << io::to_json(fit).dump(2) << '\n';
  if (!o.trace.empty()) {
    ensure_parent(o.trace);
    std::ofstream t(o.trace, std::ios::binary | std::ios::trunc);
    if (!t) throw ValidationError(o.trace + ": cannot open for writing");
    t << "iteration,log_lik,score_norm";
    for (const auto& c : config.spec.layout.components()) t << ',' << c.name;
    t << '\n';
    for (const auto& row : fit.trace) {
      t << row.iteration << ',' << format_double(row.log_lik) << ',' << format_double(row.score_norm);
      for (Index k = 0; k < row.theta.size(); ++k) t << ',' << format_double(row.theta(k));
      t << '\n';
    }
  }
  if (!fit.converged) {
    err << "fit did not converge after " << fit.iterations << " iterations\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_profile(const Options& o, std::ostream& out) {
  const auto config = io::load_model_config(o.model);
  const auto obs = io::load_observations(single_obs(o));
  std::vector<double> grid = o.values;
  if (grid.empty() && o.points > 0) {
    for (int i = 0; i < o.points; ++i) {
      grid.push_back(o.points == 1 ? o.from : o.from + (o.to - o.from) * i / (o.points - 1));
    }
  }
  const auto rows = profile_loglik(config.spec, obs, o.component, grid, config.theta, o.jobs);
  Sink sink(o.out, out);
  sink.stream() << o.component << ",log_lik\n";
  for (const auto& r : rows) sink.stream() << format_double(r.value) << ',' << format_double(r.log_lik) << '\n';
  return kOk;
}

int cmd_check_operators(const Options& o, std::ostream& out) {
  const auto model = io::load_model_config(o.model).model();
  std::vector<ObservationSequence> seqs;
  for (const auto& path : o.obs) seqs.push_back(io::load_observations(path));
  if (seqs.empty()) {
    if (o.max_length < 1) throw ValidationError("--max-length must be >= 1");
    const auto sim = simulate(model, o.max_length - 1, o.seed);
    for (Index len = 1; len <= o.max_length; ++len) seqs.push_back(sim.head(len));
  }
  const auto report = operator_mismatch_report(model, seqs, o.jobs);
  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "length,fuh,corrected,bruteforce,fuh_gap,corrected_gap\n";
  double fuh_worst = 0.0;
  for (const auto& r : report.rows) {
    s << r.length << ',' << format_double(r.fuh) << ',' << format_double(r.corrected) << ','
      << format_double(r.bruteforce) << ',' << format_double(r.fuh_gap) << ',' << format_double(r.corrected_gap)
      << '\n';
    fuh_worst = std::max(fuh_worst, r.fuh_gap);
  }
  const double gap = report.max_corrected_gap();
  return verdict(sink, out, gap <= 1e-10,
                 "corrected gap " + format_double(gap) + " (tolerance 1e-10); largest original-operator gap " +
                     format_double(fuh_worst));
}

int cmd_check_degeneracy(const Options& o, std::ostream& out) {
  const auto model = io::load_model_config(o.model).model();
  const auto report = degeneracy_report(model, o.n, o.seed);
  const double bound = gaussian_log_mass_bound();
  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "t,log_c,log_mass,filter_mass,bound\n";
  for (Index t = 0; t < report.trace.log_c.size(); ++t) {
    s << t << ',' << format_double(report.trace.log_c(t)) << ',' << format_double(report.trace.log_mass(t)) << ','
      << format_double(report.trace.filter_mass(t)) << ',' << format_double(bound * static_cast<double>(t + 1))
      << '\n';
  }
  const bool bound_ok = !report.bound_applies || (report.slope_within_bound() && report.max_bound_excess <= 1e-9);
  const bool mass_ok = report.max_filter_mass_error <= 1e-12;
  return verdict(sink, out, bound_ok && mass_ok,
                 "slope " + format_double(report.slope) + " vs bound " + format_double(bound) +
                     (report.bound_applies ? "" : " (not applicable)") + "; final log_mass " +
                     format_double(report.trace.log_mass(report.trace.log_mass.size() - 1)) +
                     "; max filter mass error " + format_double(report.max_filter_mass_error));
}

int cmd_check_score_system(const Options& o, std::ostream& out) {
  const auto model = io::load_model_config(o.model).model();
  const auto obs = o.obs.empty() ? simulate(model, o.n, o.seed) : io::load_observations(single_obs(o));
  const auto r = score_system_check(model, obs);
  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "kind,label,a,b\n";
  auto rows = [&](const char* kind, const Vector& a, const Vector& b, bool named) {
    for (Index i = 0; i < a.size() && i < b.size(); ++i) {
      s << kind << ',' << (named ? model.layout()[i].name : std::to_string(i)) << ',' << format_double(a(i)) << ','
        << format_double(b(i)) << '\n';
    }
  };
  rows("theta", r.theta_a, r.theta_b, true);
  rows("prior", r.prior_a, r.prior_b, false);
  rows("filter", r.filter_a, r.filter_b, false);
  rows("increment", r.increment_a, r.increment_b, true);
  const bool shown = r.outcome == ScoreSystemReport::Outcome::Demonstrated ||
                     r.outcome == ScoreSystemReport::Outcome::Degenerate;
  const bool fd_ok = r.fd_residual <= 1e-5;
  return verdict(sink, out, shown && fd_ok,
                 to_string(r.outcome) + ": " + r.note + "; filter gap " + format_double(r.filter_gap) +
                     "; increment gap " + format_double(r.increment_gap) + "; fd residual " +
                     format_double(r.fd_residual));
}

int cmd_check_c5(const Options& o, std::ostream& out) {
  const auto scan = c5_sup_scan(o.xi0, o.xi1, o.bounds, o.step, o.jobs);

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> draw(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < o.sweep; ++i) {
    const double a = draw(rng), b = draw(rng), y = draw(rng), z = draw(rng);
    const double direct = c5_direct_ratio(a, b, y, z);
    worst = std::max(worst, std::abs(c5_ratio(a, b, y, z) - direct) / direct);
  }

  Sink sink(o.out, out);
  auto& s = sink.stream();
  s << "bound,y,z,xi0,xi1,log_ratio,supremum\n";
  bool exact = true;
  for (const auto& r : scan.rows) {
    s << format_double(r.bound) << ',' << format_double(r.y) << ',' << format_double(r.z) << ','
      << format_double(o.xi0) << ',' << format_double(o.xi1) << ',' << format_double(r.log_ratio) << ','
      << format_double(r.supremum) << '\n';
    if (o.xi0 + o.xi1 == 0.0 && r.supremum != std::exp(r.bound * r.bound)) exact = false;
  }
  const bool pass = scan.strictly_increasing() && worst <= 1e-12 && exact;
  return verdict(sink, out, pass,
                 std::string("suprema ") + (scan.strictly_increasing() ? "strictly increasing" : "NOT increasing") +
                     (o.xi0 + o.xi1 == 0.0 ? (exact ? ", equal exp(B^2)" : ", differ from exp(B^2)") : "") +
                     "; closed form vs density ratio max rel error " + format_double(worst) + " over " +
                     std::to_string(o.sweep) + " draws");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Likelihood, filtering and diagnostics for hidden Markov models with observation feedback"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Options o;
  auto add_common = [&](CLI::App* sub, bool needs_obs) {
    sub->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
    if (needs_obs) sub->add_option("--obs", o.obs, "Observation CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output file (default: stdout)");
    sub->add_option("--seed", o.seed, "PRNG seed");
    sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };

  std::map<CLI::App*, std::function<int()>> handlers;

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate observations from a model");
  add_common(simulate_cmd, false);
  simulate_cmd->add_option("--n", o.n, "Chain length (n + 1 observations)")->required()->check(CLI::NonNegativeNumber);
  handlers[simulate_cmd] = [&] { return cmd_simulate(o, out); };

  auto* loglik_cmd = app.add_subcommand("loglik", "Log-likelihood with per-step normalizers");
  add_common(loglik_cmd, true);
  handlers[loglik_cmd] = [&] { return cmd_loglik(o, out); };

  auto* score_cmd = app.add_subcommand("score", "Score vector from the tangent filter");
  add_common(score_cmd, true);
  score_cmd->add_flag("--fd-check", o.fd_check, "Compare against central differences of loglik");
  handlers[score_cmd] = [&] { return cmd_score(o, out); };

  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit from the model's theta values");
  add_common(fit_cmd, true);
  fit_cmd->add_option("--perturb", o.perturb, "Added to every starting component");
  fit_cmd->add_option("--max-iter", o.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--trace", o.trace, "Per-iteration trace CSV");
  handlers[fit_cmd] = [&] { return cmd_fit(o, out, err); };

  auto* profile_cmd = app.add_subcommand("profile", "Log-likelihood along one parameter");
  add_common(profile_cmd, true);
  profile_cmd->add_option("--component", o.component, "Parameter name")->required();
  auto* values_opt = profile_cmd->add_option("--values", o.values, "Grid values")->delimiter(',');
  auto* from_opt = profile_cmd->add_option("--from", o.from, "Grid start");
  auto* to_opt = profile_cmd->add_option("--to", o.to, "Grid end");
  auto* points_opt = profile_cmd->add_option("--points", o.points, "Number of grid points")->check(CLI::PositiveNumber);
  from_opt->needs(points_opt);
  to_opt->needs(points_opt);
  points_opt->needs(from_opt)->needs(to_opt)->excludes(values_opt);
  handlers[profile_cmd] = [&] { return cmd_profile(o, out); };

  auto* ops_cmd = app.add_subcommand("check-operators", "Original vs corrected operator composition");
  add_common(ops_cmd, false);
  ops_cmd->add_option("--obs", o.obs, "Observation CSVs (default: prefixes of a simulation)")->check(CLI::ExistingFile);
  ops_cmd->add_option("--max-length", o.max_length, "Longest simulated prefix");
  handlers[ops_cmd] = [&] { return cmd_check_operators(o, out); };

  auto* degeneracy_cmd = app.add_subcommand("check-degeneracy", "Drift of the unnormalized filter mass");
  add_common(degeneracy_cmd, false);
  degeneracy_cmd->add_option("--n", o.n, "Chain length (>= 20)");
  handlers[degeneracy_cmd] = [&] {
    return cmd_check_degeneracy(o, out);
  };

  auto* system_cmd = app.add_subcommand("check-score-system", "Score increments are not functions of filter pairs");
  add_common(system_cmd, false);
  system_cmd->add_option("--obs", o.obs, "Observation CSV (default: simulate --n, --seed)")->check(CLI::ExistingFile);
  system_cmd->add_option("--n", o.n, "Simulated chain length when --obs is absent");
  handlers[system_cmd] = [&] { return cmd_check_score_system(o, out); };

  auto* c5_cmd = app.add_subcommand("check-c5", "Unboundedness of the two-step Gaussian likelihood ratio");
  c5_cmd->add_option("--xi0", o.xi0, "First observation");
  c5_cmd->add_option("--xi1", o.xi1, "Second observation");
  c5_cmd->add_option("--bounds", o.bounds, "Box half-widths")->delimiter(',');
  c5_cmd->add_option("--step", o.step, "Grid step");
  c5_cmd->add_option("--sweep", o.sweep, "Random draws for the closed-form check")->check(CLI::NonNegativeNumber);
  c5_cmd->add_option("--out", o.out, "Output file (default: stdout)");
  c5_cmd->add_option("--seed", o.seed, "PRNG seed for the sweep");
  c5_cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  handlers[c5_cmd] = [&] { return cmd_check_c5(o, out); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  int code = kOk;
  try {
    code = handlers.at(chosen)();
  } catch (const ImpossibleObservation& e) {
    err << chosen->get_name() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const NumericalError& e) {
    err << chosen->get_name() << ": " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << chosen->get_name() << ": " << e.what() << '\n';
    return kValidation;
  }

  if (!o.out.empty()) {
    io::RunManifest manifest;
    manifest.subcommand = chosen->get_name();
    manifest.config_path = o.model;
    for (std::size_t i = 0; i < o.obs.size(); ++i) manifest.data_path += (i ? ";" : "") + o.obs[i];
    manifest.seed = o.seed;
    manifest.tool_version = kToolVersion;
    manifest.started_at = started_at;
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    auto dir = std::filesystem::absolute(o.out).parent_path();
    io::write_manifest(dir, manifest);
  }
  return code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("hmmifs");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hmmifs::cli
