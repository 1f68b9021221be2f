// Command-line front end: data generation, complete-case fitting, Monte
// Carlo simulation grids, and DAG-based censoring-mechanism checks.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "cccov/csv.hpp"
#include "cccov/dag.hpp"
#include "cccov/datagen.hpp"
#include "cccov/estimator.hpp"
#include "cccov/simharness.hpp"

namespace {

using nlohmann::json;

struct SimulateArgs {
  std::string config_path;
  std::string model = "linear";
  std::string mechanism = "all";
  std::vector<int> ns;
  std::vector<double> rates;
  int reps = 1000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "sim_results.csv";
  bool allow_failures = false;
};

// Config-file keys fill in any option the user did not pass on the command
// line; explicit flags always win.
void merge_config(const CLI::App& cmd, SimulateArgs& args) {
  if (args.config_path.empty()) return;
  std::ifstream in(args.config_path);
  if (!in) throw cccov::ArgumentError("cannot open config '" + args.config_path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw cccov::ArgumentError("config '" + args.config_path + "': " + e.what());
  }
  auto unset = [&](const char* flag) { return cmd.get_option(flag)->count() == 0; };
  for (const auto& [key, value] : cfg.items()) {
    try {
      if (key == "model") { if (unset("--model")) args.model = value.get<std::string>(); }
      else if (key == "mechanism") { if (unset("--mechanism")) args.mechanism = value.get<std::string>(); }
      else if (key == "n") {
        if (unset("--n")) {
          args.ns.clear();
          if (value.is_array()) for (const auto& v : value) args.ns.push_back(v.get<int>());
          else args.ns.push_back(value.get<int>());
        }
      } else if (key == "rate") {
        if (unset("--rate")) {
          args.rates.clear();
          if (value.is_array()) for (const auto& v : value) args.rates.push_back(v.get<double>());
          else args.rates.push_back(value.get<double>());
        }
      }
      else if (key == "reps") { if (unset("--reps")) args.reps = value.get<int>(); }
      else if (key == "seed") { if (unset("--seed")) args.seed = value.get<std::uint64_t>(); }
      else if (key == "workers") { if (unset("--workers")) args.workers = value.get<int>(); }
      else if (key == "out") { if (unset("--out")) args.out = value.get<std::string>(); }
      else throw cccov::ArgumentError("config key '" + key + "' is not recognized");
    } catch (const json::exception&) {
      throw cccov::ArgumentError("config key '" + key + "' has the wrong type");
    }
  }
}

std::string sibling_markdown_path(const std::string& csv_path) {
  auto dot = csv_path.find_last_of('.');
  auto slash = csv_path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return csv_path + ".md";
  return csv_path.substr(0, dot) + ".md";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cccov::ArgumentError("cannot write '" + path + "'");
  out << text;
}

int run_simulate(const CLI::App& cmd, SimulateArgs args) {
  merge_config(cmd, args);
  if (args.reps < 1) throw cccov::ArgumentError("reps must be >= 1");
  if (args.workers < 1) throw cccov::ArgumentError("workers must be >= 1");
  if (args.ns.empty()) args.ns.push_back(400);
  if (args.rates.empty()) args.rates.push_back(0.25);
  if (args.out.empty()) throw cccov::ArgumentError("out path must not be empty");

  cccov::MeanModelSpec spec = cccov::spec_from_key(args.model, 1);
  Eigen::VectorXd beta_true = cccov::default_beta_true(args.model);
  double sigma2 = cccov::default_error_variance(args.model);

  std::vector<cccov::Mechanism> mechanisms;
  if (args.mechanism == "all")
    mechanisms.assign(cccov::all_mechanisms().begin(), cccov::all_mechanisms().end());
  else
    mechanisms.push_back(cccov::mechanism_from_string(args.mechanism));

  std::set<cccov::Method> methods = {cccov::Method::CompleteCase,
                                     cccov::Method::Oracle};
  std::vector<cccov::SimSummary> summaries;
  int total_failed = 0;
  for (cccov::Mechanism mech : mechanisms) {
    for (int n : args.ns) {
      for (double rate : args.rates) {
        cccov::SimSetting setting;
        setting.mechanism = mech;
        setting.n = n;
        setting.rate = rate;
        setting.model = spec;
        setting.beta_true = beta_true;
        setting.sigma2 = sigma2;
        setting.seed = args.seed;
        cccov::SimSummary s =
            cccov::run_replications(setting, args.reps, methods, args.workers);
        for (const auto& [method, ms] : s.by_method) {
          std::cout << cccov::mechanism_to_string(mech) << " n=" << n
                    << " rate=" << rate << " method="
                    << cccov::method_to_string(method) << " reps=" << s.reps
                    << " n_failed=" << ms.n_failed << "\n";
          total_failed += ms.n_failed;
        }
        summaries.push_back(std::move(s));
      }
    }
  }

  write_text_file(args.out, cccov::emit_table(summaries, cccov::TableFormat::Csv));
  std::string md_path = sibling_markdown_path(args.out);
  write_text_file(md_path, cccov::emit_table(summaries, cccov::TableFormat::Markdown));
  std::cout << "wrote " << args.out << " and " << md_path << "\n";

  if (total_failed > 0 && !args.allow_failures) {
    std::cerr << "error: " << total_failed
              << " replications failed to converge (pass --allow-failures to "
                 "accept)\n";
    return 1;
  }
  return 0;
}

int run_fit(const std::string& input, const std::string& model_key,
            double level, const std::string& out) {
  cccov::Dataset data = cccov::read_dataset_file(input);
  cccov::MeanModelSpec spec = cccov::spec_from_key(model_key, data.p());
  cccov::FitResult fit = cccov::fit_complete_case(data, spec);
  fit.ci = cccov::wald_ci(fit, level);
  auto names = cccov::param_names(spec);
  std::cout << cccov::format_fit_report(fit, names, level);
  if (!out.empty()) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw cccov::ArgumentError("cannot write '" + out + "'");
    cccov::write_fit_csv(os, fit, names);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int run_generate(const std::string& mechanism, const std::string& model_key,
                 int n, double rate, std::uint64_t seed,
                 const std::string& out) {
  cccov::SimSetting setting;
  setting.mechanism = cccov::mechanism_from_string(mechanism);
  setting.n = n;
  setting.rate = rate;
  setting.model = cccov::spec_from_key(model_key, 1);
  setting.beta_true = cccov::default_beta_true(model_key);
  setting.sigma2 = cccov::default_error_variance(model_key);
  setting.seed = seed;
  cccov::Dataset data = cccov::generate(setting);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw cccov::ArgumentError("cannot write '" + out + "'");
  cccov::write_dataset_csv(os, data);
  std::cout << "wrote " << out << ": " << data.n() << " rows, "
            << data.n() - data.n_complete() << " censored\n";
  return 0;
}

int run_dag_check(const std::string& dag_path, const std::string& y,
                  const std::string& x, const std::string& c,
                  const std::string& delta, const std::vector<std::string>& z,
                  const std::string& which) {
  std::ifstream in(dag_path);
  if (!in) throw cccov::ArgumentError("cannot open '" + dag_path + "'");
  cccov::Dag dag = cccov::Dag::parse(in);

  std::vector<cccov::CensoringMechanism> targets;
  if (which == "all")
    targets = {cccov::CensoringMechanism::C3, cccov::CensoringMechanism::C4,
               cccov::CensoringMechanism::C5};
  else if (which == "C3")
    targets = {cccov::CensoringMechanism::C3};
  else if (which == "C4")
    targets = {cccov::CensoringMechanism::C4};
  else if (which == "C5")
    targets = {cccov::CensoringMechanism::C5};
  else
    throw cccov::ArgumentError("--mechanism must be C3, C4, C5 or all");

  for (auto target : targets) {
    cccov::MechanismQuery q;
    q.target = target;
    q.y = y;
    q.x = x;
    q.c = c;
    if (!delta.empty()) q.delta = delta;
    q.z = z;
    cccov::MechanismVerdict v = cccov::check_mechanism_verdict(dag, q);
    std::cout << cccov::censoring_mechanism_name(target) << ": "
              << (v.holds ? "holds" : "fails");
    if (!v.holds && !v.witness.empty()) {
      std::cout << "  (unblocked path: ";
      for (std::size_t i = 0; i < v.witness.size(); ++i) {
        if (i) std::cout << " - ";
        std::cout << v.witness[i];
      }
      std::cout << ")";
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression with a right-censored covariate: complete-case "
               "estimation, simulation, and censoring-mechanism checks"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand(
      "simulate", "Run Monte Carlo replications over a settings grid");
  SimulateArgs sim_args;
  sim->add_option("--config", sim_args.config_path, "JSON config file");
  sim->add_option("--model", sim_args.model,
                  "linear | linear_no_intercept | logistic5");
  sim->add_option("--mechanism", sim_args.mechanism,
                  "mechanism tag or 'all'");
  sim->add_option("--n", sim_args.ns, "sample size (repeatable)");
  sim->add_option("--rate", sim_args.rates, "censoring rate (repeatable)");
  sim->add_option("--reps", sim_args.reps, "replications per cell")
      ->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_args.seed, "master seed");
  sim->add_option("--workers", sim_args.workers, "parallel workers")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_args.out, "output CSV path");
  sim->add_flag("--allow-failures", sim_args.allow_failures,
                "exit 0 even when replications failed to converge");

  // fit
  auto* fit = app.add_subcommand(
      "fit", "Complete-case fit of a dataset CSV");
  std::string fit_input, fit_model = "linear", fit_out;
  double fit_level = 0.95;
  fit->add_option("--input", fit_input, "dataset CSV")->required();
  fit->add_option("--model", fit_model,
                  "linear | linear_no_intercept | logistic5");
  fit->add_option("--level", fit_level, "Wald interval level");
  fit->add_option("--out", fit_out, "write fit CSV here");

  // generate
  auto* gen = app.add_subcommand(
      "generate", "Draw one synthetic dataset and write it as CSV");
  std::string gen_mechanism = "IndependenceHolds", gen_model = "linear",
              gen_out;
  int gen_n = 400;
  double gen_rate = 0.25;
  std::uint64_t gen_seed = 1;
  gen->add_option("--mechanism", gen_mechanism, "mechanism tag");
  gen->add_option("--model", gen_model,
                  "linear | linear_no_intercept | logistic5");
  gen->add_option("--n", gen_n, "sample size")->check(CLI::PositiveNumber);
  gen->add_option("--rate", gen_rate, "censoring rate");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // dag-check
  auto* dagc = app.add_subcommand(
      "dag-check", "Decide censoring-mechanism independencies on a DAG");
  std::string dag_path, dag_y, dag_x, dag_c, dag_delta, dag_which = "all";
  std::vector<std::string> dag_z;
  dagc->add_option("--dag", dag_path, "edge-list file (FROM -> TO per line)")
      ->required();
  dagc->add_option("--y", dag_y, "outcome node")->required();
  dagc->add_option("--x", dag_x, "censored covariate node")->required();
  dagc->add_option("--c", dag_c, "censoring value node")->required();
  dagc->add_option("--delta", dag_delta, "censoring indicator node");
  dagc->add_option("--z", dag_z, "covariate node (repeatable)");
  dagc->add_option("--mechanism", dag_which, "C3 | C4 | C5 | all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(*sim, sim_args);
    if (fit->parsed()) return run_fit(fit_input, fit_model, fit_level, fit_out);
    if (gen->parsed())
      return run_generate(gen_mechanism, gen_model, gen_n, gen_rate, gen_seed,
                          gen_out);
    if (dagc->parsed())
      return run_dag_check(dag_path, dag_y, dag_x, dag_c, dag_delta, dag_z,
                           dag_which);
  } catch (const cccov::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
