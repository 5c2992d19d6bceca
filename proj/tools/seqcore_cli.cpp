// seqcore: data generators, the benchmark harness and diagnostics.
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "seqcore/coreset.hpp"
#include "seqcore/csv.hpp"
#include "seqcore/datagen.hpp"
#include "seqcore/diagnostics.hpp"
#include "seqcore/errors.hpp"
#include "seqcore/experiment.hpp"
#include "seqcore/parallel.hpp"
#include "seqcore/sequential.hpp"

namespace {

using nlohmann::json;
using namespace seqcore;

struct ModelOpts {
  ModelSpec spec;
  std::string data;
  bool header = false;
};

void add_model_options(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--data", o.data, "CSV file (features first, response last)")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--header", o.header, "Skip the first CSV row");
  cmd->add_option("--model", o.spec.type, "ridge | lasso | logistic | gmm")->capture_default_str();
  cmd->add_option("--lambda", o.spec.lambda, "Regularization weight")->capture_default_str();
  cmd->add_option("--p", o.spec.p, "Norm of the lasso penalty")->capture_default_str();
  cmd->add_option("--k", o.spec.k, "Mixture components")->capture_default_str();
  cmd->add_option("--eig-floor", o.spec.eig_floor, "Precision eigenvalue clamp")->capture_default_str();
}

void emit(const json& j, const std::string& output) {
  if (output.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(output);
  out << j.dump(2) << "\n";
  if (!out) throw IngestionError("failed writing '" + output + "'");
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Hypothesis pilot_anchor(const Dataset& data, const LossModel& model, Index size, std::uint64_t seed) {
  const Hypothesis start = initial_hypothesis(model, data, derive_seed(seed, 1));
  const Coreset sub = uniform_baseline(data, std::min(size, data.n()), derive_seed(seed, 2));
  return solve_on_coreset(data, model, sub, start, HostConfig{}).beta;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local coreset construction and sequential ERM solving"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (default: $SEQCORE_THREADS or 1)");
  app.add_option("--output", output, "Output path (default: stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV");
  gen->require_subcommand(1);
  Index n = 1000000, d = 50, k = 3;
  double coef_lo = -5.0, coef_hi = 5.0, noise_var = 4.0, separation = 3.0;
  bool header = false;
  std::string truth_path;
  auto* gen_lin = gen->add_subcommand("linear", "y = <h, x> + Gaussian noise");
  gen_lin->add_option("--n", n)->capture_default_str();
  gen_lin->add_option("--d", d)->capture_default_str();
  gen_lin->add_option("--coef-lo", coef_lo)->capture_default_str();
  gen_lin->add_option("--coef-hi", coef_hi)->capture_default_str();
  gen_lin->add_option("--noise-var", noise_var)->capture_default_str();
  gen_lin->add_option("--truth", truth_path, "Also write h as one CSV row");
  gen_lin->add_flag("--header", header);
  auto* gen_gmm_cmd = gen->add_subcommand("gmm", "Isotropic Gaussian blobs; the response column holds the label");
  Index gmm_n = 100000, dim = 5;
  gen_gmm_cmd->add_option("--n", gmm_n)->capture_default_str();
  gen_gmm_cmd->add_option("--dim", dim)->capture_default_str();
  gen_gmm_cmd->add_option("--k", k)->capture_default_str();
  gen_gmm_cmd->add_option("--separation", separation)->capture_default_str();
  gen_gmm_cmd->add_flag("--header", header);

  // bench
  auto* bench = app.add_subcommand("bench", "Run an experiment spec and write JSON-lines results");
  std::string spec_path;
  bench->add_option("spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);

  // solve
  auto* solve = app.add_subcommand("solve", "Run one method and print the result as JSON");
  ModelOpts solve_opts;
  add_model_options(solve, solve_opts);
  std::string method = "SeqCore";
  Index budget = 1000;
  double R = 1.0, sigma = 0.05;
  int max_segments = 200;
  solve->add_option("--method", method, "Original | UniSamp | SeqCore | OneShot")->capture_default_str();
  solve->add_option("--budget", budget)->capture_default_str();
  solve->add_option("--R", R)->capture_default_str();
  solve->add_option("--sigma", sigma)->capture_default_str();
  solve->add_option("--max-segments", max_segments)->capture_default_str();

  // audit
  auto* audit = app.add_subcommand("audit", "Build a local coreset at a pilot anchor and audit it");
  ModelOpts audit_opts;
  add_model_options(audit, audit_opts);
  std::string mode = "theoretical";
  double eps = 0.25, radius_scale = 0.5, sigma_grad = 0.0;
  Index probes = 100, pilot_size = 500;
  audit->add_option("--mode", mode, "theoretical | budget")->capture_default_str();
  audit->add_option("--budget", budget)->capture_default_str();
  audit->add_option("--eps", eps)->capture_default_str();
  audit->add_option("--radius-scale", radius_scale, "R as a fraction of the anchor norm")->capture_default_str();
  audit->add_option("--probes", probes)->capture_default_str();
  audit->add_option("--pilot-size", pilot_size)->capture_default_str();
  audit->add_option("--sigma-grad", sigma_grad, "Gradient tolerance (0 skips the gradient audit)");

  // check
  auto* check = app.add_subcommand("check", "Run the partition and weight invariants on a dataset");
  ModelOpts check_opts;
  add_model_options(check, check_opts);
  check->add_option("--budget", budget)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) set_thread_count(threads);

    if (gen_lin->parsed()) {
      const LinearSample s = gen_linear(n, d, coef_lo, coef_hi, noise_var, seed);
      if (output.empty()) throw ParameterError("gen needs --output");
      write_csv(output, s.data, header);
      if (!truth_path.empty()) {
        std::FILE* f = std::fopen(truth_path.c_str(), "w");
        if (f == nullptr) throw IngestionError("cannot write '" + truth_path + "'");
        for (Index l = 0; l < s.truth.size(); ++l) std::fprintf(f, l + 1 < s.truth.size() ? "%.17g," : "%.17g\n", s.truth[l]);
        std::fclose(f);
      }
      return 0;
    }
    if (gen_gmm_cmd->parsed()) {
      if (output.empty()) throw ParameterError("gen needs --output");
      write_csv(output, gen_gmm(gmm_n, dim, k, separation, seed).data, header);
      return 0;
    }
    if (bench->parsed()) {
      ExperimentSpec spec = ExperimentSpec::from_file(spec_path);
      if (!output.empty()) spec.output = output;
      if (app.get_option("--seed")->count() > 0) spec.seed = seed;
      const auto records = run_experiment(spec);
      if (spec.output.empty()) {
        for (const auto& r : records) std::cout << r.to_json().dump() << "\n";
      }
      int failures = 0;
      for (const auto& r : records) failures += r.error ? 1 : 0;
      if (failures > 0) std::cerr << failures << " method run(s) failed; see the error fields\n";
      return 0;
    }
    if (solve->parsed()) {
      const Dataset data = load_csv(solve_opts.data, solve_opts.header);
      const auto model = make_model(solve_opts.spec, data.d());
      const Hypothesis start = initial_hypothesis(*model, data, derive_seed(seed, 1));
      SequentialConfig config;
      config.R = R;
      config.sigma = sigma;
      config.budget = budget;
      config.max_segments = max_segments;
      config.seed = seed;
      SolveResult res;
      if (method == "Original") {
        res = solve_on_coreset(data, *model, Coreset::full(data.n()), start, config.host);
      } else if (method == "UniSamp") {
        res = solve_on_coreset(data, *model, uniform_baseline(data, budget, seed), start, config.host);
      } else if (method == "SeqCore") {
        res = run_sequential(data, *model, start, config);
      } else if (method == "OneShot") {
        res = one_shot_solve(data, *model, start, config);
      } else {
        throw ParameterError("unknown method '" + method + "'");
      }
      json j;
      j["beta"] = vector_json(res.beta);
      j["anchors"] = res.anchors.size();
      json segs = json::array();
      for (const auto& s : res.segments) {
        segs.push_back({{"coreset_size", s.coreset_size}, {"host_iterations", s.host_iterations}, {"anchor_risk", s.anchor_risk}});
      }
      j["segments"] = segs;
      j["full_loss"] = res.full_loss;
      j["wall_time_s"] = res.wall_time_s;
      j["terminated_by"] = std::string(to_string(res.terminated_by));
      j["total_iterations"] = res.total_iterations;
      emit(j, output);
      return 0;
    }
    if (audit->parsed()) {
      const Dataset data = load_csv(audit_opts.data, audit_opts.header);
      const auto model = make_model(audit_opts.spec, data.d());
      const Hypothesis anchor = pilot_anchor(data, *model, pilot_size, seed);
      CoresetRequest request;
      request.mode = mode == "budget" ? SizeMode::budget : SizeMode::theoretical;
      if (mode != "budget" && mode != "theoretical") throw ParameterError("unknown mode '" + mode + "'");
      request.budget = budget;
      request.eps = eps;
      request.R = radius_scale * anchor.norm();
      const LocalCoreset local = construct_local_coreset(data, *model, anchor, request, derive_seed(seed, 3));
      const AuditReport loss = audit_coreset_loss(data, *model, local.coreset, anchor, request.R, eps, probes, derive_seed(seed, 4));
      json j;
      j["R"] = request.R;
      j["coreset_size"] = local.coreset.size();
      j["samples_tested"] = loss.samples_tested;
      j["max_rel_loss_dev"] = loss.max_rel_loss_dev;
      j["loss_pass"] = loss.pass;
      if (sigma_grad > 0.0) {
        const AuditReport grad = audit_gradient(data, *model, local.coreset, anchor, request.R, sigma_grad, probes, derive_seed(seed, 5));
        j["max_abs_grad_dev"] = grad.max_abs_grad_dev;
        j["grad_pass"] = grad.pass;
      }
      emit(j, output);
      return loss.pass ? 0 : 2;
    }
    if (check->parsed()) {
      const Dataset data = load_csv(check_opts.data, check_opts.header);
      const auto model = make_model(check_opts.spec, data.d());
      model->check_dataset(data);
      json j;
      bool ok = true;
      const Hypothesis anchor = pilot_anchor(data, *model, std::min<Index>(data.n(), 500), seed);
      const LayerPartition part = partition_layers(data, *model, anchor);
      j["partition_ok"] = check_partition(part);
      ok = ok && j["partition_ok"].get<bool>();
      CoresetRequest request;
      request.budget = std::min(budget, data.n());
      request.R = 0.5 * anchor.norm();
      const Coreset c = construct_local_coreset(data, *model, anchor, request, derive_seed(seed, 3)).coreset;
      const double n_d = static_cast<double>(data.n());
      j["weights_ok"] = std::abs(c.total_weight() - n_d) <= 1e-9 * n_d;
      ok = ok && j["weights_ok"].get<bool>();
      j["layer_sizes"] = part.layer_sizes();
      emit(j, output);
      return ok ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "seqcore: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
