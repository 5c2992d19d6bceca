#include "seqcore/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "seqcore/coreset.hpp"
#include "seqcore/csv.hpp"
#include "seqcore/datagen.hpp"
#include "seqcore/diagnostics.hpp"
#include "seqcore/errors.hpp"
#include "seqcore/models.hpp"
#include "seqcore/parallel.hpp"
#include "seqcore/sequential.hpp"

namespace seqcore {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kStartSalt = 0x5354415254;  // "START"
constexpr std::uint64_t kMethodSalt = 0x100;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

template <typename T>
std::optional<T> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

HostConfig host_from_json(const json& j, std::optional<HostKind>& kind) {
  HostConfig host;
  host.step_size = read_optional<double>(j, "step_size");
  host.initial_step = get_or(j, "initial_step", host.initial_step);
  host.armijo_c = get_or(j, "armijo_c", host.armijo_c);
  host.max_iters = get_or(j, "max_iters", host.max_iters);
  host.grad_tol = get_or(j, "grad_tol", host.grad_tol);
  host.rel_loss_tol = get_or(j, "rel_loss_tol", host.rel_loss_tol);
  host.max_step_length = read_optional<double>(j, "max_step_length");
  if (auto name = read_optional<std::string>(j, "kind")) kind = host_kind_from_string(*name);
  return host;
}

std::string format_radius(double R) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", R);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct TrialData {
  std::optional<Dataset> data;
  std::vector<int> labels;
};

TrialData trial_data(const ExperimentSpec& spec, std::uint64_t trial_seed, const std::optional<Dataset>& csv) {
  TrialData out;
  const DataSpec& d = spec.data;
  if (d.generator == "linear") {
    out.data = gen_linear(d.n, d.d, d.coef_lo, d.coef_hi, d.noise_var, trial_seed).data;
  } else if (d.generator == "gmm") {
    BlobSample blobs = gen_gmm(d.n, d.d, d.k, d.separation, trial_seed);
    out.labels = std::move(blobs.labels);
    out.data = std::move(blobs.data);
  } else {
    out.data = *csv;
  }
  if (spec.model.type == "gmm" && out.labels.empty()) {
    out.labels.reserve(static_cast<std::size_t>(out.data->n()));
    for (Index i = 0; i < out.data->n(); ++i) out.labels.push_back(static_cast<int>(std::lround(out.data->response(i))));
  }
  return out;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (trials < 1) throw ParameterError("trials must be >= 1");
  if (methods.empty()) throw ParameterError("no methods listed");
  if (model.type != "ridge" && model.type != "lasso" && model.type != "logistic" && model.type != "gmm") {
    throw ParameterError("unknown model type '" + model.type + "'");
  }
  if (data.generator.empty()) {
    if (data.csv.empty()) throw ParameterError("data needs a generator or a csv path");
    if (!std::filesystem::exists(data.csv)) throw IngestionError("data file '" + data.csv + "' does not exist");
  } else if (data.generator != "linear" && data.generator != "gmm") {
    throw ParameterError("unknown generator '" + data.generator + "'");
  }
  for (const auto& m : methods) {
    if (m.name != "Original" && m.name != "UniSamp" && m.name != "ImpSamp" && m.name != "SeqCore" &&
        m.name != "OneShot") {
      throw ParameterError("unknown method '" + m.name + "'");
    }
    if (m.name != "Original" && m.budget < 1) throw ParameterError(m.name + ": budget must be >= 1");
  }
  if (max_segments < 1) throw ParameterError("max_segments must be >= 1");
  host.validate();
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  ExperimentSpec spec;
  try {
    const json& m = j.at("model");
    spec.model.type = m.at("type").get<std::string>();
    spec.model.lambda = get_or(m, "lambda", spec.model.lambda);
    spec.model.p = get_or(m, "p", spec.model.p);
    spec.model.k = get_or(m, "k", spec.model.k);
    spec.model.eig_floor = get_or(m, "eig_floor", spec.model.eig_floor);

    const json& d = j.at("data");
    spec.data.generator = get_or<std::string>(d, "generator", "");
    spec.data.n = get_or(d, "n", spec.data.n);
    spec.data.d = get_or(d, "d", spec.data.d);
    spec.data.coef_lo = get_or(d, "coef_lo", spec.data.coef_lo);
    spec.data.coef_hi = get_or(d, "coef_hi", spec.data.coef_hi);
    spec.data.noise_var = get_or(d, "noise_var", spec.data.noise_var);
    spec.data.k = get_or(d, "k", spec.data.k);
    spec.data.separation = get_or(d, "separation", spec.data.separation);
    spec.data.csv = get_or<std::string>(d, "csv", "");
    spec.data.has_header = get_or(d, "has_header", spec.data.has_header);

    for (const json& e : j.at("methods")) {
      MethodSpec method;
      method.name = e.at("name").get<std::string>();
      method.budget = get_or(e, "budget", method.budget);
      method.R = get_or(e, "R", method.R);
      method.sigma = get_or(e, "sigma", method.sigma);
      method.mix = get_or(e, "mix", method.mix);
      spec.methods.push_back(method);
    }
    spec.trials = get_or(j, "trials", spec.trials);
    spec.seed = get_or(j, "seed", spec.seed);
    spec.output = get_or<std::string>(j, "output", "");
    spec.max_segments = get_or(j, "max_segments", spec.max_segments);
    if (j.contains("host")) spec.host = host_from_json(j.at("host"), spec.host_kind);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("experiment spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open spec '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IngestionError(std::string("spec is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

json ResultRecord::to_json() const {
  json j;
  j["method"] = method;
  j["coreset_size"] = coreset_size;
  j["trial"] = trial;
  j["seed"] = seed;
  put_optional(j, "full_loss", full_loss);
  put_optional(j, "error_beta", error_beta);
  put_optional(j, "purity", purity);
  j["wall_time_s"] = wall_time_s;
  put_optional(j, "normalized_runtime", normalized_runtime);
  put_optional(j, "segments", segments);
  put_optional(j, "R", R);
  put_optional(j, "error", error);
  return j;
}

ResultRecord ResultRecord::from_json(const json& j) {
  ResultRecord r;
  r.method = j.at("method").get<std::string>();
  r.coreset_size = j.at("coreset_size").get<Index>();
  r.trial = j.at("trial").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.full_loss = read_optional<double>(j, "full_loss");
  r.error_beta = read_optional<double>(j, "error_beta");
  r.purity = read_optional<double>(j, "purity");
  r.wall_time_s = j.at("wall_time_s").get<double>();
  r.normalized_runtime = read_optional<double>(j, "normalized_runtime");
  r.segments = read_optional<int>(j, "segments");
  r.R = read_optional<double>(j, "R");
  r.error = read_optional<std::string>(j, "error");
  return r;
}

std::unique_ptr<LossModel> make_model(const ModelSpec& spec, Index d) {
  if (spec.type == "ridge") return std::make_unique<RidgeModel>(spec.lambda);
  if (spec.type == "lasso") return std::make_unique<LassoModel>(spec.lambda, spec.p);
  if (spec.type == "logistic") return std::make_unique<LogisticModel>(spec.lambda);
  if (spec.type == "gmm") return std::make_unique<GmmModel>(spec.k, d, spec.eig_floor);
  throw ParameterError("unknown model type '" + spec.type + "'");
}

Hypothesis initial_hypothesis(const LossModel& model, const Dataset& data, std::uint64_t seed) {
  const auto* gmm = dynamic_cast<const GmmModel*>(&model);
  if (gmm == nullptr) return Hypothesis::Zero(model.hypothesis_dim(data.d()));

  const Index k = gmm->k();
  const Index n = data.n();
  if (n < k) throw ParameterError("fewer points than mixture components");
  std::mt19937_64 rng(seed);
  const int local_trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));

  std::vector<Index> centers{std::uniform_int_distribution<Index>(0, n - 1)(rng)};
  Vector closest(n);
  for (Index i = 0; i < n; ++i) closest[i] = (data.point(i) - data.point(centers[0])).squaredNorm();
  while (static_cast<Index>(centers.size()) < k) {
    const double total = closest.sum();
    Index best = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    Vector best_closest;
    for (int t = 0; t < local_trials; ++t) {
      Index candidate = 0;
      if (total > 0.0) {
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        while (candidate < n - 1 && target >= closest[candidate]) target -= closest[candidate++];
      } else {
        candidate = std::uniform_int_distribution<Index>(0, n - 1)(rng);
      }
      Vector trial(n);
      for (Index i = 0; i < n; ++i) {
        trial[i] = std::min(closest[i], (data.point(i) - data.point(candidate)).squaredNorm());
      }
      const double potential = trial.sum();
      if (potential < best_potential) {
        best_potential = potential;
        best = candidate;
        best_closest = std::move(trial);
      }
    }
    centers.push_back(best);
    closest = std::move(best_closest);
  }

  GmmParams params;
  params.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
  for (Index c : centers) {
    params.means.push_back(data.point(c));
    params.precisions.push_back(Matrix::Identity(data.d(), data.d()));
  }
  return params.pack();
}

std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::optional<Dataset> csv;
  if (spec.data.generator.empty()) csv = load_csv(spec.data.csv, spec.data.has_header);
  if (!spec.output.empty()) {
    std::ofstream truncate(spec.output, std::ios::trunc);
    if (!truncate) throw IngestionError("cannot write '" + spec.output + "'");
  }

  std::vector<ResultRecord> all;
  for (int trial = 0; trial < spec.trials; ++trial) {
    const std::uint64_t trial_seed = derive_seed(spec.seed, static_cast<std::uint64_t>(trial));
    const TrialData td = trial_data(spec, trial_seed, csv);
    const Dataset& data = *td.data;
    const auto model = make_model(spec.model, data.d());
    const bool clustering = spec.model.type == "gmm";
    const Hypothesis start = initial_hypothesis(*model, data, derive_seed(trial_seed, kStartSalt));

    auto score = [&](ResultRecord& rec, const SolveResult& res, const Hypothesis& reference) {
      rec.full_loss = res.full_loss;
      if (clustering) {
        rec.purity = purity(gmm_assign(static_cast<const GmmModel&>(*model), res.beta, data), td.labels);
      } else {
        rec.error_beta = error_beta(res.beta, reference);
      }
    };

    // Original always runs: it defines beta* and the runtime reference.
    const auto t_orig = Clock::now();
    const SolveResult original = solve_on_coreset(data, *model, Coreset::full(data.n()), start, spec.host, spec.host_kind);
    const double original_time = seconds_since(t_orig);

    std::vector<ResultRecord> trial_records;
    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      const MethodSpec& method = spec.methods[m];
      ResultRecord rec;
      rec.method = method.name;
      rec.trial = trial;
      rec.seed = derive_seed(trial_seed, kMethodSalt + m);
      rec.coreset_size = method.name == "Original" ? data.n() : method.budget;
      try {
        if (method.name == "Original") {
          rec.wall_time_s = original_time;
          score(rec, original, original.beta);
        } else {
          const auto t0 = Clock::now();
          SolveResult res;
          if (method.name == "UniSamp") {
            res = solve_on_coreset(data, *model, uniform_baseline(data, method.budget, rec.seed), start, spec.host,
                                   spec.host_kind);
          } else if (method.name == "ImpSamp") {
            const PilotFit pilot = [&](const Coreset& c) {
              return solve_on_coreset(data, *model, c, start, spec.host, spec.host_kind).beta;
            };
            const Coreset c = importance_baseline(data, *model, method.budget, rec.seed, pilot, method.mix);
            res = solve_on_coreset(data, *model, c, start, spec.host, spec.host_kind);
          } else {
            SequentialConfig config;
            config.R = method.R;
            config.sigma = method.sigma;
            config.budget = method.budget;
            config.max_segments = spec.max_segments;
            config.host = spec.host;
            config.host_kind = spec.host_kind;
            config.seed = rec.seed;
            if (method.name == "SeqCore") {
              rec.method = "SeqCore-" + format_radius(method.R);
              rec.R = method.R;
              res = run_sequential(data, *model, start, config);
              rec.segments = static_cast<int>(res.segments.size());
            } else {
              res = one_shot_solve(data, *model, start, config);
            }
          }
          rec.wall_time_s = seconds_since(t0);
          score(rec, res, original.beta);
        }
        rec.normalized_runtime = original_time > 0.0 ? rec.wall_time_s / original_time : 1.0;
        if (method.name == "Original") rec.normalized_runtime = 1.0;
      } catch (const Error& e) {
        rec.error = e.what();
        rec.full_loss.reset();
        rec.error_beta.reset();
        rec.purity.reset();
      }
      trial_records.push_back(std::move(rec));
    }

    if (!spec.output.empty()) {
      std::string block;
      for (const auto& r : trial_records) block += r.to_json().dump() + "\n";
      std::ofstream out(spec.output, std::ios::app);
      out << block;
      if (!out) throw IngestionError("failed writing '" + spec.output + "'");
    }
    all.insert(all.end(), trial_records.begin(), trial_records.end());
  }
  return all;
}

}  // namespace seqcore
