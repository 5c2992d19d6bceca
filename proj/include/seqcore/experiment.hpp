#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqcore/core.hpp"
#include "seqcore/optimizers.hpp"

namespace seqcore {

struct ModelSpec {
  std::string type = "ridge";  // ridge | lasso | logistic | gmm
  double lambda = 0.01;
  double p = 1.0;          // lasso norm
  Index k = 3;             // gmm components
  double eig_floor = 0.01;
};

struct DataSpec {
  std::string generator;  // linear | gmm; empty when reading csv
  Index n = 1000;
  Index d = 10;
  double coef_lo = -5.0;
  double coef_hi = 5.0;
  double noise_var = 4.0;
  Index k = 3;
  double separation = 3.0;
  std::string csv;
  bool has_header = false;
};

struct MethodSpec {
  std::string name;  // Original | UniSamp | ImpSamp | SeqCore | OneShot
  Index budget = 0;
  double R = 1.0;
  double sigma = 0.05;
  double mix = 0.5;  // ImpSamp uniform mixing
};

struct ExperimentSpec {
  ModelSpec model;
  DataSpec data;
  std::vector<MethodSpec> methods;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string output;  // JSON-lines path; empty writes nothing
  HostConfig host;
  std::optional<HostKind> host_kind;
  int max_segments = 200;

  // Throws ParameterError / IngestionError on malformed input.
  static ExperimentSpec from_json(const nlohmann::json& j);
  static ExperimentSpec from_file(const std::string& path);
  void validate() const;
};

struct ResultRecord {
  std::string method;
  Index coreset_size = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> full_loss;
  std::optional<double> error_beta;
  std::optional<double> purity;
  double wall_time_s = 0.0;
  std::optional<double> normalized_runtime;
  std::optional<int> segments;
  std::optional<double> R;
  std::optional<std::string> error;

  nlohmann::json to_json() const;
  static ResultRecord from_json(const nlohmann::json& j);
  bool operator==(const ResultRecord&) const = default;
};

std::unique_ptr<LossModel> make_model(const ModelSpec& spec, Index d);

// Zero for regression models. For a mixture: greedy k-means++ centers, unit
// precisions and equal weights.
Hypothesis initial_hypothesis(const LossModel& model, const Dataset& data, std::uint64_t seed);

// Runs every method for every trial. Records of one trial are appended to
// spec.output together once the trial finishes.
std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec);

}  // namespace seqcore
