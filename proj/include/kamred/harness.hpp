#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kamred/error.hpp"
#include "kamred/kam.hpp"
#include "kamred/potential.hpp"
#include "kamred/spectrum.hpp"

namespace kamred {

inline constexpr int kSchemaVersion = 1;

struct Threshold {
  double value = 0.0;
  int branch = 0;  // 1: ell - 2/3, 2: (sqrt(4 ell^2 - 2 ell + 1) - 1)/2
};

/// Upper bound on mu: min(ell - 2/3, (sqrt(4 ell^2 - 2 ell + 1) - 1)/2).
/// The first branch is the smaller one exactly for ell < 4/3. Domain error for ell <= 1.
Threshold threshold(double ell);

struct MeasureConfig {
  bool enabled = false;
  double gamma = 0.05;
  int K_max = 30;
  int per_axis = 2001;
  bool select_omega = false;  // run KAM at the accepted grid point nearest to omega
};

struct DynamicsConfig {
  bool enabled = false;
  std::vector<int> x0_modes{4};  // x0 = normalized sum of these basis vectors (1-based)
  double periods = 1000.0;       // T in units of 2 pi / omega_1
  double dt = 0.02;
  int samples = 1000;
  std::vector<double> sobolev_s{1.0, 2.0};
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  PotentialSpec potential = PotentialSpec::monomial(2.0);
  bool auto_grid = true;   // grid sized from the J-th Weyl energy
  Grid grid;
  int N = 40;
  int J = 50;
  int K_phi = 8;
  int n_freq = 1;
  PerturbationSpec perturbation = default_perturbation(1.0, 1e-3, 1);
  IterationSchedule schedule;  // beta and iota are taken from ell and mu
  std::vector<double> omega{0.6180339887498949};
  MeasureConfig measure;
  DynamicsConfig dynamics;
  std::uint64_t seed = 0;  // recorded only; the pipeline draws no random numbers
  std::string output_dir;  // empty: nothing written to disk

  /// Throws Config/Validation on anything the pipeline would reject later.
  void validate() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical form: sorted keys, two-space indent, trailing newline.
std::string serialize_config(const ExperimentConfig& c);

/// Error raised inside one pipeline stage; the stage name is kept separately.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& inner, nlohmann::json details = nullptr)
      : Error(inner.code(), stage + ": " + inner.what()), stage_(std::move(stage)), details_(std::move(details)) {}
  const std::string& stage() const noexcept { return stage_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  std::string stage_;
  nlohmann::json details_;
};

struct ExperimentReport {
  nlohmann::json json;
  std::string eigenvalues_csv;
  std::string levels_csv;
  std::string measure_csv;  // empty unless measure is enabled
  std::string flow_csv;     // empty unless dynamics is enabled
};

/// potential -> spectrum -> P assembly -> KAM -> (measure) -> (dynamics).
/// Writes report.json and the CSVs into output_dir when it is set.
ExperimentReport run(const ExperimentConfig& config);

std::string dump_report(const nlohmann::json& report);

/// {"error": code, "message": ..., ["stage": ..., "details": ...]}
nlohmann::json error_json(const std::exception& e);

void write_levels_csv(std::ostream& os, const IterationResult& r);
nlohmann::json iteration_json(const IterationResult& r, double residual);

}  // namespace kamred
