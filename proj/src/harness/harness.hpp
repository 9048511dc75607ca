#ifndef OWC_HARNESS_HARNESS_HPP
#define OWC_HARNESS_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dataset/dataset.hpp"
#include "surrogate/surrogate.hpp"
#include "util/ini.hpp"

namespace owc::harness {

struct ExperimentConfig {
  dataset::ScenarioGenConfig scenario;
  alloc::DualSolverConfig solver;
  surrogate::TrainConfig training;
  std::string arch = "conv:8:3,dense:128";

  std::vector<double> beam_waists;       // m, sweep points
  std::vector<long> dataset_sizes;       // for the training curves
  std::vector<std::uint64_t> seeds;      // training-curve seeds
  int cdf_drops = 100;
  long refine_iters = 5;
  long surrogate_train_n = 3000;  // training-set size for sweep/CDF models
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  static ExperimentConfig from_ini(const Ini& ini);
};

// Sum of rate-weighted allocated resources, the quantity plotted in the
// sweep and CDF experiments.
double sum_rate(const Eigen::MatrixXd& e, const alloc::AllocationProblem& p);

// Trains the surrogate on freshly generated data for each (seed, N) pair and
// writes epoch,train_mse,val_mse,dataset_size,seed rows.
std::string run_training_curves(const ExperimentConfig& cfg);

// Rebuilds rates for each beam waist and writes w0_um,method,sum_rate rows
// for dual, surrogate and uniform.
std::string run_beamwaist_sweep(const ExperimentConfig& cfg);

// Random user drops; writes method,drop,sum_rate rows.
std::string run_cdf_experiment(const ExperimentConfig& cfg);

// SVG plots for each known CSV found under csv_dir.
std::vector<std::string> emit_report(const std::string& csv_dir,
                                     const std::string& out_dir);

// Trains a surrogate for the experiment configuration (used by the sweep and
// CDF runs, and exposed for the CLI).
surrogate::SurrogateModel train_experiment_model(const ExperimentConfig& cfg,
                                                 long dataset_size,
                                                 std::uint64_t seed);

}  // namespace owc::harness

#endif
