#ifndef OWC_DATASET_DATASET_HPP
#define OWC_DATASET_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "allocator/allocator.hpp"
#include "channel/channel.hpp"

namespace owc::dataset {

enum class Placement {
  UniformPlane,  // anywhere on the receiving plane
  Cell,          // near a randomly chosen AP axis, jittered
};

// Everything needed to draw a random scenario: room/device setup, user
// placement policy and requirement sampling ranges.
struct ScenarioGenConfig {
  channel::Vec3 room_dims{5.0, 5.0, 3.0};
  int grid_nx = 4;
  int grid_ny = 4;
  double plane_gap = 2.15;
  int num_users = 10;
  int num_photodiodes = 16;
  double detector_area = 15e-6;
  double fov_deg = 45.0;
  double mode_tilt_deg = 25.0;
  channel::VcselParams vcsel;
  double temperature_k = 300.0;

  Placement placement = Placement::Cell;
  double cell_jitter = 0.01;  // m, radius of the in-footprint jitter disk
  std::vector<double> w0_choices;  // beam waists sampled per scenario (m)

  double e_max_lo = 1.0, e_max_hi = 5.0;
  double e_min_lo = 0.1, e_min_frac_hi = 0.5;  // e_min in [lo, frac*e_max]
  double xi_lo = 1.0, xi_hi = 1.0;
  double cap_lo_scale = 1.0, cap_hi_scale = 3.0;  // rho ~ U * K/L

  double stream_power = -1.0;  // <= 0 -> calibrated (median SNR ~ 20 dB)
  double snr_target = 100.0;
  int max_retries = 100;
};

struct Scenario {
  std::uint64_t seed = 0;
  double beam_waist = 0.0;                 // the W0 drawn for this scenario
  double stream_power = 0.0;
  std::vector<channel::Vec3> user_positions;
  alloc::AllocationProblem problem;        // rates, bounds, capacities, weights
};

// Median-SNR stream-power calibration over seeded reference drops.
double calibrate_stream_power(const ScenarioGenConfig& cfg,
                              std::uint64_t seed);

// Topology implied by the generator config (no users placed yet).
channel::NetworkTopology make_topology(const ScenarioGenConfig& cfg);

// Per-link rate matrix for fixed user positions at a given beam waist.
Eigen::MatrixXd rate_matrix(const ScenarioGenConfig& cfg,
                            const std::vector<channel::Vec3>& positions,
                            double beam_waist, double stream_power);

Scenario sample_scenario(std::uint64_t seed, const ScenarioGenConfig& cfg);

struct Dataset {
  int num_users = 0;
  int num_aps = 0;
  std::uint64_t seed = 0;
  int dropped = 0;
  std::vector<Eigen::VectorXd> features;  // raw (unnormalized)
  std::vector<Eigen::VectorXd> labels;    // raw allocation matrices, flattened
  Eigen::VectorXd feat_min, feat_max;
  Eigen::VectorXd label_min, label_max;

  int size() const { return static_cast<int>(features.size()); }
  int feature_dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
  int label_dim() const { return labels.empty() ? 0 : static_cast<int>(labels[0].size()); }

  Eigen::VectorXd normalize_features(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd normalize_labels(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd denormalize_labels(const Eigen::VectorXd& normed) const;
  Eigen::VectorXd denormalize_features(const Eigen::VectorXd& normed) const;
};

// feature layout: [e_min(K), e_max(K), xi(K), rho(L), rates(K*L row-major)]
Eigen::VectorXd feature_vector(const Scenario& scenario);

Dataset generate_dataset(int count, const ScenarioGenConfig& gen_cfg,
                         const alloc::DualSolverConfig& solver_cfg,
                         std::uint64_t seed);

struct SplitResult {
  Dataset train;
  Dataset validation;
};

SplitResult split_dataset(const Dataset& ds, double train_fraction,
                          std::uint64_t seed);

void write_dataset(const Dataset& ds, const std::string& path);
Dataset read_dataset(const std::string& path);

// Structured-text problem/scenario files used by the solve and predict CLI.
void write_problem(const alloc::AllocationProblem& problem,
                   const std::string& path);
alloc::AllocationProblem read_problem(const std::string& path);

}  // namespace owc::dataset

#endif
