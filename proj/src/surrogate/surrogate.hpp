#ifndef OWC_SURROGATE_SURROGATE_HPP
#define OWC_SURROGATE_SURROGATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dataset/dataset.hpp"

namespace owc::surrogate {

struct LayerSpec {
  enum class Kind { Dense, Conv1d };
  Kind kind = Kind::Dense;
  int width = 1;   // neurons (dense) or output channels (conv)
  int kernel = 1;  // conv only, odd
};

// "conv:16:3,conv:16:3,dense:64" -> hidden layer specs
std::vector<LayerSpec> parse_arch(const std::string& spec);
std::string arch_to_string(const std::vector<LayerSpec>& arch);

// One layer's parameters. Dense: weight (out x in_flat). Conv1d: kernels[c]
// is (in_ch x kernel) for output channel c; activations are ReLU on hidden
// layers and identity on the output layer.
struct Layer {
  LayerSpec spec;
  int in_channels = 1;
  int in_length = 0;
  Eigen::MatrixXd weight;                 // dense
  std::vector<Eigen::MatrixXd> kernels;   // conv
  Eigen::VectorXd bias;
  bool output_layer = false;

  int out_channels() const { return spec.kind == LayerSpec::Kind::Conv1d ? spec.width : 1; }
  int out_length() const { return spec.kind == LayerSpec::Kind::Conv1d ? in_length : spec.width; }
};

struct SurrogateModel {
  std::vector<LayerSpec> arch;  // hidden layers
  std::vector<Layer> layers;    // hidden + final dense output layer
  int input_dim = 0;
  int output_dim = 0;

  // dataset layout + normalization, fixed at training time
  int num_users = 0;
  int num_aps = 0;
  std::string output_layout = "matrix";  // "matrix" (K*L) or "totals" (K+L)
  Eigen::VectorXd feat_min, feat_max, label_min, label_max;

  std::vector<std::pair<double, double>> history;  // (train_mse, val_mse)
};

SurrogateModel init_model(const std::vector<LayerSpec>& arch, int input_dim,
                          int output_dim, std::uint64_t seed);

// Same-length zero-padded 1-D correlation with a centred kernel, plus bias.
Eigen::VectorXd conv_transform(const Eigen::VectorXd& input,
                               const Eigen::VectorXd& kernel, double bias);

struct ForwardPass {
  // per layer: input (channels x length) and post-activation output
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
  Eigen::VectorXd output;
};

ForwardPass forward(const SurrogateModel& model, const Eigen::VectorXd& input);

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

struct Gradients {
  std::vector<Eigen::MatrixXd> dense_w;
  std::vector<std::vector<Eigen::MatrixXd>> conv_w;
  std::vector<Eigen::VectorXd> bias;
};

Gradients zero_gradients(const SurrogateModel& model);

// Exact batch-MSE gradients via backprop; accumulates into `grads` and
// returns the batch loss.
double compute_gradients(const SurrogateModel& model,
                         const std::vector<Eigen::VectorXd>& inputs,
                         const std::vector<Eigen::VectorXd>& targets,
                         Gradients& grads);

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  std::uint64_t seed = 1;
  std::string output_layout = "matrix";
};

// Mini-batch SGD with momentum; records per-epoch train/val MSE and keeps
// the best-validation weights.
SurrogateModel train(SurrogateModel model, const dataset::Dataset& train_set,
                     const dataset::Dataset& val_set, const TrainConfig& cfg);

// Targets for the configured output layout ("matrix": flattened allocation,
// "totals": per-user totals followed by per-AP utilizations).
Eigen::VectorXd layout_targets(const Eigen::VectorXd& label_matrix_flat,
                               int num_users, int num_aps,
                               const std::string& layout);

// Forward pass on a scenario, de-normalization, feasibility repair and an
// optional warm-started dual refinement.
alloc::AllocationSolution predict_and_repair(
    const SurrogateModel& model, const dataset::Scenario& scenario,
    long refine_iters = 5, const alloc::DualSolverConfig& solver_cfg = {});

void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);

}  // namespace owc::surrogate

#endif
