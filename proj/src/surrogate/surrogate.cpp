#include "surrogate/surrogate.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "util/rng.hpp"
#include "util/text.hpp"

namespace owc::surrogate {

std::vector<LayerSpec> parse_arch(const std::string& spec) {
  std::vector<LayerSpec> arch;
  for (const auto& part : split(spec, ',')) {
    auto fields = split(trim(part), ':');
    require(!fields.empty() && !fields[0].empty(), ErrorCode::InvalidParameter,
            "empty layer spec in '" + spec + "'");
    LayerSpec ls;
    if (fields[0] == "dense") {
      require(fields.size() == 2, ErrorCode::InvalidParameter,
              "dense layer spec is dense:<width>");
      ls.kind = LayerSpec::Kind::Dense;
      ls.width = static_cast<int>(parse_long(fields[1], "arch"));
    } else if (fields[0] == "conv") {
      require(fields.size() == 3, ErrorCode::InvalidParameter,
              "conv layer spec is conv:<channels>:<kernel>");
      ls.kind = LayerSpec::Kind::Conv1d;
      ls.width = static_cast<int>(parse_long(fields[1], "arch"));
      ls.kernel = static_cast<int>(parse_long(fields[2], "arch"));
    } else {
      fail(ErrorCode::InvalidParameter, "unknown layer kind '" + fields[0] + "'");
    }
    require(ls.width >= 1, ErrorCode::InvalidParameter, "layer width must be >= 1");
    require(ls.kind == LayerSpec::Kind::Dense ||
                (ls.kernel >= 1 && ls.kernel % 2 == 1),
            ErrorCode::InvalidParameter, "conv kernel width must be odd and >= 1");
    arch.push_back(ls);
  }
  return arch;
}

std::string arch_to_string(const std::vector<LayerSpec>& arch) {
  std::string out;
  for (const auto& ls : arch) {
    if (!out.empty()) out += ",";
    if (ls.kind == LayerSpec::Kind::Dense)
      out += "dense:" + std::to_string(ls.width);
    else
      out += "conv:" + std::to_string(ls.width) + ":" + std::to_string(ls.kernel);
  }
  return out;
}

namespace {

int fan_in(const Layer& layer) {
  if (layer.spec.kind == LayerSpec::Kind::Conv1d)
    return layer.in_channels * layer.spec.kernel;
  return layer.in_channels * layer.in_length;
}

void init_layer(Layer& layer, Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in(layer)));
  auto draw = [&]() { return rng.uniform(-scale, scale); };
  if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
    layer.kernels.assign(layer.spec.width,
                         Eigen::MatrixXd(layer.in_channels, layer.spec.kernel));
    for (auto& k : layer.kernels)
      for (int ci = 0; ci < k.rows(); ++ci)
        for (int j = 0; j < k.cols(); ++j) k(ci, j) = draw();
    layer.bias = Eigen::VectorXd::Zero(layer.spec.width);
  } else {
    layer.weight.resize(layer.spec.width, layer.in_channels * layer.in_length);
    for (int r = 0; r < layer.weight.rows(); ++r)
      for (int c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = draw();
    layer.bias = Eigen::VectorXd::Zero(layer.spec.width);
  }
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& value) {
  Eigen::VectorXd flat(value.rows() * value.cols());
  for (int c = 0; c < value.rows(); ++c)
    flat.segment(static_cast<long>(c) * value.cols(), value.cols()) =
        value.row(c);
  return flat;
}

}  // namespace

SurrogateModel init_model(const std::vector<LayerSpec>& arch, int input_dim,
                          int output_dim, std::uint64_t seed) {
  require(input_dim >= 1 && output_dim >= 1, ErrorCode::InvalidParameter,
          "model dimensions must be >= 1");
  SurrogateModel model;
  model.arch = arch;
  model.input_dim = input_dim;
  model.output_dim = output_dim;

  Rng rng(seed);
  int channels = 1;
  int length = input_dim;
  for (const auto& ls : arch) {
    Layer layer;
    layer.spec = ls;
    layer.in_channels = channels;
    layer.in_length = length;
    if (ls.kind == LayerSpec::Kind::Conv1d)
      require(ls.kernel <= length, ErrorCode::InvalidParameter,
              "conv kernel wider than its input");
    init_layer(layer, rng);
    channels = layer.out_channels();
    length = layer.out_length();
    model.layers.push_back(std::move(layer));
  }
  Layer out;
  out.spec = {LayerSpec::Kind::Dense, output_dim, 1};
  out.in_channels = channels;
  out.in_length = length;
  out.output_layer = true;
  init_layer(out, rng);
  model.layers.push_back(std::move(out));
  return model;
}

Eigen::VectorXd conv_transform(const Eigen::VectorXd& input,
                               const Eigen::VectorXd& kernel, double bias) {
  require(input.size() >= 1, ErrorCode::InvalidParameter,
          "conv_transform: empty input");
  require(kernel.size() >= 1 && kernel.size() % 2 == 1 &&
              kernel.size() <= input.size(),
          ErrorCode::InvalidParameter, "conv_transform: bad kernel width");
  const long n = input.size();
  const long half = kernel.size() / 2;
  Eigen::VectorXd out(n);
  for (long i = 0; i < n; ++i) {
    double acc = bias;
    for (long j = 0; j < kernel.size(); ++j) {
      const long t = i + j - half;
      if (t >= 0 && t < n) acc += kernel(j) * input(t);
    }
    out(i) = acc;
  }
  return out;
}

namespace {

Eigen::MatrixXd layer_preactivation(const Layer& layer,
                                    const Eigen::MatrixXd& input) {
  if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
    const long n = layer.in_length;
    const long half = layer.spec.kernel / 2;
    Eigen::MatrixXd z(layer.spec.width, n);
    for (int c = 0; c < layer.spec.width; ++c) {
      const auto& ker = layer.kernels[c];
      for (long i = 0; i < n; ++i) {
        double acc = layer.bias(c);
        for (int ci = 0; ci < layer.in_channels; ++ci)
          for (long j = 0; j < layer.spec.kernel; ++j) {
            const long t = i + j - half;
            if (t >= 0 && t < n) acc += ker(ci, j) * input(ci, t);
          }
        z(c, i) = acc;
      }
    }
    return z;
  }
  const Eigen::VectorXd flat = flatten(input);
  Eigen::VectorXd z = layer.weight * flat + layer.bias;
  return z.transpose();  // 1 x width
}

}  // namespace

ForwardPass forward(const SurrogateModel& model, const Eigen::VectorXd& input) {
  require(input.size() == model.input_dim, ErrorCode::InvalidParameter,
          "forward: input dimension mismatch");
  ForwardPass pass;
  Eigen::MatrixXd value = input.transpose();  // 1 x n
  for (size_t li = 0; li < model.layers.size(); ++li) {
    const Layer& layer = model.layers[li];
    pass.inputs.push_back(value);
    Eigen::MatrixXd z = layer_preactivation(layer, value);
    if (!z.allFinite())
      fail(ErrorCode::NumericError,
           "non-finite activation in layer " + std::to_string(li));
    pass.pre_activations.push_back(z);
    value = layer.output_layer ? z : z.cwiseMax(0.0);  // ReLU on hidden layers
  }
  pass.output = flatten(value);
  return pass;
}

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  require(pred.size() == target.size(), ErrorCode::InvalidParameter,
          "mse_loss: length mismatch");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Gradients zero_gradients(const SurrogateModel& model) {
  Gradients g;
  g.dense_w.resize(model.layers.size());
  g.conv_w.resize(model.layers.size());
  g.bias.resize(model.layers.size());
  for (size_t li = 0; li < model.layers.size(); ++li) {
    const Layer& layer = model.layers[li];
    g.bias[li] = Eigen::VectorXd::Zero(layer.bias.size());
    if (layer.spec.kind == LayerSpec::Kind::Conv1d)
      g.conv_w[li].assign(layer.spec.width,
                          Eigen::MatrixXd::Zero(layer.in_channels,
                                                layer.spec.kernel));
    else
      g.dense_w[li] = Eigen::MatrixXd::Zero(layer.weight.rows(),
                                            layer.weight.cols());
  }
  return g;
}

double compute_gradients(const SurrogateModel& model,
                         const std::vector<Eigen::VectorXd>& inputs,
                         const std::vector<Eigen::VectorXd>& targets,
                         Gradients& grads) {
  require(!inputs.empty() && inputs.size() == targets.size(),
          ErrorCode::InvalidParameter, "compute_gradients: empty batch");
  const double batch_scale = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (size_t s = 0; s < inputs.size(); ++s) {
    ForwardPass pass = forward(model, inputs[s]);
    loss += mse_loss(pass.output, targets[s]);

    // output delta for mean-squared error
    Eigen::VectorXd delta_flat =
        2.0 * (pass.output - targets[s]) / static_cast<double>(pass.output.size());

    for (int li = static_cast<int>(model.layers.size()) - 1; li >= 0; --li) {
      const Layer& layer = model.layers[li];
      const Eigen::MatrixXd& input = pass.inputs[li];
      const Eigen::MatrixXd& z = pass.pre_activations[li];

      // delta_flat currently matches the post-activation output of layer li
      Eigen::MatrixXd delta(z.rows(), z.cols());
      for (int c = 0; c < z.rows(); ++c)
        delta.row(c) = delta_flat.segment(static_cast<long>(c) * z.cols(),
                                          z.cols());
      if (!layer.output_layer)
        delta = delta.cwiseProduct(
            (z.array() > 0.0).cast<double>().matrix());

      if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
        const long n = layer.in_length;
        const long half = layer.spec.kernel / 2;
        Eigen::MatrixXd din = Eigen::MatrixXd::Zero(layer.in_channels, n);
        for (int c = 0; c < layer.spec.width; ++c) {
          grads.bias[li](c) += batch_scale * delta.row(c).sum();
          const auto& ker = layer.kernels[c];
          auto& dker = grads.conv_w[li][c];
          for (int ci = 0; ci < layer.in_channels; ++ci)
            for (long j = 0; j < layer.spec.kernel; ++j) {
              double acc = 0.0;
              for (long i = 0; i < n; ++i) {
                const long t = i + j - half;
                if (t >= 0 && t < n) {
                  acc += delta(c, i) * input(ci, t);
                  din(ci, t) += ker(ci, j) * delta(c, i);
                }
              }
              dker(ci, j) += batch_scale * acc;
            }
        }
        delta_flat = flatten(din);
      } else {
        const Eigen::VectorXd in_flat = flatten(input);
        const Eigen::VectorXd d = delta.row(0).transpose();
        grads.dense_w[li] += batch_scale * d * in_flat.transpose();
        grads.bias[li] += batch_scale * d;
        delta_flat = layer.weight.transpose() * d;
      }
    }
  }
  return loss * batch_scale;
}

Eigen::VectorXd layout_targets(const Eigen::VectorXd& label_matrix_flat,
                               int num_users, int num_aps,
                               const std::string& layout) {
  require(label_matrix_flat.size() ==
              static_cast<long>(num_users) * num_aps,
          ErrorCode::InvalidParameter, "layout_targets: label size mismatch");
  if (layout == "matrix") return label_matrix_flat;
  require(layout == "totals", ErrorCode::InvalidParameter,
          "unknown output layout '" + layout + "'");
  Eigen::VectorXd t(num_users + num_aps);
  t.setZero();
  for (int k = 0; k < num_users; ++k)
    for (int l = 0; l < num_aps; ++l) {
      const double v = label_matrix_flat(static_cast<long>(k) * num_aps + l);
      t(k) += v;
      t(num_users + l) += v;
    }
  return t;
}

namespace {

struct NormalizedSet {
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> y;
};

Eigen::VectorXd minmax_norm(const Eigen::VectorXd& raw,
                            const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  Eigen::VectorXd out(raw.size());
  for (long j = 0; j < raw.size(); ++j) {
    const double span = hi(j) - lo(j);
    out(j) = span > 0 ? (raw(j) - lo(j)) / span : 0.0;
  }
  return out;
}

double mean_loss(const SurrogateModel& model, const NormalizedSet& set) {
  double total = 0.0;
  for (size_t i = 0; i < set.x.size(); ++i)
    total += mse_loss(forward(model, set.x[i]).output, set.y[i]);
  return total / static_cast<double>(set.x.size());
}

void apply_momentum_step(SurrogateModel& model, const Gradients& grads,
                         Gradients& velocity, double lr, double momentum) {
  for (size_t li = 0; li < model.layers.size(); ++li) {
    Layer& layer = model.layers[li];
    velocity.bias[li] = momentum * velocity.bias[li] - lr * grads.bias[li];
    layer.bias += velocity.bias[li];
    if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
      for (int c = 0; c < layer.spec.width; ++c) {
        velocity.conv_w[li][c] =
            momentum * velocity.conv_w[li][c] - lr * grads.conv_w[li][c];
        layer.kernels[c] += velocity.conv_w[li][c];
      }
    } else {
      velocity.dense_w[li] =
          momentum * velocity.dense_w[li] - lr * grads.dense_w[li];
      layer.weight += velocity.dense_w[li];
    }
  }
}

}  // namespace

SurrogateModel train(SurrogateModel model, const dataset::Dataset& train_set,
                     const dataset::Dataset& val_set, const TrainConfig& cfg) {
  require(train_set.size() > 0 && val_set.size() > 0,
          ErrorCode::InvalidParameter, "train: empty dataset");
  const int K = train_set.num_users;
  const int L = train_set.num_aps;
  model.num_users = K;
  model.num_aps = L;
  model.output_layout = cfg.output_layout;
  require(model.input_dim == train_set.feature_dim(),
          ErrorCode::InvalidParameter, "train: model/dataset feature mismatch");

  // normalization constants from the training set, for the chosen layout
  model.feat_min = train_set.feat_min;
  model.feat_max = train_set.feat_max;
  std::vector<Eigen::VectorXd> raw_targets;
  raw_targets.reserve(train_set.size());
  for (const auto& label : train_set.labels)
    raw_targets.push_back(layout_targets(label, K, L, cfg.output_layout));
  require(model.output_dim == raw_targets[0].size(),
          ErrorCode::InvalidParameter, "train: model/layout output mismatch");
  model.label_min = raw_targets[0];
  model.label_max = raw_targets[0];
  for (const auto& t : raw_targets) {
    model.label_min = model.label_min.cwiseMin(t);
    model.label_max = model.label_max.cwiseMax(t);
  }

  auto normalized = [&](const dataset::Dataset& ds) {
    NormalizedSet set;
    for (int i = 0; i < ds.size(); ++i) {
      set.x.push_back(minmax_norm(ds.features[i], model.feat_min, model.feat_max));
      set.y.push_back(minmax_norm(
          layout_targets(ds.labels[i], K, L, cfg.output_layout),
          model.label_min, model.label_max));
    }
    return set;
  };
  const NormalizedSet train_n = normalized(train_set);
  const NormalizedSet val_n = normalized(val_set);

  Gradients velocity = zero_gradients(model);
  std::vector<int> order(train_n.x.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  SurrogateModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  model.history.clear();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(epoch) * 0x9e3779b9ULL);
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<size_t>(rng.uniform_index(i + 1))]);

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<Eigen::VectorXd> bx, by;
      bx.reserve(end - start);
      by.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        bx.push_back(train_n.x[order[i]]);
        by.push_back(train_n.y[order[i]]);
      }
      Gradients grads = zero_gradients(model);
      compute_gradients(model, bx, by, grads);
      apply_momentum_step(model, grads, velocity, cfg.learning_rate,
                          cfg.momentum);
    }

    const double train_mse = mean_loss(model, train_n);
    const double val_mse = mean_loss(model, val_n);
    if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
      fail(ErrorCode::TrainingFailure,
           "training diverged; last finite epoch " + std::to_string(epoch - 1));
    model.history.emplace_back(train_mse, val_mse);
    if (val_mse < best_val) {
      best_val = val_mse;
      auto history = model.history;
      best = model;
      best.history = std::move(history);
    }
  }
  best.history = model.history;
  return best;
}

alloc::AllocationSolution predict_and_repair(
    const SurrogateModel& model, const dataset::Scenario& scenario,
    long refine_iters, const alloc::DualSolverConfig& solver_cfg) {
  const auto& problem = scenario.problem;
  const int K = problem.num_users();
  const int L = problem.num_aps();
  require(model.num_users == K && model.num_aps == L,
          ErrorCode::InvalidParameter,
          "predict_and_repair: model trained for a different K/L");

  const Eigen::VectorXd feat =
      minmax_norm(dataset::feature_vector(scenario), model.feat_min,
                  model.feat_max);
  const Eigen::VectorXd raw = [&] {
    Eigen::VectorXd normed = forward(model, feat).output;
    Eigen::VectorXd out(normed.size());
    for (long j = 0; j < normed.size(); ++j)
      out(j) = model.label_min(j) +
               normed(j) * (model.label_max(j) - model.label_min(j));
    return out;
  }();

  Eigen::MatrixXd estimate(K, L);
  if (model.output_layout == "matrix") {
    for (int k = 0; k < K; ++k)
      estimate.row(k) = raw.segment(static_cast<long>(k) * L, L);
  } else {
    // totals layout: spread each user's predicted total over the APs,
    // weighted by capacity * rate (falling back to capacity alone)
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd w =
          problem.capacity.cwiseProduct(problem.rates.row(k).transpose());
      if (w.sum() <= 0) w = problem.capacity;
      estimate.row(k) = std::max(0.0, raw(k)) * w.transpose() / w.sum();
    }
  }
  estimate = estimate.cwiseMax(0.0);

  auto sol = alloc::refine_dual(problem, estimate, refine_iters, solver_cfg);
  sol.method = "surrogate";
  return sol;
}

void save_model(const SurrogateModel& model, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out << "# owc-model v1\n";
  out << "layout " << model.output_layout << "\n";
  out << "K " << model.num_users << "\nL " << model.num_aps << "\n";
  out << "input_dim " << model.input_dim << "\noutput_dim " << model.output_dim
      << "\n";
  out << "arch " << arch_to_string(model.arch) << "\n";
  auto vec_line = [&](const char* tag, const Eigen::VectorXd& v) {
    out << tag;
    for (long j = 0; j < v.size(); ++j) out << " " << fmt_double(v(j));
    out << "\n";
  };
  vec_line("fmin", model.feat_min);
  vec_line("fmax", model.feat_max);
  vec_line("lmin", model.label_min);
  vec_line("lmax", model.label_max);
  out << "params\n";
  for (const auto& layer : model.layers) {
    for (long j = 0; j < layer.bias.size(); ++j)
      out << fmt_double(layer.bias(j)) << "\n";
    if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
      for (const auto& k : layer.kernels)
        for (int ci = 0; ci < k.rows(); ++ci)
          for (int j = 0; j < k.cols(); ++j) out << fmt_double(k(ci, j)) << "\n";
    } else {
      for (int r = 0; r < layer.weight.rows(); ++r)
        for (int c = 0; c < layer.weight.cols(); ++c)
          out << fmt_double(layer.weight(r, c)) << "\n";
    }
  }
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

SurrogateModel load_model(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  std::string line;
  std::map<std::string, std::string> head;
  std::string arch_str;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "params") break;
    auto sp = t.find(' ');
    require(sp != std::string::npos, ErrorCode::ParseError,
            path + ": bad header line '" + t + "'");
    head[t.substr(0, sp)] = trim(t.substr(sp + 1));
  }
  auto need = [&](const std::string& key) {
    auto it = head.find(key);
    require(it != head.end(), ErrorCode::ParseError,
            path + ": missing header field " + key);
    return it->second;
  };
  const int input_dim = static_cast<int>(parse_long(need("input_dim"), path));
  const int output_dim = static_cast<int>(parse_long(need("output_dim"), path));
  auto arch = parse_arch(need("arch"));
  SurrogateModel model = init_model(arch, input_dim, output_dim, 0);
  model.output_layout = need("layout");
  model.num_users = static_cast<int>(parse_long(need("K"), path));
  model.num_aps = static_cast<int>(parse_long(need("L"), path));
  auto parse_space_vec = [&](const std::string& text) {
    std::istringstream ss(text);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) vals.push_back(parse_double(tok, path));
    Eigen::VectorXd v(static_cast<long>(vals.size()));
    for (size_t j = 0; j < vals.size(); ++j) v(static_cast<long>(j)) = vals[j];
    return v;
  };
  model.feat_min = parse_space_vec(need("fmin"));
  model.feat_max = parse_space_vec(need("fmax"));
  model.label_min = parse_space_vec(need("lmin"));
  model.label_max = parse_space_vec(need("lmax"));

  auto next_value = [&]() {
    std::string t;
    while (std::getline(in, t)) {
      t = trim(t);
      if (!t.empty()) return parse_double(t, path + " params");
    }
    fail(ErrorCode::ParseError, path + ": parameter stream truncated");
  };
  for (auto& layer : model.layers) {
    for (long j = 0; j < layer.bias.size(); ++j) layer.bias(j) = next_value();
    if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
      for (auto& k : layer.kernels)
        for (int ci = 0; ci < k.rows(); ++ci)
          for (int j = 0; j < k.cols(); ++j) k(ci, j) = next_value();
    } else {
      for (int r = 0; r < layer.weight.rows(); ++r)
        for (int c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = next_value();
    }
  }
  return model;
}

}  // namespace owc::surrogate
