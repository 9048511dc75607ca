#include "doctest.h"

#include "surrogate/surrogate.hpp"
#include "util/rng.hpp"

using namespace owc;
using namespace owc::surrogate;

namespace {

// flat view over all model parameters, for finite differencing
std::vector<double*> parameter_refs(SurrogateModel& model) {
  std::vector<double*> refs;
  for (auto& layer : model.layers) {
    if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
      for (auto& k : layer.kernels)
        for (long i = 0; i < k.size(); ++i) refs.push_back(k.data() + i);
    } else {
      for (long i = 0; i < layer.weight.size(); ++i)
        refs.push_back(layer.weight.data() + i);
    }
    for (long i = 0; i < layer.bias.size(); ++i)
      refs.push_back(layer.bias.data() + i);
  }
  return refs;
}

std::vector<double> gradient_refs(const SurrogateModel& model,
                                  const Gradients& g) {
  std::vector<double> out;
  for (size_t li = 0; li < model.layers.size(); ++li) {
    const auto& layer = model.layers[li];
    if (layer.spec.kind == LayerSpec::Kind::Conv1d) {
      for (const auto& k : g.conv_w[li])
        for (long i = 0; i < k.size(); ++i) out.push_back(k(i));
    } else {
      for (long i = 0; i < g.dense_w[li].size(); ++i)
        out.push_back(g.dense_w[li](i));
    }
    for (long i = 0; i < g.bias[li].size(); ++i) out.push_back(g.bias[li](i));
  }
  return out;
}

double batch_loss(const SurrogateModel& model,
                  const std::vector<Eigen::VectorXd>& xs,
                  const std::vector<Eigen::VectorXd>& ys) {
  double total = 0.0;
  for (size_t i = 0; i < xs.size(); ++i)
    total += mse_loss(forward(model, xs[i]).output, ys[i]);
  return total / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("parse_arch round trips and validates") {
  auto arch = parse_arch("conv:16:3,dense:64");
  REQUIRE(arch.size() == 2);
  CHECK(arch[0].kind == LayerSpec::Kind::Conv1d);
  CHECK(arch[0].width == 16);
  CHECK(arch[0].kernel == 3);
  CHECK(arch[1].kind == LayerSpec::Kind::Dense);
  CHECK(arch[1].width == 64);
  CHECK(arch_to_string(arch) == "conv:16:3,dense:64");
  CHECK_THROWS_AS(parse_arch("conv:4:2"), Error);   // even kernel
  CHECK_THROWS_AS(parse_arch("pool:2"), Error);     // unknown kind
  CHECK_THROWS_AS(parse_arch("dense:0"), Error);    // empty layer
}

TEST_CASE("conv_transform matches the hand-worked example") {
  // [TRIVIAL] centred cross-correlation with zero padding:
  // input [1,2,3], kernel [1,0,-1] -> [-2,-2,2]
  Eigen::VectorXd in(3), ker(3);
  in << 1, 2, 3;
  ker << 1, 0, -1;
  Eigen::VectorXd out = conv_transform(in, ker, 0.0);
  CHECK(out(0) == doctest::Approx(-2.0));
  CHECK(out(1) == doctest::Approx(-2.0));
  CHECK(out(2) == doctest::Approx(2.0));
  // identity kernel preserves the input
  Eigen::VectorXd id(1);
  id << 1;
  CHECK((conv_transform(in, id, 0.0) - in).norm() == doctest::Approx(0.0));
}

TEST_CASE("forward output dimension and determinism") {
  auto model = init_model(parse_arch("conv:4:3,dense:8"), 12, 6, 7);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(12, -1.0, 1.0);
  auto a = forward(model, x);
  auto b = forward(model, x);
  REQUIRE(a.output.size() == 6);
  CHECK((a.output - b.output).norm() == 0.0);
  // same seed, same init
  auto model2 = init_model(parse_arch("conv:4:3,dense:8"), 12, 6, 7);
  CHECK((forward(model2, x).output - a.output).norm() == 0.0);
}

TEST_CASE("backprop matches central finite differences") {
  // [DERIVED] independent oracle: central differences on every parameter
  Rng rng(42);
  const std::vector<std::string> archs = {"dense:5", "conv:3:3",
                                          "conv:2:3,dense:6",
                                          "conv:2:3,conv:2:3,dense:4"};
  for (int trial = 0; trial < 10; ++trial) {
    const std::string& arch = archs[trial % archs.size()];
    const int in_dim = 6 + trial % 3;
    const int out_dim = 3;
    auto model = init_model(parse_arch(arch), in_dim, out_dim,
                            1000 + static_cast<std::uint64_t>(trial));
    std::vector<Eigen::VectorXd> xs, ys;
    for (int s = 0; s < 3; ++s) {
      Eigen::VectorXd x(in_dim), y(out_dim);
      for (long i = 0; i < x.size(); ++i) x(i) = rng.normal();
      for (long i = 0; i < y.size(); ++i) y(i) = rng.normal();
      xs.push_back(x);
      ys.push_back(y);
    }

    Gradients grads = zero_gradients(model);
    compute_gradients(model, xs, ys, grads);
    const auto analytic = gradient_refs(model, grads);
    auto refs = parameter_refs(model);
    REQUIRE(analytic.size() == refs.size());

    const double h = 1e-6;
    double max_rel = 0.0;
    for (size_t i = 0; i < refs.size(); ++i) {
      const double saved = *refs[i];
      *refs[i] = saved + h;
      const double up = batch_loss(model, xs, ys);
      *refs[i] = saved - h;
      const double down = batch_loss(model, xs, ys);
      *refs[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max(1.0, std::abs(numeric));
      max_rel = std::max(max_rel, std::abs(numeric - analytic[i]) / denom);
    }
    CHECK(max_rel <= 1e-4);
  }
}

TEST_CASE("layout_targets") {
  Eigen::VectorXd flat(6);  // K=2, L=3
  flat << 1, 2, 3, 4, 5, 6;
  CHECK((layout_targets(flat, 2, 3, "matrix") - flat).norm() == 0.0);
  Eigen::VectorXd totals = layout_targets(flat, 2, 3, "totals");
  REQUIRE(totals.size() == 5);
  CHECK(totals(0) == doctest::Approx(6.0));    // user 0
  CHECK(totals(1) == doctest::Approx(15.0));   // user 1
  CHECK(totals(2) == doctest::Approx(5.0));    // AP 0
  CHECK(totals(3) == doctest::Approx(7.0));    // AP 1
  CHECK(totals(4) == doctest::Approx(9.0));    // AP 2
  CHECK_THROWS_AS(layout_targets(flat, 2, 3, "bogus"), Error);
}

TEST_CASE("training reduces the loss on a learnable synthetic mapping") {
  // y = clipped linear function of x: learnable by conv+dense
  Rng rng(5);
  const int K = 2, L = 3;
  dataset::Dataset train, val;
  train.num_users = val.num_users = K;
  train.num_aps = val.num_aps = L;
  auto fill = [&](dataset::Dataset& ds, int n) {
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(4), y(K * L);
      for (long j = 0; j < x.size(); ++j) x(j) = rng.uniform(0.0, 1.0);
      for (long j = 0; j < y.size(); ++j)
        y(j) = 0.5 * x(j % 4) + 0.25 * x((j + 1) % 4);
      ds.features.push_back(x);
      ds.labels.push_back(y);
    }
    ds.feat_min = Eigen::VectorXd::Zero(4);
    ds.feat_max = Eigen::VectorXd::Ones(4);
    ds.label_min = Eigen::VectorXd::Zero(K * L);
    ds.label_max = Eigen::VectorXd::Ones(K * L);
  };
  fill(train, 200);
  fill(val, 40);

  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 16;
  cfg.seed = 3;
  auto model = init_model(parse_arch("conv:4:3,dense:16"), 4, K * L, 3);
  model = surrogate::train(std::move(model), train, val, cfg);
  REQUIRE(model.history.size() == 30);
  CHECK(model.history.back().first < 0.5 * model.history.front().first);
  CHECK(model.num_users == K);
  CHECK(model.num_aps == L);
}

TEST_CASE("save/load round trip preserves predictions") {
  auto model = init_model(parse_arch("conv:2:3,dense:6"), 8, 4, 11);
  model.num_users = 2;
  model.num_aps = 2;
  model.feat_min = Eigen::VectorXd::Zero(8);
  model.feat_max = Eigen::VectorXd::Ones(8);
  model.label_min = Eigen::VectorXd::Zero(4);
  model.label_max = Eigen::VectorXd::Ones(4);
  const std::string path = "roundtrip_model.txt";
  save_model(model, path);
  auto loaded = load_model(path);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(8, 0.0, 1.0);
  CHECK((forward(model, x).output - forward(loaded, x).output).norm() ==
        doctest::Approx(0.0));
  CHECK(loaded.output_layout == model.output_layout);
  std::remove(path.c_str());
}

TEST_CASE("divergent training reports TrainingFailure") {
  Rng rng(9);
  dataset::Dataset train, val;
  train.num_users = val.num_users = 1;
  train.num_aps = val.num_aps = 2;
  for (int i = 0; i < 32; ++i) {
    Eigen::VectorXd x(3), y(2);
    for (long j = 0; j < 3; ++j) x(j) = rng.normal() * 10;
    y << rng.normal(), rng.normal();
    (i % 4 ? train : val).features.push_back(x);
    (i % 4 ? train : val).labels.push_back(y);
  }
  auto setup = [](dataset::Dataset& ds) {
    ds.feat_min = Eigen::VectorXd::Constant(3, -30.0);
    ds.feat_max = Eigen::VectorXd::Constant(3, 30.0);
    ds.label_min = Eigen::VectorXd::Constant(2, -3.0);
    ds.label_max = Eigen::VectorXd::Constant(2, 3.0);
  };
  setup(train);
  setup(val);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e6;  // guaranteed blow-up
  cfg.batch_size = 8;
  auto model = init_model(parse_arch("dense:8"), 3, 2, 1);
  CHECK_THROWS_AS(surrogate::train(std::move(model), train, val, cfg), Error);
}
