#include "doctest.h"

#include <cmath>

#include "bia/bia.hpp"
#include "util/rng.hpp"

using namespace owc;
using namespace owc::bia;

namespace {

// random well-conditioned square channel for decode tests
channel::ChannelMatrix random_channel(int dim, Rng& rng, int user = 0) {
  Eigen::MatrixXd h(dim, dim);
  for (long i = 0; i < h.size(); ++i) h(i) = rng.normal();
  h += 3.0 * Eigen::MatrixXd::Identity(dim, dim);
  return {user, h, 1.0};
}

std::vector<Eigen::VectorXd> random_symbols(const SupersymbolPlan& plan,
                                            Rng& rng) {
  std::vector<Eigen::VectorXd> symbols(plan.num_users);
  for (auto& s : symbols) {
    s.resize(static_cast<long>(plan.blocks_per_user) * plan.num_aps);
    for (long i = 0; i < s.size(); ++i) s(i) = rng.normal();
  }
  return symbols;
}

}  // namespace

TEST_CASE("supersymbol_length") {
  CHECK(supersymbol_length(2, 3) == 4);   // [PAPER: Fig. 2]
  CHECK(supersymbol_length(2, 1) == 2);   // [DERIVED: 1 + 1]
  CHECK(supersymbol_length(3, 2) == 8);   // [DERIVED: 4 + 2*2]
  CHECK_THROWS_AS(supersymbol_length(1, 2), Error);
  CHECK_THROWS_AS(supersymbol_length(2, 0), Error);
}

TEST_CASE("build_supersymbol invariants over the (L,K) range") {
  for (int L = 2; L <= 4; ++L) {
    for (int K = 1; K <= 3; ++K) {
      auto plan = build_supersymbol(L, K);
      CHECK(plan.length == supersymbol_length(L, K));
      CHECK(plan.block1_len + plan.block2_len == plan.length);
      long per_user = 1;
      for (int i = 0; i < K - 1; ++i) per_user *= L - 1;
      CHECK(plan.blocks_per_user == per_user);

      // Block 2 slots are orthogonal: exactly one transmitter per slot
      for (int s = plan.block1_len; s < plan.length; ++s) {
        int active = 0;
        for (const auto& e : plan.schedule[s])
          if (e.symbol_index >= 0) ++active;
        CHECK(active == 1);
      }
      // Block 1 slots carry every user
      for (int s = 0; s < plan.block1_len; ++s)
        for (const auto& e : plan.schedule[s]) CHECK(e.symbol_index >= 0);
      // beamforming entries are 0/1 and each user's columns cover L slots
      for (int k = 0; k < K; ++k) {
        const auto& b = plan.beamforming[k];
        for (long i = 0; i < b.size(); ++i) CHECK((b(i) == 0 || b(i) == 1));
        for (int c = 0; c < b.cols(); ++c) CHECK(b.col(c).sum() == L);
      }
    }
  }
}

TEST_CASE("(2,3) supersymbol matches the Eq.-(4) activation pattern") {
  auto plan = build_supersymbol(2, 3);
  REQUIRE(plan.length == 4);
  REQUIRE(plan.block1_len == 1);
  // slot 0 activates all three users, slots 1..3 exactly one each
  for (const auto& e : plan.schedule[0]) CHECK(e.symbol_index == 0);
  for (int s = 1; s < 4; ++s) {
    int active = 0;
    for (const auto& e : plan.schedule[s])
      if (e.symbol_index >= 0) ++active;
    CHECK(active == 1);
  }
  // per-user activation matrix is [1;...;1 at own block-2 slot]
  for (int k = 0; k < 3; ++k) {
    CHECK(plan.beamforming[k](0, 0) == 1);
    CHECK(plan.beamforming[k](1 + k, 0) == 1);
    CHECK(plan.beamforming[k].col(0).sum() == 2);
  }
}

TEST_CASE("noise_covariance") {
  auto rz = noise_covariance(2, 3);
  CHECK(rz(0, 0) == doctest::Approx(3.0));   // [PAPER: Eq. (5)]
  CHECK(rz(1, 1) == doctest::Approx(1.0));
  auto rz2 = noise_covariance(3, 2);
  CHECK(rz2(0, 0) == doctest::Approx(2.0));  // [DERIVED: diag(2,2,1)]
  CHECK(rz2(1, 1) == doctest::Approx(2.0));
  CHECK(rz2(2, 2) == doctest::Approx(1.0));
  // [TRIVIAL] determinant = K^(L-1)
  CHECK(rz2.determinant() == doctest::Approx(4.0));
  CHECK_THROWS_AS(noise_covariance(1, 2), Error);
}

TEST_CASE("noiseless decoding is exact over 100 random draws") {
  for (auto [L, K] : {std::pair{2, 3}, std::pair{3, 2}}) {
    auto plan = build_supersymbol(L, K);
    Rng rng(static_cast<std::uint64_t>(L * 100 + K));
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      std::vector<channel::ChannelMatrix> channels;
      for (int k = 0; k < K; ++k) channels.push_back(random_channel(L, rng, k));
      auto symbols = random_symbols(plan, rng);
      auto res = verify_decoding(plan, channels, symbols, 0.0);
      worst = std::max(worst, res.max_residual);
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("zero symbols decode to zero") {
  auto plan = build_supersymbol(2, 3);
  Rng rng(7);
  std::vector<channel::ChannelMatrix> channels;
  for (int k = 0; k < 3; ++k) channels.push_back(random_channel(2, rng, k));
  std::vector<Eigen::VectorXd> symbols(3, Eigen::VectorXd::Zero(2));
  auto res = verify_decoding(plan, channels, symbols, 0.0);
  CHECK(res.max_residual == doctest::Approx(0.0));
  for (const auto& d : res.decoded) CHECK(d.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("singular channel reports decode failure") {
  auto plan = build_supersymbol(2, 2);
  Rng rng(8);
  std::vector<channel::ChannelMatrix> channels = {random_channel(2, rng, 0),
                                                  random_channel(2, rng, 1)};
  channels[1].H.row(1) = channels[1].H.row(0);  // rank 1
  auto symbols = random_symbols(plan, rng);
  CHECK_THROWS_AS(verify_decoding(plan, channels, symbols, 0.0), Error);
}

TEST_CASE("user_rate") {
  // [DERIVED] H = I, sigma^2 = 1, L=2, K=3, P_str=3:
  // (1/4) log2((1 + 3/3)(1 + 3)) = (1/4) log2 8 = 0.75
  channel::ChannelMatrix cm{0, Eigen::MatrixXd::Identity(2, 2), 1.0};
  CHECK(user_rate(cm, 3.0, 2, 3) == doctest::Approx(0.75));
  // [TRIVIAL] zero stream power -> zero rate
  CHECK(user_rate(cm, 0.0, 2, 3) == doctest::Approx(0.0));
  // monotone in stream power
  CHECK(user_rate(cm, 6.0, 2, 3) > user_rate(cm, 3.0, 2, 3));

  // invariant under permutations of the first L-1 modes
  Rng rng(21);
  channel::ChannelMatrix big = random_channel(4, rng);
  const double base = user_rate(big, 2.0, 4, 2);
  channel::ChannelMatrix permuted = big;
  permuted.H.row(0) = big.H.row(2);
  permuted.H.row(2) = big.H.row(0);
  CHECK(user_rate(permuted, 2.0, 4, 2) == doctest::Approx(base));

  channel::ChannelMatrix singular{0, Eigen::MatrixXd::Ones(2, 2), 1.0};
  CHECK_THROWS_AS(user_rate(singular, 1.0, 2, 3), Error);
}

TEST_CASE("per_link_rate") {
  channel::ChannelMatrix cm{0, Eigen::MatrixXd::Zero(2, 2), 1.0};
  cm.H << 0.5, 0.0,
          0.2, 0.5;
  // [TRIVIAL] zero-gain AP -> zero rate... col 1 max gain is 0.5 too
  // [DERIVED] direct arithmetic: (1/(L+K-1)) log2(1 + P g^2/(K sigma^2))
  const double expect = std::log2(1.0 + 4.0 * 0.25 / 3.0) / 4.0;
  CHECK(per_link_rate(cm, 4.0, 0, 2, 3) == doctest::Approx(expect));
  // [TRIVIAL] equal best gains give equal per-link rates
  CHECK(per_link_rate(cm, 4.0, 1, 2, 3) ==
        doctest::Approx(per_link_rate(cm, 4.0, 0, 2, 3)));
  // zero gain
  channel::ChannelMatrix z{0, Eigen::MatrixXd::Zero(2, 2), 1.0};
  CHECK(per_link_rate(z, 4.0, 0, 2, 3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(per_link_rate(cm, 4.0, 5, 2, 3), Error);
}

TEST_CASE("plan description is stable and informative") {
  auto plan = build_supersymbol(2, 2);
  const std::string text = plan.describe();
  CHECK(text.find("L=2 K=2") != std::string::npos);
  CHECK(text.find("length=3") != std::string::npos);
  CHECK(plan.describe() == text);
}
