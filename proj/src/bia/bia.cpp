#include "bia/bia.hpp"

#include <cmath>
#include <sstream>

#include "util/rng.hpp"

namespace owc::bia {

namespace {

long ipow(long base, int exp) {
  long out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

// digits of `index` in base `base`, length `len`, most significant first
std::vector<int> to_digits(long index, int base, int len) {
  std::vector<int> d(len, 0);
  for (int i = len - 1; i >= 0; --i) {
    d[i] = static_cast<int>(index % base);
    index /= base;
  }
  return d;
}

long from_digits(const std::vector<int>& d, int base) {
  long out = 0;
  for (int v : d) out = out * base + v;
  return out;
}

// drop position `k` from a K-tuple
std::vector<int> drop(const std::vector<int>& tuple, int k) {
  std::vector<int> out;
  out.reserve(tuple.size() - 1);
  for (size_t i = 0; i < tuple.size(); ++i)
    if (static_cast<int>(i) != k) out.push_back(tuple[i]);
  return out;
}

}  // namespace

long supersymbol_length(int num_aps, int num_users) {
  require(num_aps >= 2, ErrorCode::UnsupportedConfiguration,
          "BIA needs at least 2 preset-mode dimensions (L >= 2)");
  require(num_users >= 1, ErrorCode::InvalidParameter, "K must be >= 1");
  return ipow(num_aps - 1, num_users) +
         num_users * ipow(num_aps - 1, num_users - 1);
}

SupersymbolPlan build_supersymbol(int num_aps, int num_users) {
  const long length = supersymbol_length(num_aps, num_users);
  const int base = num_aps - 1;
  const long block1 = ipow(base, num_users);
  const long per_user = ipow(base, num_users - 1);

  SupersymbolPlan plan;
  plan.num_aps = num_aps;
  plan.num_users = num_users;
  plan.length = static_cast<int>(length);
  plan.block1_len = static_cast<int>(block1);
  plan.block2_len = static_cast<int>(length - block1);
  plan.blocks_per_user = static_cast<int>(per_user);
  plan.schedule.resize(plan.length);
  plan.beamforming.assign(
      num_users, Eigen::MatrixXi::Zero(plan.length, plan.blocks_per_user));

  // Block 1: one slot per mode tuple c in {0..L-2}^K. Every user transmits;
  // user k listens with mode c_k and carries the symbol vector indexed by
  // the other users' digits.
  for (long slot = 0; slot < block1; ++slot) {
    auto tuple = to_digits(slot, base, num_users);
    auto& entries = plan.schedule[slot];
    entries.resize(num_users);
    for (int k = 0; k < num_users; ++k) {
      const int sym = static_cast<int>(from_digits(drop(tuple, k), base));
      entries[k] = {k, tuple[k], sym};
      plan.beamforming[k](slot, sym) = 1;
    }
  }

  // Block 2: orthogonal slots. User k alone resends symbol vector c_{-k}
  // using the last preset mode; every other user j listens with its own
  // digit of c_{-k}, which is exactly the mode it used when that symbol
  // interfered with it in Block 1.
  long slot = block1;
  for (int k = 0; k < num_users; ++k) {
    for (long sym = 0; sym < per_user; ++sym, ++slot) {
      auto others = to_digits(sym, base, num_users - 1);
      auto& entries = plan.schedule[slot];
      entries.resize(num_users);
      for (int j = 0; j < num_users; ++j) {
        if (j == k) {
          entries[j] = {j, num_aps - 1, static_cast<int>(sym)};
        } else {
          const int pos = j < k ? j : j - 1;
          entries[j] = {j, others[pos], -1};
        }
      }
      plan.beamforming[k](slot, sym) = 1;
    }
  }
  return plan;
}

std::string SupersymbolPlan::describe() const {
  std::ostringstream os;
  os << "supersymbol L=" << num_aps << " K=" << num_users
     << " length=" << length << " (block1=" << block1_len
     << ", block2=" << block2_len << ")\n";
  for (int s = 0; s < length; ++s) {
    os << "slot " << s << (s < block1_len ? " [block1]" : " [block2]") << ":";
    for (const auto& e : schedule[s]) {
      os << " u" << e.user << "(mode " << e.mode;
      if (e.symbol_index >= 0)
        os << ", tx sym " << e.symbol_index;
      os << ")";
    }
    os << "\n";
  }
  return os.str();
}

Eigen::MatrixXd noise_covariance(int num_aps, int num_users) {
  require(num_aps >= 2, ErrorCode::UnsupportedConfiguration,
          "noise_covariance needs L >= 2");
  require(num_users >= 1, ErrorCode::InvalidParameter, "K must be >= 1");
  Eigen::MatrixXd rz = Eigen::MatrixXd::Zero(num_aps, num_aps);
  for (int i = 0; i < num_aps - 1; ++i) rz(i, i) = num_users;
  rz(num_aps - 1, num_aps - 1) = 1.0;
  return rz;
}

DecodingResult verify_decoding(const SupersymbolPlan& plan,
                               const std::vector<channel::ChannelMatrix>& channels,
                               const std::vector<Eigen::VectorXd>& symbols,
                               double noise_std,
                               unsigned long long noise_seed) {
  const int L = plan.num_aps;
  const int K = plan.num_users;
  require(static_cast<int>(channels.size()) == K, ErrorCode::InvalidParameter,
          "verify_decoding: need one channel matrix per user");
  require(static_cast<int>(symbols.size()) == K, ErrorCode::InvalidParameter,
          "verify_decoding: need one symbol vector per user");
  for (int k = 0; k < K; ++k) {
    require(channels[k].H.rows() == L && channels[k].H.cols() == L,
            ErrorCode::InvalidParameter, "verify_decoding: channel shape");
    require(symbols[k].size() == static_cast<long>(plan.blocks_per_user) * L,
            ErrorCode::InvalidParameter,
            "verify_decoding: symbol dimensions do not match the plan");
  }

  auto symbol_vec = [&](int k, int idx) {
    return symbols[k].segment(static_cast<long>(idx) * L, L);
  };

  // transmit + receive
  Rng rng(noise_seed == 0 ? 0x5eed : noise_seed);
  Eigen::MatrixXd received(K, plan.length);
  for (int s = 0; s < plan.length; ++s) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L);
    for (const auto& e : plan.schedule[s])
      if (e.symbol_index >= 0) x += symbol_vec(e.user, e.symbol_index);
    for (int k = 0; k < K; ++k) {
      const int mode = plan.schedule[s][k].mode;
      double y = channels[k].H.row(mode).dot(x);
      if (noise_std > 0) y += noise_std * rng.normal();
      received(k, s) = y;
    }
  }

  // Block-2 slot of (user, symbol index)
  auto block2_slot = [&](int k, int sym) {
    return plan.block1_len + k * plan.blocks_per_user + sym;
  };
  const int base = L - 1;

  DecodingResult result;
  result.decoded.resize(K);
  for (int k = 0; k < K; ++k) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(channels[k].H);
    if (!lu.isInvertible())
      fail(ErrorCode::DecodeFailure,
           "verify_decoding: singular channel for user " + std::to_string(k));

    Eigen::VectorXd out(static_cast<long>(plan.blocks_per_user) * L);
    for (int sym = 0; sym < plan.blocks_per_user; ++sym) {
      auto own = to_digits(sym, base == 0 ? 1 : base, K - 1);
      Eigen::VectorXd z(L);
      for (int t = 0; t < L - 1; ++t) {
        // reconstruct the Block-1 tuple with our own digit set to t
        std::vector<int> tuple(K);
        for (int j = 0, pos = 0; j < K; ++j)
          tuple[j] = (j == k) ? t : own[pos++];
        const long slot1 = from_digits(tuple, base == 0 ? 1 : base);
        double y = received(k, slot1);
        for (int j = 0; j < K; ++j) {
          if (j == k) continue;
          const int other_sym =
              static_cast<int>(from_digits(drop(tuple, j), base == 0 ? 1 : base));
          y -= received(k, block2_slot(j, other_sym));
        }
        z(t) = y;
      }
      z(L - 1) = received(k, block2_slot(k, sym));
      out.segment(static_cast<long>(sym) * L, L) = lu.solve(z);
    }
    result.decoded[k] = out;
    const double res = (out - symbols[k]).cwiseAbs().maxCoeff();
    result.max_residual = std::max(result.max_residual, res);
  }
  return result;
}

double user_rate(const channel::ChannelMatrix& cm, double stream_power,
                 int num_aps, int num_users) {
  require(stream_power >= 0, ErrorCode::InvalidParameter,
          "user_rate: stream power must be >= 0");
  require(cm.H.rows() == num_aps && cm.H.cols() == num_aps,
          ErrorCode::InvalidParameter, "user_rate: channel shape");
  require(cm.noise_var > 0, ErrorCode::InvalidParameter,
          "user_rate: noise variance must be > 0");
  if (stream_power == 0) return 0.0;
  if (channel::matrix_rank(cm.H) < num_aps)
    fail(ErrorCode::DegenerateGeometry, "user_rate: singular channel matrix");

  const Eigen::MatrixXd rz_inv =
      noise_covariance(num_aps, num_users).inverse();
  const Eigen::MatrixXd m =
      Eigen::MatrixXd::Identity(num_aps, num_aps) +
      (stream_power / cm.noise_var) * cm.H * cm.H.transpose() * rz_inv;
  // log|det| accumulated from the LU diagonal to dodge overflow
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  double log2det = 0.0;
  for (int i = 0; i < num_aps; ++i)
    log2det += std::log2(std::abs(lu.matrixLU()(i, i)));
  return log2det / (num_aps + num_users - 1);
}

double per_link_rate(const channel::ChannelMatrix& cm, double stream_power,
                     int ap, int num_aps, int num_users) {
  require(ap >= 0 && ap < num_aps, ErrorCode::InvalidParameter,
          "per_link_rate: AP index out of range");
  require(cm.H.cols() == num_aps, ErrorCode::InvalidParameter,
          "per_link_rate: channel shape");
  require(stream_power >= 0, ErrorCode::InvalidParameter,
          "per_link_rate: stream power must be >= 0");
  const double best_gain = cm.H.col(ap).maxCoeff();
  const double g = best_gain * best_gain;
  const double eff_noise = num_users * cm.noise_var;
  return std::log2(1.0 + stream_power * g / eff_noise) /
         (num_aps + num_users - 1);
}

}  // namespace owc::bia
