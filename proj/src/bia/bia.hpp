#ifndef OWC_BIA_BIA_HPP
#define OWC_BIA_BIA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "channel/channel.hpp"

namespace owc::bia {

// One receiver's state during a supersymbol slot: the preset mode it listens
// with and, when transmitting is scheduled for it, which of its symbol
// vectors rides in the slot (-1 when silent).
struct SlotAssignment {
  int user = 0;
  int mode = 0;
  int symbol_index = -1;
};

struct SupersymbolPlan {
  int num_aps = 0;    // L
  int num_users = 0;  // K
  int length = 0;
  int block1_len = 0;
  int block2_len = 0;
  int blocks_per_user = 0;  // (L-1)^(K-1) symbol vectors per user
  // schedule[slot][k] describes user k during that slot
  std::vector<std::vector<SlotAssignment>> schedule;
  // beamforming[k](slot, symbol_index) in {0,1}, the Eq.-style activation
  std::vector<Eigen::MatrixXi> beamforming;

  std::string describe() const;
};

long supersymbol_length(int num_aps, int num_users);

SupersymbolPlan build_supersymbol(int num_aps, int num_users);

// Block-diagonal noise covariance diag(K * I_{L-1}, 1).
Eigen::MatrixXd noise_covariance(int num_aps, int num_users);

struct DecodingResult {
  // decoded[k] is user k's stacked symbol vectors, same layout as the input
  std::vector<Eigen::VectorXd> decoded;
  double max_residual = 0.0;
};

// Simulates the supersymbol end to end: transmit, receive through each
// user's mode-switched channel, measure interference over Block 2, subtract,
// invert. symbols[k] holds blocks_per_user vectors of length L, stacked.
DecodingResult verify_decoding(const SupersymbolPlan& plan,
                               const std::vector<channel::ChannelMatrix>& channels,
                               const std::vector<Eigen::VectorXd>& symbols,
                               double noise_std, unsigned long long noise_seed = 0);

// BIA rate of one user, log-det form with stream power P_str.
double user_rate(const channel::ChannelMatrix& cm, double stream_power,
                 int num_aps, int num_users);

// Per-AP rate decomposition: best-aligned-mode gain with K-fold noise
// amplification from interference subtraction.
double per_link_rate(const channel::ChannelMatrix& cm, double stream_power,
                     int ap, int num_aps, int num_users);

}  // namespace owc::bia

#endif
