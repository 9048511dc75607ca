#ifndef OWC_CHANNEL_CHANNEL_HPP
#define OWC_CHANNEL_CHANNEL_HPP

#include <Eigen/Dense>
#include <vector>

#include "util/error.hpp"

namespace owc::channel {

using Vec3 = Eigen::Vector3d;

// VCSEL transmitter and receiver front-end parameters.
struct VcselParams {
  double wavelength = 830e-9;      // m
  double beam_waist = 10e-6;       // m
  double tx_power = 1.0;           // W
  double bandwidth = 5e9;          // Hz
  double rin_db_hz = -155.0;       // dB/Hz, negative
  double responsivity = 0.53;      // A/W
  double load_ohms = 50.0;         // thermal noise load resistance
  bool eq3_literal = false;        // literal aperture-power form (see axial_received_power)

  void validate() const;
};

// Room, AP grid and detector geometry. Users live on a receiving plane
// `plane_gap` below the ceiling.
struct NetworkTopology {
  Vec3 room_dims{5.0, 5.0, 3.0};          // m
  std::vector<Vec3> ap_positions;          // on the ceiling
  std::vector<Vec3> user_positions;        // on the receiving plane
  double plane_gap = 2.15;                 // m, ceiling -> receiving plane
  int num_photodiodes = 16;                // M
  double detector_area = 15e-6;            // m^2, whole detector (A_rec)
  std::vector<Vec3> mode_orientations;     // unit vectors, one per preset mode
  double fov_deg = 45.0;

  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  int num_users() const { return static_cast<int>(user_positions.size()); }
  double photodiode_area() const { return detector_area / num_photodiodes; }

  void validate() const;
};

// Per-user channel: row = preset mode, column = AP. Gains are received-power
// fractions of the transmit power.
struct ChannelMatrix {
  int user_id = 0;
  Eigen::MatrixXd H;
  double noise_var = 0.0;  // A^2 after detection
};

// Gaussian beam radius at axial distance d.
double beam_radius(double beam_waist, double wavelength, double distance);

// Power collected by an aperture of area `aperture_area` centred on the beam
// axis. Default: encircled power with aperture radius sqrt(A/pi). The literal
// mode instead uses A/(2*pi*W_d) as the exponent argument, matching a printed
// form whose dimensions do not work out; kept selectable for comparison.
double axial_received_power(double tx_power, double beam_radius_at_plane,
                            double aperture_area, bool literal_form = false);

// Received power fraction (gain in [0,1]) for one AP / preset-mode pair.
// Zero when the incidence angle exceeds the field of view.
double los_gain(const Vec3& ap_pos, const Vec3& user_pos,
                const Vec3& mode_orientation, double fov_deg,
                const VcselParams& vcsel, double photodiode_area);

// Shot + thermal + RIN noise variance at the detector output.
double noise_variance(double received_power, const VcselParams& vcsel,
                      double temperature_k);

struct ChannelBuildOptions {
  double temperature_k = 300.0;
  // Rank enforcement uses singular values above 1e-10 * ||H||. Rate-matrix
  // consumers only need per-AP best-mode gains and may disable the check.
  bool require_full_rank = true;
};

ChannelMatrix build_channel_matrix(const NetworkTopology& topo,
                                   const VcselParams& vcsel, int user,
                                   const ChannelBuildOptions& opts = {});

// Deterministic pyramid of M preset-mode orientations: fixed polar tilt,
// equally spaced azimuths, plus one vertical mode when M is odd.
std::vector<Vec3> pyramid_modes(int count, double tilt_deg);

// Uniform nx-by-ny AP grid on the ceiling.
std::vector<Vec3> grid_ap_positions(const Vec3& room_dims, int nx, int ny);

int matrix_rank(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

}  // namespace owc::channel

#endif
