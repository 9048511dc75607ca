#include "channel/channel.hpp"

#include <cmath>

namespace owc::channel {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kElectronCharge = 1.602176634e-19;   // C
constexpr double kBoltzmann = 1.380649e-23;           // J/K
}  // namespace

void VcselParams::validate() const {
  require(wavelength > 0 && beam_waist > 0 && tx_power > 0 && bandwidth > 0 &&
              responsivity > 0 && load_ohms > 0,
          ErrorCode::InvalidParameter, "VCSEL parameters must be positive");
  require(rin_db_hz < 0, ErrorCode::InvalidParameter,
          "RIN must be a negative dB/Hz value");
}

void NetworkTopology::validate() const {
  require(plane_gap > 0, ErrorCode::InvalidParameter, "plane_gap must be > 0");
  require(num_aps() >= 1, ErrorCode::InvalidParameter, "need at least one AP");
  require(num_users() >= 1, ErrorCode::InvalidParameter, "need at least one user");
  require(num_photodiodes >= 1, ErrorCode::InvalidParameter, "M must be >= 1");
  require(detector_area > 0, ErrorCode::InvalidParameter,
          "detector_area must be > 0");
  auto inside = [&](const Vec3& p) {
    return p.x() >= 0 && p.x() <= room_dims.x() && p.y() >= 0 &&
           p.y() <= room_dims.y() && p.z() >= 0 && p.z() <= room_dims.z();
  };
  for (const auto& p : ap_positions)
    require(inside(p), ErrorCode::InvalidParameter, "AP outside room");
  for (const auto& p : user_positions)
    require(inside(p), ErrorCode::InvalidParameter, "user outside room");
  for (const auto& n : mode_orientations)
    require(std::abs(n.norm() - 1.0) <= 1e-9, ErrorCode::InvalidParameter,
            "mode orientation must have unit norm");
}

double beam_radius(double beam_waist, double wavelength, double distance) {
  require(beam_waist > 0 && wavelength > 0, ErrorCode::InvalidParameter,
          "beam_radius: waist and wavelength must be > 0");
  require(distance >= 0, ErrorCode::InvalidParameter,
          "beam_radius: distance must be >= 0");
  const double rayleigh = kPi * beam_waist * beam_waist / wavelength;
  const double q = distance / rayleigh;
  return beam_waist * std::sqrt(1.0 + q * q);
}

double axial_received_power(double tx_power, double beam_radius_at_plane,
                            double aperture_area, bool literal_form) {
  require(tx_power > 0 && beam_radius_at_plane > 0 && aperture_area > 0,
          ErrorCode::InvalidParameter,
          "axial_received_power: inputs must be > 0");
  double x;
  if (literal_form) {
    const double t = aperture_area / (2.0 * kPi * beam_radius_at_plane);
    x = 2.0 * t * t;
  } else {
    const double radius2 = aperture_area / kPi;  // a^2 for a = sqrt(A/pi)
    x = 2.0 * radius2 / (beam_radius_at_plane * beam_radius_at_plane);
  }
  return tx_power * (1.0 - std::exp(-x));
}

double los_gain(const Vec3& ap_pos, const Vec3& user_pos,
                const Vec3& mode_orientation, double fov_deg,
                const VcselParams& vcsel, double photodiode_area) {
  const double drop = ap_pos.z() - user_pos.z();
  require(drop > 0, ErrorCode::InvalidParameter,
          "los_gain: AP must be above the user plane");

  const Vec3 to_ap = (ap_pos - user_pos).normalized();
  const double cos_inc = to_ap.dot(mode_orientation);
  const double inc_deg = std::acos(std::clamp(cos_inc, -1.0, 1.0)) * 180.0 / kPi;
  if (inc_deg > fov_deg || cos_inc <= 0.0) return 0.0;

  const double wd = beam_radius(vcsel.beam_waist, vcsel.wavelength, drop);
  const double axial_fraction =
      axial_received_power(vcsel.tx_power, wd, photodiode_area,
                           vcsel.eq3_literal) /
      vcsel.tx_power;
  const double dx = user_pos.x() - ap_pos.x();
  const double dy = user_pos.y() - ap_pos.y();
  const double r2 = dx * dx + dy * dy;  // offset from the vertical beam axis
  const double radial = std::exp(-2.0 * r2 / (wd * wd));
  return axial_fraction * radial * cos_inc;
}

double noise_variance(double received_power, const VcselParams& vcsel,
                      double temperature_k) {
  require(received_power >= 0, ErrorCode::InvalidParameter,
          "noise_variance: received_power must be >= 0");
  const double photocurrent = vcsel.responsivity * received_power;
  const double shot = 2.0 * kElectronCharge * photocurrent * vcsel.bandwidth;
  const double thermal =
      4.0 * kBoltzmann * temperature_k / vcsel.load_ohms * vcsel.bandwidth;
  const double rin = std::pow(10.0, vcsel.rin_db_hz / 10.0) * photocurrent *
                     photocurrent * vcsel.bandwidth;
  return shot + thermal + rin;
}

int matrix_rank(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = rel_tol * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

ChannelMatrix build_channel_matrix(const NetworkTopology& topo,
                                   const VcselParams& vcsel, int user,
                                   const ChannelBuildOptions& opts) {
  topo.validate();
  vcsel.validate();
  require(user >= 0 && user < topo.num_users(), ErrorCode::InvalidParameter,
          "build_channel_matrix: bad user index");
  const int num_aps = topo.num_aps();
  require(static_cast<int>(topo.mode_orientations.size()) >= num_aps,
          ErrorCode::InvalidParameter,
          "detector must provide at least L preset modes");

  ChannelMatrix cm;
  cm.user_id = user;
  cm.H.resize(num_aps, num_aps);
  const double area = topo.photodiode_area();
  for (int m = 0; m < num_aps; ++m)
    for (int l = 0; l < num_aps; ++l)
      cm.H(m, l) = los_gain(topo.ap_positions[l], topo.user_positions[user],
                            topo.mode_orientations[m], topo.fov_deg, vcsel,
                            area);

  const double peak = cm.H.maxCoeff();
  cm.noise_var = noise_variance(vcsel.tx_power * peak, vcsel,
                                opts.temperature_k);

  if (opts.require_full_rank && matrix_rank(cm.H) < num_aps)
    fail(ErrorCode::DegenerateGeometry,
         "degenerate geometry: rank-deficient channel matrix for user " +
             std::to_string(user));
  return cm;
}

std::vector<Vec3> pyramid_modes(int count, double tilt_deg) {
  require(count >= 1, ErrorCode::InvalidParameter, "need at least one mode");
  std::vector<Vec3> modes;
  modes.reserve(count);
  int tilted = count;
  if (count % 2 == 1) {
    modes.emplace_back(0.0, 0.0, 1.0);
    tilted = count - 1;
  }
  const double tilt = tilt_deg * kPi / 180.0;
  for (int i = 0; i < tilted; ++i) {
    const double az = 2.0 * kPi * i / tilted;
    modes.emplace_back(std::sin(tilt) * std::cos(az),
                       std::sin(tilt) * std::sin(az), std::cos(tilt));
  }
  return modes;
}

std::vector<Vec3> grid_ap_positions(const Vec3& room_dims, int nx, int ny) {
  require(nx >= 1 && ny >= 1, ErrorCode::InvalidParameter, "bad grid shape");
  std::vector<Vec3> aps;
  aps.reserve(static_cast<size_t>(nx) * ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      aps.emplace_back(room_dims.x() * (i + 0.5) / nx,
                       room_dims.y() * (j + 0.5) / ny, room_dims.z());
  return aps;
}

}  // namespace owc::channel
