#include "dataset/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bia/bia.hpp"
#include "util/rng.hpp"
#include "util/text.hpp"

namespace owc::dataset {

namespace {

channel::NetworkTopology base_topology(const ScenarioGenConfig& cfg) {
  channel::NetworkTopology topo;
  topo.room_dims = cfg.room_dims;
  topo.ap_positions =
      channel::grid_ap_positions(cfg.room_dims, cfg.grid_nx, cfg.grid_ny);
  topo.plane_gap = cfg.plane_gap;
  topo.num_photodiodes = cfg.num_photodiodes;
  topo.detector_area = cfg.detector_area;
  topo.fov_deg = cfg.fov_deg;
  topo.mode_orientations =
      channel::pyramid_modes(cfg.num_photodiodes, cfg.mode_tilt_deg);
  return topo;
}

channel::Vec3 draw_position(Rng& rng, const ScenarioGenConfig& cfg,
                            const channel::NetworkTopology& topo) {
  const double z = cfg.room_dims.z() - cfg.plane_gap;
  if (cfg.placement == Placement::UniformPlane) {
    return {rng.uniform(0.0, cfg.room_dims.x()),
            rng.uniform(0.0, cfg.room_dims.y()), z};
  }
  // Cell placement: uniform jitter disk around a random AP axis. Keeps the
  // user inside the beam footprint, which is centimetres wide at these
  // wavelengths.
  const auto& ap =
      topo.ap_positions[static_cast<size_t>(rng.uniform_index(topo.ap_positions.size()))];
  const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double rad = cfg.cell_jitter * std::sqrt(rng.uniform());
  double x = std::clamp(ap.x() + rad * std::cos(ang), 0.0, cfg.room_dims.x());
  double y = std::clamp(ap.y() + rad * std::sin(ang), 0.0, cfg.room_dims.y());
  return {x, y, z};
}

channel::VcselParams scenario_vcsel(const ScenarioGenConfig& cfg, double w0) {
  channel::VcselParams v = cfg.vcsel;
  if (w0 > 0) v.beam_waist = w0;
  return v;
}

double draw_beam_waist(Rng& rng, const ScenarioGenConfig& cfg) {
  if (cfg.w0_choices.empty()) return cfg.vcsel.beam_waist;
  if (cfg.w0_choices.size() == 1) return cfg.w0_choices[0];
  return cfg.w0_choices[static_cast<size_t>(rng.uniform_index(cfg.w0_choices.size()))];
}

}  // namespace

channel::NetworkTopology make_topology(const ScenarioGenConfig& cfg) {
  return base_topology(cfg);
}

Eigen::MatrixXd rate_matrix(const ScenarioGenConfig& cfg,
                            const std::vector<channel::Vec3>& positions,
                            double beam_waist, double stream_power) {
  channel::NetworkTopology topo = base_topology(cfg);
  topo.user_positions = positions;
  channel::VcselParams vcsel = scenario_vcsel(cfg, beam_waist);
  const int K = static_cast<int>(positions.size());
  const int L = topo.num_aps();
  Eigen::MatrixXd rates(K, L);
  channel::ChannelBuildOptions opts;
  opts.temperature_k = cfg.temperature_k;
  opts.require_full_rank = false;
  for (int k = 0; k < K; ++k) {
    auto cm = channel::build_channel_matrix(topo, vcsel, k, opts);
    for (int l = 0; l < L; ++l)
      rates(k, l) = bia::per_link_rate(cm, stream_power, l, L, K);
  }
  return rates;
}

double calibrate_stream_power(const ScenarioGenConfig& cfg,
                              std::uint64_t seed) {
  // Median best-mode gain and noise variance over seeded reference users,
  // at the smallest configured beam waist.
  channel::NetworkTopology topo = base_topology(cfg);
  double w0 = cfg.vcsel.beam_waist;
  for (double w : cfg.w0_choices) w0 = std::min(w0, w);
  if (!cfg.w0_choices.empty()) w0 = *std::min_element(cfg.w0_choices.begin(),
                                                      cfg.w0_choices.end());
  channel::VcselParams vcsel = scenario_vcsel(cfg, w0);

  Rng rng = Rng(seed).derive(0xca11b);
  const int reference_drops = 64;
  std::vector<double> snr_unit;  // gain^2 / (K * sigma^2) per user
  topo.user_positions.resize(1);
  for (int i = 0; i < reference_drops; ++i) {
    topo.user_positions[0] = draw_position(rng, cfg, topo);
    channel::ChannelBuildOptions opts;
    opts.temperature_k = cfg.temperature_k;
    opts.require_full_rank = false;
    auto cm = channel::build_channel_matrix(topo, vcsel, 0, opts);
    const double g = cm.H.maxCoeff();
    if (g > 0 && cm.noise_var > 0)
      snr_unit.push_back(g * g / (cfg.num_users * cm.noise_var));
  }
  require(!snr_unit.empty(), ErrorCode::DegenerateGeometry,
          "stream-power calibration: no user saw any AP");
  std::sort(snr_unit.begin(), snr_unit.end());
  const double med = snr_unit[snr_unit.size() / 2];
  return cfg.snr_target / med;
}

Scenario sample_scenario(std::uint64_t seed, const ScenarioGenConfig& cfg) {
  require(cfg.num_users >= 1, ErrorCode::InvalidParameter, "K must be >= 1");
  channel::NetworkTopology topo = base_topology(cfg);
  const int K = cfg.num_users;
  const int L = topo.num_aps();

  Rng rng(seed);
  Scenario sc;
  sc.seed = seed;
  sc.beam_waist = draw_beam_waist(rng, cfg);
  sc.stream_power = cfg.stream_power > 0
                        ? cfg.stream_power
                        : calibrate_stream_power(cfg, seed);
  channel::VcselParams vcsel = scenario_vcsel(cfg, sc.beam_waist);

  topo.user_positions.clear();
  for (int k = 0; k < K; ++k)
    topo.user_positions.push_back(draw_position(rng, cfg, topo));
  sc.user_positions = topo.user_positions;

  auto& p = sc.problem;
  p.e_min.resize(K);
  p.e_max.resize(K);
  p.weight.resize(K);
  p.capacity.resize(L);

  for (int attempt = 0;; ++attempt) {
    require(attempt < cfg.max_retries, ErrorCode::Infeasible,
            "could not draw a feasible requirement set");
    for (int k = 0; k < K; ++k) {
      p.e_max(k) = rng.uniform(cfg.e_max_lo, cfg.e_max_hi);
      p.e_min(k) = rng.uniform(cfg.e_min_lo,
                               std::max(cfg.e_min_lo, cfg.e_min_frac_hi * p.e_max(k)));
      p.weight(k) = rng.uniform(cfg.xi_lo, cfg.xi_hi);
    }
    // users must announce distinct requirements; redraw on collision
    bool collision = false;
    for (int a = 0; a < K && !collision; ++a)
      for (int b = a + 1; b < K && !collision; ++b)
        if (std::abs(p.e_min(a) - p.e_min(b)) < 1e-9 &&
            std::abs(p.e_max(a) - p.e_max(b)) < 1e-9)
          collision = true;
    if (collision) continue;
    const double unit = static_cast<double>(K) / L;
    for (int l = 0; l < L; ++l)
      p.capacity(l) =
          rng.uniform(cfg.cap_lo_scale * unit, cfg.cap_hi_scale * unit);
    if (p.e_min.sum() <= p.capacity.sum()) break;
  }

  p.rates.resize(K, L);
  channel::ChannelBuildOptions opts;
  opts.temperature_k = cfg.temperature_k;
  opts.require_full_rank = false;
  for (int k = 0; k < K; ++k) {
    auto cm = channel::build_channel_matrix(topo, vcsel, k, opts);
    for (int l = 0; l < L; ++l)
      p.rates(k, l) = bia::per_link_rate(cm, sc.stream_power, l, L, K);
  }
  p.validate();
  return sc;
}

Eigen::VectorXd feature_vector(const Scenario& sc) {
  const int K = sc.problem.num_users();
  const int L = sc.problem.num_aps();
  Eigen::VectorXd f(3 * K + L + K * L);
  f.segment(0, K) = sc.problem.e_min;
  f.segment(K, K) = sc.problem.e_max;
  f.segment(2 * K, K) = sc.problem.weight;
  f.segment(3 * K, L) = sc.problem.capacity;
  for (int k = 0; k < K; ++k)
    f.segment(3 * K + L + static_cast<long>(k) * L, L) =
        sc.problem.rates.row(k);
  return f;
}

namespace {

void finalize_normalization(Dataset& ds) {
  const int fd = ds.feature_dim();
  const int ld = ds.label_dim();
  ds.feat_min = Eigen::VectorXd::Zero(fd);
  ds.feat_max = Eigen::VectorXd::Zero(fd);
  ds.label_min = Eigen::VectorXd::Zero(ld);
  ds.label_max = Eigen::VectorXd::Zero(ld);
  for (int j = 0; j < fd; ++j) {
    double lo = ds.features[0](j), hi = lo;
    for (const auto& f : ds.features) {
      lo = std::min(lo, f(j));
      hi = std::max(hi, f(j));
    }
    ds.feat_min(j) = lo;
    ds.feat_max(j) = hi;
  }
  for (int j = 0; j < ld; ++j) {
    double lo = ds.labels[0](j), hi = lo;
    for (const auto& l : ds.labels) {
      lo = std::min(lo, l(j));
      hi = std::max(hi, l(j));
    }
    ds.label_min(j) = lo;
    ds.label_max(j) = hi;
  }
}

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& raw,
                                 const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
  Eigen::VectorXd out(raw.size());
  for (int j = 0; j < raw.size(); ++j) {
    const double span = hi(j) - lo(j);
    out(j) = span > 0 ? (raw(j) - lo(j)) / span : 0.0;
  }
  return out;
}

Eigen::VectorXd minmax_denormalize(const Eigen::VectorXd& normed,
                                   const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi) {
  Eigen::VectorXd out(normed.size());
  for (int j = 0; j < normed.size(); ++j)
    out(j) = lo(j) + normed(j) * (hi(j) - lo(j));
  return out;
}

}  // namespace

Eigen::VectorXd Dataset::normalize_features(const Eigen::VectorXd& raw) const {
  return minmax_normalize(raw, feat_min, feat_max);
}
Eigen::VectorXd Dataset::normalize_labels(const Eigen::VectorXd& raw) const {
  return minmax_normalize(raw, label_min, label_max);
}
Eigen::VectorXd Dataset::denormalize_labels(const Eigen::VectorXd& n) const {
  return minmax_denormalize(n, label_min, label_max);
}
Eigen::VectorXd Dataset::denormalize_features(const Eigen::VectorXd& n) const {
  return minmax_denormalize(n, feat_min, feat_max);
}

Dataset generate_dataset(int count, const ScenarioGenConfig& gen_cfg,
                         const alloc::DualSolverConfig& solver_cfg,
                         std::uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidParameter, "dataset size must be >= 1");
  Dataset ds;
  ds.seed = seed;
  Rng root(seed);

  // calibrate once so every sample shares the same stream power
  ScenarioGenConfig cfg = gen_cfg;
  if (cfg.stream_power <= 0)
    cfg.stream_power = calibrate_stream_power(cfg, seed);

  for (int i = 0; i < count; ++i) {
    const std::uint64_t sample_seed = root.derive(static_cast<std::uint64_t>(i) + 1).next_u64();
    try {
      Scenario sc = sample_scenario(sample_seed, cfg);
      auto sol = alloc::solve_dual(sc.problem, solver_cfg);
      if (!sol.feasible) {
        ++ds.dropped;
        continue;
      }
      Eigen::VectorXd label(static_cast<long>(sc.problem.num_users()) *
                            sc.problem.num_aps());
      for (int k = 0; k < sc.problem.num_users(); ++k)
        label.segment(static_cast<long>(k) * sc.problem.num_aps(),
                      sc.problem.num_aps()) = sol.e.row(k);
      ds.features.push_back(feature_vector(sc));
      ds.labels.push_back(std::move(label));
      ds.num_users = sc.problem.num_users();
      ds.num_aps = sc.problem.num_aps();
    } catch (const Error&) {
      ++ds.dropped;
    }
  }
  require(ds.size() > 0, ErrorCode::Infeasible,
          "dataset generation produced no usable samples");
  finalize_normalization(ds);
  return ds;
}

SplitResult split_dataset(const Dataset& ds, double train_fraction,
                          std::uint64_t seed) {
  require(train_fraction > 0 && train_fraction < 1, ErrorCode::InvalidParameter,
          "train_fraction must be in (0, 1)");
  const int n = ds.size();
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(idx[i], idx[static_cast<size_t>(rng.uniform_index(i + 1))]);

  const int train_n = static_cast<int>(std::lround(train_fraction * n));
  SplitResult out;
  auto copy_meta = [&](Dataset& d) {
    d.num_users = ds.num_users;
    d.num_aps = ds.num_aps;
    d.seed = ds.seed;
    d.feat_min = ds.feat_min;
    d.feat_max = ds.feat_max;
    d.label_min = ds.label_min;
    d.label_max = ds.label_max;
  };
  copy_meta(out.train);
  copy_meta(out.validation);
  for (int i = 0; i < n; ++i) {
    Dataset& dst = i < train_n ? out.train : out.validation;
    dst.features.push_back(ds.features[idx[i]]);
    dst.labels.push_back(ds.labels[idx[i]]);
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out << "# owc-dataset v1\n";
  out << "# K=" << ds.num_users << " L=" << ds.num_aps << " seed=" << ds.seed
      << " dropped=" << ds.dropped << "\n";
  out << "# feature_layout=emin,emax,xi,rho,rates\n";
  auto write_vec = [&](const char* tag, const Eigen::VectorXd& v) {
    out << "# " << tag << "=";
    for (int j = 0; j < v.size(); ++j)
      out << (j ? "," : "") << fmt_double(v(j));
    out << "\n";
  };
  write_vec("fmin", ds.feat_min);
  write_vec("fmax", ds.feat_max);
  write_vec("lmin", ds.label_min);
  write_vec("lmax", ds.label_max);
  const int fd = ds.feature_dim();
  const int ld = ds.label_dim();
  for (int j = 0; j < fd; ++j) out << (j ? "," : "") << "f" << j;
  for (int j = 0; j < ld; ++j) out << ",e" << j;
  out << "\n";
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < fd; ++j)
      out << (j ? "," : "") << fmt_double(ds.features[i](j));
    for (int j = 0; j < ld; ++j) out << "," << fmt_double(ds.labels[i](j));
    out << "\n";
  }
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

namespace {

Eigen::VectorXd parse_vec(const std::string& csv, const std::string& ctx) {
  auto parts = split(csv, ',');
  Eigen::VectorXd v(static_cast<long>(parts.size()));
  for (size_t j = 0; j < parts.size(); ++j)
    v(static_cast<long>(j)) = parse_double(parts[j], ctx);
  return v;
}

}  // namespace

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  Dataset ds;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  int fd = -1, ld = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string ctx = path + ":" + std::to_string(lineno);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto meta = trim(t.substr(1));
      if (meta.rfind("K=", 0) == 0) {
        std::istringstream ms(meta);
        std::string tok;
        while (ms >> tok) {
          auto eq = tok.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = tok.substr(0, eq);
          const std::string val = tok.substr(eq + 1);
          if (key == "K") ds.num_users = static_cast<int>(parse_long(val, ctx));
          else if (key == "L") ds.num_aps = static_cast<int>(parse_long(val, ctx));
          else if (key == "seed") ds.seed = static_cast<std::uint64_t>(parse_long(val, ctx));
          else if (key == "dropped") ds.dropped = static_cast<int>(parse_long(val, ctx));
        }
      } else if (meta.rfind("fmin=", 0) == 0) {
        ds.feat_min = parse_vec(meta.substr(5), ctx);
      } else if (meta.rfind("fmax=", 0) == 0) {
        ds.feat_max = parse_vec(meta.substr(5), ctx);
      } else if (meta.rfind("lmin=", 0) == 0) {
        ds.label_min = parse_vec(meta.substr(5), ctx);
      } else if (meta.rfind("lmax=", 0) == 0) {
        ds.label_max = parse_vec(meta.substr(5), ctx);
      }
      continue;
    }
    if (!header_seen) {
      auto cols = split(t, ',');
      fd = 0;
      ld = 0;
      for (const auto& c : cols) {
        if (!c.empty() && c[0] == 'f') ++fd;
        else if (!c.empty() && c[0] == 'e') ++ld;
        else fail(ErrorCode::ParseError, ctx + ": unexpected column '" + c + "'");
      }
      require(fd > 0 && ld > 0, ErrorCode::ParseError,
              ctx + ": header names no feature/label columns");
      const int expected_fd = 3 * ds.num_users + ds.num_aps +
                              ds.num_users * ds.num_aps;
      require(fd == expected_fd && ld == ds.num_users * ds.num_aps,
              ErrorCode::ParseError, ctx + ": header does not match K/L metadata");
      header_seen = true;
      continue;
    }
    auto parts = split(t, ',');
    require(static_cast<int>(parts.size()) == fd + ld, ErrorCode::ParseError,
            ctx + ": truncated row (" + std::to_string(parts.size()) +
                " of " + std::to_string(fd + ld) + " values)");
    Eigen::VectorXd f(fd), l(ld);
    for (int j = 0; j < fd; ++j) f(j) = parse_double(parts[j], ctx);
    for (int j = 0; j < ld; ++j) l(j) = parse_double(parts[fd + j], ctx);
    ds.features.push_back(std::move(f));
    ds.labels.push_back(std::move(l));
  }
  require(header_seen && ds.size() > 0, ErrorCode::ParseError,
          path + ": no data rows");
  require(ds.feat_min.size() == ds.feature_dim() &&
              ds.label_min.size() == ds.label_dim(),
          ErrorCode::ParseError, path + ": missing normalization metadata");
  return ds;
}

void write_problem(const alloc::AllocationProblem& problem,
                   const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  const int K = problem.num_users();
  const int L = problem.num_aps();
  out << "# owc-problem v1\n";
  out << "K " << K << "\nL " << L << "\n";
  out << "rates\n";
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l)
      out << (l ? " " : "") << fmt_double(problem.rates(k, l));
    out << "\n";
  }
  auto row = [&](const char* tag, const Eigen::VectorXd& v) {
    out << tag;
    for (int j = 0; j < v.size(); ++j) out << " " << fmt_double(v(j));
    out << "\n";
  };
  row("emin", problem.e_min);
  row("emax", problem.e_max);
  row("xi", problem.weight);
  row("rho", problem.capacity);
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

alloc::AllocationProblem read_problem(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  alloc::AllocationProblem p;
  int K = -1, L = -1;
  std::string line;
  int lineno = 0;
  int rate_row = -1;  // >= 0 while reading the rate matrix
  auto ctx = [&]() { return path + ":" + std::to_string(lineno); };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (rate_row >= 0 && rate_row < K) {
      std::istringstream ls(t);
      p.rates.conservativeResize(K, L);
      for (int l = 0; l < L; ++l) {
        std::string tok;
        require(static_cast<bool>(ls >> tok), ErrorCode::ParseError,
                ctx() + ": rate row " + std::to_string(rate_row) + " truncated");
        p.rates(rate_row, l) = parse_double(tok, ctx());
      }
      ++rate_row;
      continue;
    }
    std::istringstream ls(t);
    std::string tag;
    ls >> tag;
    auto read_vec = [&](int n) {
      Eigen::VectorXd v(n);
      for (int j = 0; j < n; ++j) {
        std::string tok;
        require(static_cast<bool>(ls >> tok), ErrorCode::ParseError,
                ctx() + ": expected " + std::to_string(n) + " values after " + tag);
        v(j) = parse_double(tok, ctx());
      }
      return v;
    };
    if (tag == "K") K = static_cast<int>(parse_long(t.substr(1), ctx()));
    else if (tag == "L") L = static_cast<int>(parse_long(t.substr(1), ctx()));
    else if (tag == "rates") {
      require(K > 0 && L > 0, ErrorCode::ParseError,
              ctx() + ": K and L must precede rates");
      rate_row = 0;
    } else if (tag == "emin") p.e_min = read_vec(K);
    else if (tag == "emax") p.e_max = read_vec(K);
    else if (tag == "xi") p.weight = read_vec(K);
    else if (tag == "rho") p.capacity = read_vec(L);
    else fail(ErrorCode::ParseError, ctx() + ": unknown tag '" + tag + "'");
  }
  require(K > 0 && L > 0 && rate_row == K && p.e_min.size() == K &&
              p.e_max.size() == K && p.weight.size() == K &&
              p.capacity.size() == L,
          ErrorCode::ParseError, path + ": incomplete problem file");
  p.validate();
  return p;
}

}  // namespace owc::dataset
