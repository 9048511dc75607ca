#include "harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "util/rng.hpp"
#include "util/svg.hpp"
#include "util/text.hpp"

namespace owc::harness {

namespace fs = std::filesystem;

ExperimentConfig ExperimentConfig::from_ini(const Ini& ini) {
  ExperimentConfig cfg;
  auto& sc = cfg.scenario;

  auto dims = ini.get_list("room.dims_m", {5.0, 5.0, 3.0});
  require(dims.size() == 3, ErrorCode::InvalidParameter,
          "room.dims_m needs three values");
  sc.room_dims = {dims[0], dims[1], dims[2]};
  sc.grid_nx = static_cast<int>(ini.get_long("room.grid_nx", 4));
  sc.grid_ny = static_cast<int>(ini.get_long("room.grid_ny", 4));
  sc.num_users = static_cast<int>(ini.get_long("room.users", 10));
  sc.plane_gap = ini.get_double("room.plane_gap_m", 2.15);

  sc.vcsel.wavelength = ini.get_double("channel.wavelength_nm", 830.0) * 1e-9;
  sc.vcsel.beam_waist = ini.get_double("channel.beam_waist_um", 10.0) * 1e-6;
  sc.vcsel.tx_power = ini.get_double("channel.tx_power_mw", 10.0) * 1e-3;
  sc.vcsel.bandwidth = ini.get_double("channel.bandwidth_ghz", 5.0) * 1e9;
  sc.vcsel.rin_db_hz = ini.get_double("channel.rin_db_hz", -155.0);
  sc.vcsel.responsivity = ini.get_double("channel.responsivity_a_w", 0.53);
  sc.vcsel.load_ohms = ini.get_double("channel.load_ohms", 50.0);
  sc.vcsel.eq3_literal = ini.get_bool("channel.eq3_literal", false);
  sc.detector_area = ini.get_double("channel.detector_area_mm2", 15.0) * 1e-6;
  sc.num_photodiodes = static_cast<int>(ini.get_long("channel.photodiodes", 16));
  sc.fov_deg = ini.get_double("channel.fov_deg", 45.0);
  sc.mode_tilt_deg = ini.get_double("channel.mode_tilt_deg", 25.0);
  sc.temperature_k = ini.get_double("channel.temperature_k", 300.0);

  const std::string placement = ini.get("experiments.placement", "cell");
  if (placement == "cell") sc.placement = dataset::Placement::Cell;
  else if (placement == "uniform") sc.placement = dataset::Placement::UniformPlane;
  else fail(ErrorCode::InvalidParameter, "experiments.placement must be cell|uniform");
  sc.cell_jitter = ini.get_double("experiments.cell_jitter_cm", 1.0) * 1e-2;

  sc.e_max_lo = ini.get_double("experiments.e_max_lo", 1.0);
  sc.e_max_hi = ini.get_double("experiments.e_max_hi", 5.0);
  sc.e_min_lo = ini.get_double("experiments.e_min_lo", 0.1);
  sc.e_min_frac_hi = ini.get_double("experiments.e_min_frac_hi", 0.5);
  sc.xi_lo = ini.get_double("experiments.xi_lo", 1.0);
  sc.xi_hi = ini.get_double("experiments.xi_hi", 1.0);
  sc.cap_lo_scale = ini.get_double("experiments.cap_lo_scale", 1.0);
  sc.cap_hi_scale = ini.get_double("experiments.cap_hi_scale", 3.0);
  sc.stream_power = ini.get_double("solver.p_str", -1.0);
  sc.snr_target = ini.get_double("solver.snr_target", 100.0);

  cfg.solver.tol_scale = ini.get_double("solver.tol", 1e-4);
  cfg.solver.max_iters = ini.get_long("solver.max_iters", 800);
  cfg.solver.init_multiplier = ini.get_double("solver.init_multiplier", 0.1);
  cfg.solver.schedule.numerator = ini.get_double("solver.step_a", 0.1);
  cfg.solver.schedule.offset = ini.get_double("solver.step_b", 10.0);
  cfg.solver.eval_stride = ini.get_long("solver.eval_stride", 4);

  cfg.arch = ini.get("surrogate.arch", "conv:8:3,dense:128");
  cfg.training.epochs = static_cast<int>(ini.get_long("surrogate.epochs", 40));
  cfg.training.learning_rate = ini.get_double("surrogate.lr", 0.3);
  cfg.training.momentum = ini.get_double("surrogate.momentum", 0.9);
  cfg.training.batch_size = static_cast<int>(ini.get_long("surrogate.batch", 32));
  cfg.training.seed = static_cast<std::uint64_t>(ini.get_long("surrogate.seed", 1));
  cfg.training.output_layout = ini.get("surrogate.output_layout", "matrix");

  auto w0s = ini.get_list("experiments.w0_list_um", {10, 15, 20, 25, 30});
  for (double w : w0s) cfg.beam_waists.push_back(w * 1e-6);
  auto sizes = ini.get_list("experiments.dataset_sizes", {5000, 10000});
  for (double n : sizes) cfg.dataset_sizes.push_back(static_cast<long>(n));
  auto seeds = ini.get_list("experiments.seeds", {1, 2, 3});
  for (double s : seeds) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  cfg.cdf_drops = static_cast<int>(ini.get_long("experiments.cdf_drops", 100));
  cfg.refine_iters = ini.get_long("experiments.refine_iters", 5);
  cfg.surrogate_train_n = ini.get_long("experiments.surrogate_train_n", 3000);
  cfg.seed = static_cast<std::uint64_t>(ini.get_long("experiments.seed", 1));
  return cfg;
}

double sum_rate(const Eigen::MatrixXd& e, const alloc::AllocationProblem& p) {
  return e.cwiseProduct(p.rates).sum();
}

namespace {

dataset::Dataset subset(const dataset::Dataset& ds, long n) {
  require(n >= 1 && n <= ds.size(), ErrorCode::InvalidParameter,
          "subset size out of range");
  dataset::Dataset out = ds;
  out.features.assign(ds.features.begin(), ds.features.begin() + n);
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
  // recompute min-max constants on the subset
  for (int j = 0; j < out.feature_dim(); ++j) {
    double lo = out.features[0](j), hi = lo;
    for (const auto& f : out.features) {
      lo = std::min(lo, f(j));
      hi = std::max(hi, f(j));
    }
    out.feat_min(j) = lo;
    out.feat_max(j) = hi;
  }
  for (int j = 0; j < out.label_dim(); ++j) {
    double lo = out.labels[0](j), hi = lo;
    for (const auto& l : out.labels) {
      lo = std::min(lo, l(j));
      hi = std::max(hi, l(j));
    }
    out.label_min(j) = lo;
    out.label_max(j) = hi;
  }
  return out;
}

std::ofstream open_csv(const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  return out;
}

dataset::ScenarioGenConfig sweep_scenario_cfg(const ExperimentConfig& cfg) {
  dataset::ScenarioGenConfig sc = cfg.scenario;
  sc.w0_choices = cfg.beam_waists;
  return sc;
}

}  // namespace

surrogate::SurrogateModel train_experiment_model(const ExperimentConfig& cfg,
                                                 long dataset_size,
                                                 std::uint64_t seed) {
  dataset::ScenarioGenConfig sc = sweep_scenario_cfg(cfg);
  auto ds = dataset::generate_dataset(static_cast<int>(dataset_size), sc,
                                      cfg.solver, seed);
  auto splitd = dataset::split_dataset(ds, 0.9, seed);
  const int out_dim = cfg.training.output_layout == "matrix"
                          ? ds.num_users * ds.num_aps
                          : ds.num_users + ds.num_aps;
  surrogate::TrainConfig tc = cfg.training;
  tc.seed = seed;
  auto model = surrogate::init_model(surrogate::parse_arch(cfg.arch),
                                     ds.feature_dim(), out_dim, seed);
  return surrogate::train(std::move(model), splitd.train, splitd.validation, tc);
}

std::string run_training_curves(const ExperimentConfig& cfg) {
  require(!cfg.dataset_sizes.empty() && !cfg.seeds.empty(),
          ErrorCode::InvalidParameter, "training curves need sizes and seeds");
  const std::string path =
      (fs::path(cfg.out_dir) / "training_curves.csv").string();
  auto out = open_csv(path);
  out << "epoch,train_mse,val_mse,dataset_size,seed\n";

  const long max_n =
      *std::max_element(cfg.dataset_sizes.begin(), cfg.dataset_sizes.end());
  dataset::ScenarioGenConfig sc = sweep_scenario_cfg(cfg);
  for (std::uint64_t seed : cfg.seeds) {
    auto full = dataset::generate_dataset(static_cast<int>(max_n), sc,
                                          cfg.solver, seed);
    for (long n : cfg.dataset_sizes) {
      auto ds = n == full.size() ? full : subset(full, std::min<long>(n, full.size()));
      auto splitd = dataset::split_dataset(ds, 0.9, seed);
      const int out_dim = cfg.training.output_layout == "matrix"
                              ? ds.num_users * ds.num_aps
                              : ds.num_users + ds.num_aps;
      surrogate::TrainConfig tc = cfg.training;
      tc.seed = seed;
      auto model = surrogate::init_model(surrogate::parse_arch(cfg.arch),
                                         ds.feature_dim(), out_dim, seed);
      model = surrogate::train(std::move(model), splitd.train,
                               splitd.validation, tc);
      for (size_t epoch = 0; epoch < model.history.size(); ++epoch)
        out << (epoch + 1) << "," << fmt_double(model.history[epoch].first)
            << "," << fmt_double(model.history[epoch].second) << "," << n
            << "," << seed << "\n";
    }
  }
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
  return path;
}

std::string run_beamwaist_sweep(const ExperimentConfig& cfg) {
  require(!cfg.beam_waists.empty(), ErrorCode::InvalidParameter,
          "sweep needs beam waists");
  const std::string path =
      (fs::path(cfg.out_dir) / "beamwaist_sweep.csv").string();
  auto out = open_csv(path);
  out << "w0_um,method,sum_rate\n";

  dataset::ScenarioGenConfig sc = sweep_scenario_cfg(cfg);
  if (sc.stream_power <= 0)
    sc.stream_power = dataset::calibrate_stream_power(sc, cfg.seed);

  auto model = train_experiment_model(cfg, cfg.surrogate_train_n, cfg.seed);

  // one fixed drop: positions and requirements held across the sweep
  dataset::ScenarioGenConfig fixed = sc;
  fixed.w0_choices = {cfg.beam_waists.front()};
  dataset::Scenario base = dataset::sample_scenario(cfg.seed + 0x5eed, fixed);

  for (double w0 : cfg.beam_waists) {
    dataset::Scenario drop = base;
    drop.beam_waist = w0;
    drop.problem.rates =
        dataset::rate_matrix(sc, base.user_positions, w0, base.stream_power);
    drop.problem.validate();

    auto dual = alloc::solve_dual(drop.problem, cfg.solver);
    auto uniform = alloc::uniform_allocation(drop.problem);
    auto sur = surrogate::predict_and_repair(model, drop, cfg.refine_iters,
                                             cfg.solver);
    // micrometre sweep points are exact after rounding away the unit
    // conversion error
    const double w0_um = std::round(w0 * 1e9) / 1e3;
    out << fmt_double(w0_um) << ",dual," << fmt_double(sum_rate(dual.e, drop.problem)) << "\n";
    out << fmt_double(w0_um) << ",surrogate," << fmt_double(sum_rate(sur.e, drop.problem)) << "\n";
    out << fmt_double(w0_um) << ",uniform," << fmt_double(sum_rate(uniform.e, drop.problem)) << "\n";
  }
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
  return path;
}

std::string run_cdf_experiment(const ExperimentConfig& cfg) {
  require(cfg.cdf_drops >= 1, ErrorCode::InvalidParameter, "cdf needs drops");
  const std::string path = (fs::path(cfg.out_dir) / "cdf.csv").string();
  auto out = open_csv(path);
  out << "method,drop,sum_rate\n";

  dataset::ScenarioGenConfig sc = sweep_scenario_cfg(cfg);
  if (sc.stream_power <= 0)
    sc.stream_power = dataset::calibrate_stream_power(sc, cfg.seed);
  auto model = train_experiment_model(cfg, cfg.surrogate_train_n, cfg.seed);

  Rng root(cfg.seed ^ 0xcdfcdfULL);
  for (int drop = 0; drop < cfg.cdf_drops; ++drop) {
    const std::uint64_t s = root.derive(static_cast<std::uint64_t>(drop) + 1).next_u64();
    dataset::Scenario scen = dataset::sample_scenario(s, sc);
    auto dual = alloc::solve_dual(scen.problem, cfg.solver);
    auto uniform = alloc::uniform_allocation(scen.problem);
    auto sur = surrogate::predict_and_repair(model, scen, cfg.refine_iters,
                                             cfg.solver);
    out << "dual," << drop << "," << fmt_double(sum_rate(dual.e, scen.problem)) << "\n";
    out << "surrogate," << drop << "," << fmt_double(sum_rate(sur.e, scen.problem)) << "\n";
    out << "uniform," << drop << "," << fmt_double(sum_rate(uniform.e, scen.problem)) << "\n";
  }
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
  return path;
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoError, "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    rows.push_back(split(trim(line), ','));
    require(rows.back().size() == rows.front().size(), ErrorCode::ParseError,
            path + ":" + std::to_string(lineno) + ": ragged row");
  }
  require(rows.size() >= 2, ErrorCode::ParseError, path + ": no data rows");
  return rows;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError, "cannot write " + path);
  out << text;
  require(out.good(), ErrorCode::IoError, "write failed for " + path);
}

}  // namespace

std::vector<std::string> emit_report(const std::string& csv_dir,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  const auto curves_csv = fs::path(csv_dir) / "training_curves.csv";
  if (fs::exists(curves_csv)) {
    auto rows = read_csv_rows(curves_csv.string());
    // series keyed by (kind, dataset_size, seed); averaged over nothing
    std::map<std::string, PlotSeries> series;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      const std::string ctx = curves_csv.string();
      const double epoch = parse_double(r[0], ctx);
      const std::string suffix = " N=" + r[3] + " seed=" + r[4];
      series["t" + suffix].label = "train" + suffix;
      series["t" + suffix].points.emplace_back(epoch, parse_double(r[1], ctx));
      series["v" + suffix].label = "val" + suffix;
      series["v" + suffix].points.emplace_back(epoch, parse_double(r[2], ctx));
    }
    std::vector<PlotSeries> list;
    for (auto& [key, s] : series) list.push_back(s);
    const std::string path = (fs::path(out_dir) / "training_curves.svg").string();
    write_text(path, line_plot_svg("Training and validation loss", "epoch",
                                   "MSE", list));
    written.push_back(path);
  }

  const auto sweep_csv = fs::path(csv_dir) / "beamwaist_sweep.csv";
  if (fs::exists(sweep_csv)) {
    auto rows = read_csv_rows(sweep_csv.string());
    std::map<std::string, PlotSeries> series;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      series[r[1]].label = r[1];
      series[r[1]].points.emplace_back(parse_double(r[0], sweep_csv.string()),
                                       parse_double(r[2], sweep_csv.string()));
    }
    std::vector<PlotSeries> list;
    for (auto& [key, s] : series) {
      std::sort(s.points.begin(), s.points.end());
      list.push_back(s);
    }
    const std::string path = (fs::path(out_dir) / "beamwaist_sweep.svg").string();
    write_text(path, line_plot_svg("Sum rate vs beam waist", "W0 (um)",
                                   "sum rate (bit/s/Hz)", list));
    written.push_back(path);
  }

  const auto cdf_csv = fs::path(csv_dir) / "cdf.csv";
  if (fs::exists(cdf_csv)) {
    auto rows = read_csv_rows(cdf_csv.string());
    std::map<std::string, std::vector<double>> samples;
    for (size_t i = 1; i < rows.size(); ++i)
      samples[rows[i][0]].push_back(parse_double(rows[i][2], cdf_csv.string()));
    std::vector<PlotSeries> list;
    for (auto& [method, vals] : samples) {
      std::sort(vals.begin(), vals.end());
      PlotSeries s;
      s.label = method;
      for (size_t i = 0; i < vals.size(); ++i)
        s.points.emplace_back(vals[i],
                              static_cast<double>(i + 1) / vals.size());
      list.push_back(std::move(s));
    }
    const std::string path = (fs::path(out_dir) / "cdf.svg").string();
    write_text(path, line_plot_svg("Sum-rate CDF", "sum rate (bit/s/Hz)",
                                   "CDF", list));
    written.push_back(path);
  }

  require(!written.empty(), ErrorCode::IoError,
          "no known experiment CSVs found in " + csv_dir);
  return written;
}

}  // namespace owc::harness
