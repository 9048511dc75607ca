#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "harness/harness.hpp"

using namespace owc;
using namespace owc::harness;

namespace {

namespace fs = std::filesystem;

// tiny but complete experiment setup: 2x2 grid, 2 users, short training run
ExperimentConfig small_experiment(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.scenario.grid_nx = 2;
  cfg.scenario.grid_ny = 2;
  cfg.scenario.num_users = 2;
  cfg.scenario.num_photodiodes = 4;
  cfg.scenario.stream_power = 5.0;
  cfg.solver.max_iters = 150;
  cfg.solver.eval_stride = 4;
  cfg.arch = "dense:16";
  cfg.training.epochs = 2;
  cfg.training.batch_size = 8;
  cfg.beam_waists = {10e-6, 20e-6};
  cfg.dataset_sizes = {40, 60};
  cfg.seeds = {1};
  cfg.cdf_drops = 5;
  cfg.surrogate_train_n = 60;
  cfg.out_dir = out_dir;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name)
      : path(fs::temp_directory_path() / (std::string("owc_harness_") + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("ExperimentConfig::from_ini maps keys and defaults") {
  Ini ini;
  ini.set("room.users", "6");
  ini.set("channel.beam_waist_um", "25");
  ini.set("channel.detector_area_mm2", "20");
  ini.set("solver.max_iters", "123");
  ini.set("surrogate.epochs", "7");
  ini.set("experiments.w0_list_um", "10,20");
  ini.set("experiments.seeds", "4,5");
  ini.set("experiments.placement", "uniform");
  ini.set("experiments.cell_jitter_cm", "2.5");
  auto cfg = ExperimentConfig::from_ini(ini);
  CHECK(cfg.scenario.num_users == 6);
  CHECK(cfg.scenario.vcsel.beam_waist == doctest::Approx(25e-6));
  CHECK(cfg.scenario.detector_area == doctest::Approx(20e-6));
  CHECK(cfg.scenario.placement == dataset::Placement::UniformPlane);
  CHECK(cfg.scenario.cell_jitter == doctest::Approx(2.5e-2));
  CHECK(cfg.solver.max_iters == 123);
  CHECK(cfg.training.epochs == 7);
  REQUIRE(cfg.beam_waists.size() == 2);
  CHECK(cfg.beam_waists[1] == doctest::Approx(20e-6));
  REQUIRE(cfg.seeds.size() == 2);
  CHECK(cfg.seeds[0] == 4);
  // untouched keys keep their defaults
  CHECK(cfg.scenario.grid_nx == 4);
  CHECK(cfg.scenario.vcsel.wavelength == doctest::Approx(830e-9));
  CHECK(cfg.cdf_drops == 100);

  Ini bad;
  bad.set("experiments.placement", "corner");
  CHECK_THROWS_AS(ExperimentConfig::from_ini(bad), Error);
}

TEST_CASE("sum_rate") {
  alloc::AllocationProblem p;
  p.rates.resize(2, 2);
  p.rates << 1.0, 2.0,
             3.0, 4.0;
  Eigen::MatrixXd e(2, 2);
  e << 0.5, 0.0,
       0.0, 0.25;
  // [DERIVED] 0.5*1 + 0.25*4 = 1.5
  CHECK(sum_rate(e, p) == doctest::Approx(1.5));
  // [TRIVIAL] zero allocation -> zero rate
  CHECK(sum_rate(Eigen::MatrixXd::Zero(2, 2), p) == doctest::Approx(0.0));
}

TEST_CASE("training curves CSV shape") {
  TempDir dir("curves");
  auto cfg = small_experiment(dir.path.string());
  const std::string path = run_training_curves(cfg);
  const std::string text = slurp(path);
  CHECK(text.rfind("epoch,train_mse,val_mse,dataset_size,seed\n", 0) == 0);
  // 2 epochs x 2 sizes x 1 seed + header
  CHECK(count_lines(text) == 1 + 2 * 2);
  CHECK(text.find(",40,1\n") != std::string::npos);
  CHECK(text.find(",60,1\n") != std::string::npos);

  // identical configuration reproduces the file byte for byte
  TempDir dir2("curves2");
  auto cfg2 = small_experiment(dir2.path.string());
  CHECK(slurp(run_training_curves(cfg2)) == text);
}

TEST_CASE("beam-waist sweep CSV shape and method set") {
  TempDir dir("sweep");
  auto cfg = small_experiment(dir.path.string());
  const std::string path = run_beamwaist_sweep(cfg);
  const std::string text = slurp(path);
  CHECK(text.rfind("w0_um,method,sum_rate\n", 0) == 0);
  // 2 waists x 3 methods + header
  CHECK(count_lines(text) == 1 + 2 * 3);
  CHECK(text.find("10,dual,") != std::string::npos);
  CHECK(text.find("20,surrogate,") != std::string::npos);
  CHECK(text.find("10,uniform,") != std::string::npos);
}

TEST_CASE("cdf experiment CSV shape") {
  TempDir dir("cdf");
  auto cfg = small_experiment(dir.path.string());
  const std::string path = run_cdf_experiment(cfg);
  const std::string text = slurp(path);
  CHECK(text.rfind("method,drop,sum_rate\n", 0) == 0);
  CHECK(count_lines(text) == 1 + 3 * cfg.cdf_drops);
  CHECK(text.find("dual,0,") != std::string::npos);
  CHECK(text.find("uniform,4,") != std::string::npos);
}

TEST_CASE("emit_report renders one SVG per known CSV") {
  TempDir csvs("report_in");
  TempDir out("report_out");
  {
    std::ofstream f(csvs.path / "beamwaist_sweep.csv");
    f << "w0_um,method,sum_rate\n10,dual,2\n20,dual,3\n10,uniform,1\n20,uniform,1.5\n";
    std::ofstream g(csvs.path / "cdf.csv");
    g << "method,drop,sum_rate\ndual,0,2\ndual,1,3\nuniform,0,1\nuniform,1,2\n";
  }
  auto written = emit_report(csvs.path.string(), out.path.string());
  REQUIRE(written.size() == 2);
  for (const auto& p : written) {
    const std::string svg = slurp(p);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
  const std::string sweep_svg = slurp((out.path / "beamwaist_sweep.svg").string());
  CHECK(sweep_svg.find("dual") != std::string::npos);
  CHECK(sweep_svg.find("uniform") != std::string::npos);

  // determinism: a second render is byte identical
  TempDir out2("report_out2");
  auto again = emit_report(csvs.path.string(), out2.path.string());
  CHECK(slurp(again[0]) == slurp(written[0]));

  // a directory without any known CSV is an error
  TempDir empty("report_empty");
  CHECK_THROWS_AS(emit_report(empty.path.string(), out.path.string()), Error);
}
