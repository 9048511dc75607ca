// owcnet: CLI front end for the owc library. Talks to the core exclusively
// through the C API in owc/capi.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "owc/capi.h"

namespace {

struct ConfigDeleter {
  void operator()(owc_config* c) const { owc_config_free(c); }
};
using ConfigPtr = std::unique_ptr<owc_config, ConfigDeleter>;

[[noreturn]] void die(owc_status status) {
  std::fprintf(stderr, "owcnet: %s: %s\n", owc_status_name(status),
               owc_last_error());
  std::exit(1);
}

void check(owc_status status) {
  if (status != OWC_OK) die(status);
}

struct GlobalOpts {
  std::string config_path;
  long seed = 1;
  std::string out_dir = ".";
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Loads --config (when given) and applies per-subcommand overrides.
ConfigPtr make_config(const GlobalOpts& g) {
  owc_config* cfg = nullptr;
  if (g.config_path.empty())
    check(owc_config_create(&cfg));
  else
    check(owc_config_load(g.config_path.c_str(), &cfg));
  ConfigPtr out(cfg);
  for (const auto& [key, value] : g.overrides)
    check(owc_config_set(cfg, key.c_str(), value.c_str()));
  return out;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VCSEL optical wireless downlink: BIA rates, resource "
               "allocation and the neural surrogate"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "structured text config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed (default 1)");
  app.add_option("--out-dir", g.out_dir, "output directory (default .)");

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset",
                                 "generate a solver-labeled scenario dataset");
  long gen_n = 1000;
  std::string gen_out = "dataset.csv";
  gen->add_option("--n", gen_n, "number of samples");
  gen->add_option("--out", gen_out, "output CSV");

  // train
  auto* train = app.add_subcommand("train", "train the neural surrogate");
  std::string train_dataset, train_arch, train_out = "weights.txt";
  long train_epochs = -1;
  double train_lr = -1;
  train->add_option("--dataset", train_dataset, "dataset CSV")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--arch", train_arch,
                    "architecture, e.g. conv:8:3,dense:32");
  train->add_option("--epochs", train_epochs, "training epochs");
  train->add_option("--lr", train_lr, "learning rate");
  train->add_option("--out", train_out, "weights file to write");

  // solve
  auto* solve = app.add_subcommand("solve", "solve an allocation problem file");
  std::string solve_problem, solve_method = "dual";
  double solve_tol = -1, solve_grid = -1;
  long solve_iters = -1;
  solve->add_option("--problem", solve_problem, "problem file")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--method", solve_method, "dual | exhaustive | uniform");
  solve->add_option("--tol", solve_tol, "dual tolerance scale");
  solve->add_option("--max-iters", solve_iters, "dual iteration cap");
  solve->add_option("--grid-step", solve_grid, "exhaustive grid step");

  // predict
  auto* predict = app.add_subcommand("predict",
                                     "surrogate prediction for a scenario");
  std::string pred_weights, pred_scenario;
  long pred_refine = 5;
  predict->add_option("--weights", pred_weights, "weights file")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--scenario", pred_scenario, "problem/scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--refine", pred_refine,
                      "warm-started dual refinement iterations");

  // verify-bia
  auto* verify = app.add_subcommand("verify-bia",
                                    "build a supersymbol and check decoding");
  int bia_l = 3, bia_k = 2, bia_draws = 100;
  bool bia_plan = false;
  verify->add_option("-L,--aps", bia_l, "preset modes / APs (L)");
  verify->add_option("-K,--users", bia_k, "users (K)");
  verify->add_option("--draws", bia_draws, "random channel draws");
  verify->add_flag("--plan", bia_plan, "also print the slot-by-slot plan");

  // experiments
  auto* sweep = app.add_subcommand("sweep-beamwaist",
                                   "sum rate vs beam waist experiment");
  auto* cdf = app.add_subcommand("cdf", "sum-rate CDF over random user drops");
  auto* curves = app.add_subcommand("training-curves",
                                    "loss curves across dataset sizes/seeds");
  auto* report = app.add_subcommand("report", "render SVG plots from CSVs");
  std::string report_csv_dir;
  report->add_option("--csv-dir", report_csv_dir,
                     "directory holding experiment CSVs (default: out-dir)");

  CLI11_PARSE(app, argc, argv);

  g.overrides.emplace_back("experiments.seed", std::to_string(g.seed));
  g.overrides.emplace_back("surrogate.seed", std::to_string(g.seed));

  if (gen->parsed()) {
    auto cfg = make_config(g);
    long dropped = 0;
    const std::string out = join(g.out_dir, gen_out);
    check(owc_gen_dataset(cfg.get(), gen_n,
                          static_cast<uint64_t>(g.seed), out.c_str(),
                          &dropped));
    std::printf("wrote %s (%ld samples requested, %ld infeasible draws "
                "dropped)\n", out.c_str(), gen_n, dropped);
  } else if (train->parsed()) {
    if (!train_arch.empty())
      g.overrides.emplace_back("surrogate.arch", train_arch);
    if (train_epochs > 0)
      g.overrides.emplace_back("surrogate.epochs", std::to_string(train_epochs));
    if (train_lr > 0)
      g.overrides.emplace_back("surrogate.lr", std::to_string(train_lr));
    auto cfg = make_config(g);
    const std::string weights = join(g.out_dir, train_out);
    const std::string history = join(g.out_dir, "history.csv");
    check(owc_train(cfg.get(), train_dataset.c_str(), weights.c_str(),
                    history.c_str()));
    std::printf("wrote %s and %s\n", weights.c_str(), history.c_str());
  } else if (solve->parsed()) {
    if (solve_tol > 0)
      g.overrides.emplace_back("solver.tol", std::to_string(solve_tol));
    if (solve_iters > 0)
      g.overrides.emplace_back("solver.max_iters", std::to_string(solve_iters));
    if (solve_grid > 0)
      g.overrides.emplace_back("solver.grid_step", std::to_string(solve_grid));
    auto cfg = make_config(g);
    owc_problem* problem = nullptr;
    check(owc_problem_read(solve_problem.c_str(), &problem));
    owc_solution* sol = nullptr;
    check(owc_solve(problem, cfg.get(), solve_method.c_str(), &sol));
    double utility = 0;
    int feasible = 0;
    long iters = 0;
    check(owc_solution_info(sol, &utility, &feasible, &iters));
    const std::string alloc_csv = join(g.out_dir, "solution.csv");
    const std::string trace_csv = join(g.out_dir, "trace.csv");
    check(owc_solution_write_csv(sol, alloc_csv.c_str(), trace_csv.c_str()));
    std::printf("method=%s utility=%.10g feasible=%d iterations=%ld\n",
                solve_method.c_str(), utility, feasible, iters);
    std::printf("wrote %s and %s\n", alloc_csv.c_str(), trace_csv.c_str());
    owc_solution_free(sol);
    owc_problem_free(problem);
  } else if (predict->parsed()) {
    auto cfg = make_config(g);
    owc_model* model = nullptr;
    check(owc_model_load(pred_weights.c_str(), &model));
    owc_problem* problem = nullptr;
    check(owc_problem_read(pred_scenario.c_str(), &problem));
    owc_solution* sol = nullptr;
    check(owc_predict(model, problem, pred_refine, cfg.get(), &sol));
    double utility = 0;
    int feasible = 0;
    check(owc_solution_info(sol, &utility, &feasible, nullptr));
    const std::string alloc_csv = join(g.out_dir, "prediction.csv");
    check(owc_solution_write_csv(sol, alloc_csv.c_str(), nullptr));
    std::printf("utility=%.10g feasible=%d\n", utility, feasible);
    std::printf("wrote %s\n", alloc_csv.c_str());
    owc_solution_free(sol);
    owc_problem_free(problem);
    owc_model_free(model);
  } else if (verify->parsed()) {
    if (bia_plan) {
      char* text = nullptr;
      check(owc_supersymbol_describe(bia_l, bia_k, &text));
      std::fputs(text, stdout);
      owc_string_free(text);
    }
    double residual = 0;
    check(owc_verify_bia(bia_l, bia_k, bia_draws,
                         static_cast<uint64_t>(g.seed), &residual));
    std::printf("L=%d K=%d draws=%d max decoding residual=%.3e\n", bia_l,
                bia_k, bia_draws, residual);
  } else if (sweep->parsed() || cdf->parsed() || curves->parsed()) {
    auto cfg = make_config(g);
    char* path = nullptr;
    if (sweep->parsed())
      check(owc_run_beamwaist_sweep(cfg.get(), g.out_dir.c_str(), &path));
    else if (cdf->parsed())
      check(owc_run_cdf(cfg.get(), g.out_dir.c_str(), &path));
    else
      check(owc_run_training_curves(cfg.get(), g.out_dir.c_str(), &path));
    std::printf("wrote %s\n", path);
    owc_string_free(path);
  } else if (report->parsed()) {
    const std::string csv_dir =
        report_csv_dir.empty() ? g.out_dir : report_csv_dir;
    check(owc_emit_report(csv_dir.c_str(), g.out_dir.c_str()));
    std::printf("wrote plots to %s\n", g.out_dir.c_str());
  }
  return 0;
}
