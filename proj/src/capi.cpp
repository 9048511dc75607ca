#include "owc/capi.h"

#include <cstring>
#include <fstream>
#include <string>

#include "allocator/allocator.hpp"
#include "bia/bia.hpp"
#include "dataset/dataset.hpp"
#include "harness/harness.hpp"
#include "surrogate/surrogate.hpp"
#include "util/error.hpp"
#include "util/rng.hpp"
#include "util/text.hpp"

using namespace owc;

extern "C" {

struct owc_config {
  Ini ini;
};

struct owc_problem {
  alloc::AllocationProblem problem;
};

struct owc_solution {
  alloc::AllocationSolution solution;
};

struct owc_model {
  surrogate::SurrogateModel model;
};

}  // extern "C"

namespace {

thread_local std::string g_last_error;

owc_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return OWC_ERR_INVALID_PARAMETER;
    case ErrorCode::DegenerateGeometry: return OWC_ERR_DEGENERATE_GEOMETRY;
    case ErrorCode::UnsupportedConfiguration:
      return OWC_ERR_UNSUPPORTED_CONFIGURATION;
    case ErrorCode::InvalidAllocation: return OWC_ERR_INVALID_ALLOCATION;
    case ErrorCode::Infeasible: return OWC_ERR_INFEASIBLE;
    case ErrorCode::ProblemTooLarge: return OWC_ERR_PROBLEM_TOO_LARGE;
    case ErrorCode::DecodeFailure: return OWC_ERR_DECODE_FAILURE;
    case ErrorCode::ParseError: return OWC_ERR_PARSE;
    case ErrorCode::NumericError: return OWC_ERR_NUMERIC;
    case ErrorCode::TrainingFailure: return OWC_ERR_TRAINING_FAILURE;
    case ErrorCode::IoError: return OWC_ERR_IO;
    case ErrorCode::Internal: return OWC_ERR_INTERNAL;
  }
  return OWC_ERR_INTERNAL;
}

// Runs `body`, mapping exceptions to status codes and the thread-local
// message. Every API entry point goes through here.
template <typename Fn>
owc_status guarded(Fn&& body) {
  try {
    body();
    return OWC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return OWC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return OWC_ERR_INTERNAL;
  }
}

void check_ptr(const void* p, const char* name) {
  require(p != nullptr, ErrorCode::InvalidParameter,
          std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

harness::ExperimentConfig experiment_config(const owc_config* cfg) {
  return harness::ExperimentConfig::from_ini(cfg ? cfg->ini : Ini());
}

surrogate::TrainConfig train_config_from(const Ini& ini) {
  surrogate::TrainConfig tc;
  tc.epochs = static_cast<int>(ini.get_long("surrogate.epochs", 40));
  tc.learning_rate = ini.get_double("surrogate.lr", 0.3);
  tc.momentum = ini.get_double("surrogate.momentum", 0.9);
  tc.batch_size = static_cast<int>(ini.get_long("surrogate.batch", 32));
  tc.seed = static_cast<std::uint64_t>(ini.get_long("surrogate.seed", 1));
  tc.output_layout = ini.get("surrogate.output_layout", "matrix");
  return tc;
}

}  // namespace

extern "C" {

const char* owc_last_error(void) { return g_last_error.c_str(); }

const char* owc_status_name(owc_status status) {
  switch (status) {
    case OWC_OK: return "ok";
    case OWC_ERR_INVALID_PARAMETER: return "invalid parameter";
    case OWC_ERR_DEGENERATE_GEOMETRY: return "degenerate geometry";
    case OWC_ERR_UNSUPPORTED_CONFIGURATION: return "unsupported configuration";
    case OWC_ERR_INVALID_ALLOCATION: return "invalid allocation";
    case OWC_ERR_INFEASIBLE: return "infeasible";
    case OWC_ERR_PROBLEM_TOO_LARGE: return "problem too large";
    case OWC_ERR_DECODE_FAILURE: return "decode failure";
    case OWC_ERR_PARSE: return "parse error";
    case OWC_ERR_NUMERIC: return "numeric error";
    case OWC_ERR_TRAINING_FAILURE: return "training failure";
    case OWC_ERR_IO: return "i/o error";
    case OWC_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* owc_version(void) { return "1.0.0"; }

void owc_string_free(char* s) { delete[] s; }

owc_status owc_config_create(owc_config** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = new owc_config{};
  });
}

owc_status owc_config_load(const char* path, owc_config** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new owc_config{Ini::parse_file(path)};
  });
}

owc_status owc_config_set(owc_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    check_ptr(cfg, "cfg");
    check_ptr(key, "key");
    check_ptr(value, "value");
    cfg->ini.set(key, value);
  });
}

void owc_config_free(owc_config* cfg) { delete cfg; }

owc_status owc_problem_read(const char* path, owc_problem** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new owc_problem{dataset::read_problem(path)};
  });
}

owc_status owc_problem_dims(const owc_problem* p, int* num_users,
                            int* num_aps) {
  return guarded([&] {
    check_ptr(p, "p");
    if (num_users) *num_users = p->problem.num_users();
    if (num_aps) *num_aps = p->problem.num_aps();
  });
}

void owc_problem_free(owc_problem* p) { delete p; }

owc_status owc_solve(const owc_problem* p, const owc_config* cfg,
                     const char* method, owc_solution** out) {
  return guarded([&] {
    check_ptr(p, "p");
    check_ptr(method, "method");
    check_ptr(out, "out");
    const Ini ini = cfg ? cfg->ini : Ini();
    const std::string m = method;
    alloc::AllocationSolution sol;
    if (m == "dual") {
      harness::ExperimentConfig ec = harness::ExperimentConfig::from_ini(ini);
      sol = alloc::solve_dual(p->problem, ec.solver);
    } else if (m == "exhaustive") {
      alloc::ExhaustiveConfig xc;
      xc.grid_step = ini.get_double("solver.grid_step", xc.grid_step);
      xc.budget = ini.get_double("solver.budget", xc.budget);
      sol = alloc::solve_exhaustive(p->problem, xc);
    } else if (m == "uniform") {
      sol = alloc::uniform_allocation(p->problem);
    } else {
      fail(ErrorCode::InvalidParameter,
           "method must be dual, exhaustive or uniform (got '" + m + "')");
    }
    *out = new owc_solution{std::move(sol)};
  });
}

owc_status owc_solution_info(const owc_solution* s, double* utility,
                             int* feasible, long* iterations) {
  return guarded([&] {
    check_ptr(s, "s");
    if (utility) *utility = s->solution.utility;
    if (feasible) *feasible = s->solution.feasible ? 1 : 0;
    if (iterations) *iterations = s->solution.iterations;
  });
}

owc_status owc_solution_allocation(const owc_solution* s, double* buf,
                                   long buf_len) {
  return guarded([&] {
    check_ptr(s, "s");
    check_ptr(buf, "buf");
    const auto& e = s->solution.e;
    require(buf_len >= e.size(), ErrorCode::InvalidParameter,
            "buffer too small for the allocation matrix");
    for (long k = 0; k < e.rows(); ++k)
      for (long l = 0; l < e.cols(); ++l) buf[k * e.cols() + l] = e(k, l);
  });
}

owc_status owc_solution_write_csv(const owc_solution* s, const char* alloc_csv,
                                  const char* trace_csv) {
  return guarded([&] {
    check_ptr(s, "s");
    check_ptr(alloc_csv, "alloc_csv");
    {
      std::ofstream out(alloc_csv);
      require(out.good(), ErrorCode::IoError,
              std::string("cannot write ") + alloc_csv);
      out << "user,ap,e\n";
      const auto& e = s->solution.e;
      for (long k = 0; k < e.rows(); ++k)
        for (long l = 0; l < e.cols(); ++l)
          out << k << "," << l << "," << fmt_double(e(k, l)) << "\n";
      require(out.good(), ErrorCode::IoError,
              std::string("write failed for ") + alloc_csv);
    }
    if (trace_csv) {
      std::ofstream out(trace_csv);
      require(out.good(), ErrorCode::IoError,
              std::string("cannot write ") + trace_csv);
      out << "iter,utility,max_violation\n";
      for (const auto& t : s->solution.trace)
        out << t.iteration << "," << fmt_double(t.utility) << ","
            << fmt_double(t.max_violation) << "\n";
      require(out.good(), ErrorCode::IoError,
              std::string("write failed for ") + trace_csv);
    }
  });
}

void owc_solution_free(owc_solution* s) { delete s; }

owc_status owc_verify_bia(int num_aps, int num_users, int draws, uint64_t seed,
                          double* max_residual) {
  return guarded([&] {
    check_ptr(max_residual, "max_residual");
    require(draws >= 1, ErrorCode::InvalidParameter, "draws must be >= 1");
    const auto plan = bia::build_supersymbol(num_aps, num_users);
    Rng rng(seed == 0 ? 0xb1a : seed);
    double worst = 0.0;
    for (int d = 0; d < draws; ++d) {
      std::vector<channel::ChannelMatrix> channels(num_users);
      std::vector<Eigen::VectorXd> symbols(num_users);
      for (int k = 0; k < num_users; ++k) {
        // random well-conditioned mode-switched channel: Gaussian + diagonal
        Eigen::MatrixXd h(num_aps, num_aps);
        for (long i = 0; i < h.size(); ++i) h(i) = rng.normal();
        h += 3.0 * Eigen::MatrixXd::Identity(num_aps, num_aps);
        channels[k] = {k, h, 1.0};
        Eigen::VectorXd sym(
            static_cast<long>(plan.blocks_per_user) * num_aps);
        for (long i = 0; i < sym.size(); ++i) sym(i) = rng.normal();
        symbols[k] = sym;
      }
      const auto res = bia::verify_decoding(plan, channels, symbols, 0.0);
      worst = std::max(worst, res.max_residual);
    }
    *max_residual = worst;
  });
}

owc_status owc_supersymbol_describe(int num_aps, int num_users, char** out) {
  return guarded([&] {
    check_ptr(out, "out");
    *out = dup_string(bia::build_supersymbol(num_aps, num_users).describe());
  });
}

owc_status owc_gen_dataset(const owc_config* cfg, long count, uint64_t seed,
                           const char* out_csv, long* dropped) {
  return guarded([&] {
    check_ptr(out_csv, "out_csv");
    harness::ExperimentConfig ec = experiment_config(cfg);
    auto ds = dataset::generate_dataset(static_cast<int>(count), ec.scenario,
                                        ec.solver, seed);
    dataset::write_dataset(ds, out_csv);
    if (dropped) *dropped = ds.dropped;
  });
}

owc_status owc_train(const owc_config* cfg, const char* dataset_csv,
                     const char* weights_out, const char* history_csv) {
  return guarded([&] {
    check_ptr(dataset_csv, "dataset_csv");
    check_ptr(weights_out, "weights_out");
    const Ini ini = cfg ? cfg->ini : Ini();
    auto ds = dataset::read_dataset(dataset_csv);
    const surrogate::TrainConfig tc = train_config_from(ini);
    auto splitd = dataset::split_dataset(ds, 0.9, tc.seed);
    const int out_dim = tc.output_layout == "matrix"
                            ? ds.num_users * ds.num_aps
                            : ds.num_users + ds.num_aps;
    auto arch =
        surrogate::parse_arch(ini.get("surrogate.arch", "conv:8:3,dense:128"));
    auto model =
        surrogate::init_model(arch, ds.feature_dim(), out_dim, tc.seed);
    model = surrogate::train(std::move(model), splitd.train, splitd.validation,
                             tc);
    surrogate::save_model(model, weights_out);
    if (history_csv) {
      std::ofstream out(history_csv);
      require(out.good(), ErrorCode::IoError,
              std::string("cannot write ") + history_csv);
      out << "epoch,train_mse,val_mse\n";
      for (size_t i = 0; i < model.history.size(); ++i)
        out << (i + 1) << "," << fmt_double(model.history[i].first) << ","
            << fmt_double(model.history[i].second) << "\n";
      require(out.good(), ErrorCode::IoError,
              std::string("write failed for ") + history_csv);
    }
  });
}

owc_status owc_model_load(const char* path, owc_model** out) {
  return guarded([&] {
    check_ptr(path, "path");
    check_ptr(out, "out");
    *out = new owc_model{surrogate::load_model(path)};
  });
}

void owc_model_free(owc_model* m) { delete m; }

owc_status owc_predict(const owc_model* m, const owc_problem* p,
                       long refine_iters, const owc_config* cfg,
                       owc_solution** out) {
  return guarded([&] {
    check_ptr(m, "m");
    check_ptr(p, "p");
    check_ptr(out, "out");
    harness::ExperimentConfig ec = experiment_config(cfg);
    dataset::Scenario scenario;
    scenario.problem = p->problem;
    auto sol = surrogate::predict_and_repair(m->model, scenario, refine_iters,
                                             ec.solver);
    *out = new owc_solution{std::move(sol)};
  });
}

owc_status owc_run_training_curves(const owc_config* cfg, const char* out_dir,
                                   char** out_csv) {
  return guarded([&] {
    check_ptr(out_dir, "out_dir");
    harness::ExperimentConfig ec = experiment_config(cfg);
    ec.out_dir = out_dir;
    const std::string path = harness::run_training_curves(ec);
    if (out_csv) *out_csv = dup_string(path);
  });
}

owc_status owc_run_beamwaist_sweep(const owc_config* cfg, const char* out_dir,
                                   char** out_csv) {
  return guarded([&] {
    check_ptr(out_dir, "out_dir");
    harness::ExperimentConfig ec = experiment_config(cfg);
    ec.out_dir = out_dir;
    const std::string path = harness::run_beamwaist_sweep(ec);
    if (out_csv) *out_csv = dup_string(path);
  });
}

owc_status owc_run_cdf(const owc_config* cfg, const char* out_dir,
                       char** out_csv) {
  return guarded([&] {
    check_ptr(out_dir, "out_dir");
    harness::ExperimentConfig ec = experiment_config(cfg);
    ec.out_dir = out_dir;
    const std::string path = harness::run_cdf_experiment(ec);
    if (out_csv) *out_csv = dup_string(path);
  });
}

owc_status owc_emit_report(const char* csv_dir, const char* out_dir) {
  return guarded([&] {
    check_ptr(csv_dir, "csv_dir");
    check_ptr(out_dir, "out_dir");
    harness::emit_report(csv_dir, out_dir);
  });
}

}  // extern "C"
