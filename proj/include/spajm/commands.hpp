#pragma once

// Command implementations behind the CLI. Each writes its artifacts under the
// requested output location and returns 0 on success (the benchmark returns 5
// when only part of its replications succeed). Problems are reported by
// exception; exit_code_for maps them onto process exit codes 2 (config),
// 3 (io), 4 (numeric).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spajm/model.hpp"
#include "spajm/model_spec.hpp"
#include "spajm/ped.hpp"
#include "spajm/posterior.hpp"
#include "spajm/sampler.hpp"
#include "spajm/simulate.hpp"

namespace spajm {

extern const char* kVersion;

int exit_code_for(const std::exception& e);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::uint64_t fnv1a64(const std::string& bytes);

struct SimulateArgs {
  std::string out_dir;
  int setting = 2;
  int n = 200;
  int ni = 6;
  std::uint64_t seed = 1;
  int map_rows = 8;
  int map_cols = 8;
};

struct AugmentArgs {
  std::string long_path;
  std::string surv_path;
  std::string out_path;
  std::string strategy = "events";  // events | quantiles
  int intervals = 20;               // quantile strategy only
  bool merge_obs_times = false;
  std::string locf = "backfill";    // backfill | drop
};

struct FitArgs {
  std::string config_path;
  std::string long_path;
  std::string surv_path;
  std::string out_dir;
  std::optional<long> iterations;
  std::optional<long> burn_in;
  std::optional<long> thinning;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::string strategy = "events";
  int intervals = 20;
  bool merge_obs_times = false;
  std::string locf = "backfill";
  double level = 0.95;
};

struct SummarizeArgs {
  std::string draws_path;  // draws.csv, or a fit directory holding draws*.csv
  std::string out_path;    // empty: summary.csv next to the draws
  double level = 0.95;
};

struct BenchmarkArgs {
  std::string out_dir;
  int setting = 2;
  int replications = 10;
  std::uint64_t seed = 1;
  int workers = 1;
  int n = 200;
  int ni = 6;
  long iterations = 20000;
  long burn_in = 5000;
  long thinning = 15;
  std::string strategy = "events";
  int intervals = 20;
  bool merge_obs_times = false;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_augment(const AugmentArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_summarize(const SummarizeArgs& args);
int cmd_benchmark(const BenchmarkArgs& args);

// data + augmentation + assembled model, shared by fit and benchmark
struct PreparedFit {
  LongitudinalDataset long_data;
  SurvivalDataset surv;
  AugmentedDataset ped;
  std::optional<AdjacencyGraph> map;
  JointModel model;
};

PreparedFit prepare_fit(const ParsedModel& parsed, LongitudinalDataset long_data,
                        SurvivalDataset surv, const std::string& config_dir,
                        const std::string& strategy, int intervals,
                        bool merge_obs_times, const std::string& locf);

// the model configuration the benchmark fits for a given simulation setting
ParsedModel benchmark_model(int setting, const std::string& map_ref,
                            long iterations, long burn_in, long thinning,
                            std::uint64_t seed);

void write_draws_csv(const std::string& path, const ChainOutput& chain);
// reads a draws matrix back (all columns must be numeric)
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_draws_csv(const std::string& path);

}  // namespace spajm
