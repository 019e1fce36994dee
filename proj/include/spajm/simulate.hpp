#pragma once

// Synthetic joint data: longitudinal trajectories plus event times drawn by
// numerically inverting a Weibull cumulative hazard modulated by the shared
// predictor. Ships a lattice map and a truth record for later scoring.

#include <cstdint>
#include <string>
#include <vector>

#include "spajm/basis.hpp"
#include "spajm/data.hpp"
#include "spajm/rng.hpp"

namespace spajm {

double f_bump(double x);                   // bimodal smooth used in eta_l
double f_sine(double x);                   // sin(x)
double f_geo(double cx, double cy);        // sin(cx) * cos(0.5 cy)

struct LatticeMap {
  AdjacencyGraph graph;
  std::vector<double> cx, cy;  // centroids scaled into [-3, 3]^2
};

// rook-neighbor grid, row-major labels "1".."rows*cols"
LatticeMap make_lattice_map(int rows, int cols);

// piecewise-constant covariate path; value[i] holds on [time[i], time[i+1]),
// the first value is carried backwards before time[0]
struct CovariatePath {
  std::vector<double> time;
  std::vector<double> value;
  double at(double t) const;
};

struct HazardSpec {
  double scale = 0.4;          // Weibull scale p
  double shape = 1.5;          // Weibull shape q
  double log_shift = 0.0;      // survival predictor eta_s
  double alpha = 0.0;          // association
  double ls_const = 0.0;       // time-constant part of eta_ls
  double ls_slope = 0.0;       // coefficient of t inside eta_ls
  CovariatePath ls_step;       // time-varying part of eta_ls

  double eta_ls(double t) const;
  double log_hazard(double t) const;
};

// integral of the hazard over [0, t], adaptive Simpson split at path breaks
double cumulative_hazard(const HazardSpec& h, double t, double tol = 1e-8);
// smallest t with cumulative hazard >= target; +inf when t_max is not enough
double invert_cumulative_hazard(const HazardSpec& h, double target, double t_max,
                                double tol = 1e-10);

struct SimulationConfig {
  int n = 200;
  int ni = 6;
  double alpha = -0.3;
  double sigma2_eps = 0.5;
  double sigma2_b0 = 2.0;
  double sigma2_b1 = 2.0;
  double weibull_scale = 0.4;
  double weibull_shape = 1.5;
  int setting = 2;             // 1: geo in eta_ls, 2: eta_s, 3: eta_l
  int map_rows = 8;
  int map_cols = 8;
  std::uint64_t seed = 1;
  double horizon = 1.0;
  double extra_censor_frac = 0.5;  // share of censored subjects re-censored U(0,1)
};

struct SimulatedStudy {
  LongitudinalDataset long_data;
  SurvivalDataset surv_data;
  LatticeMap map;
  std::string truth_json;
  int redrawn_subjects = 0;
  int redrawn_censor_times = 0;
};

SimulatedStudy simulate_study(const SimulationConfig& cfg);

}  // namespace spajm
