#pragma once

#include <string>
#include <vector>

#include "spajm/data.hpp"
#include "spajm/model.hpp"
#include "spajm/sampler.hpp"

namespace spajm {

// Highest-density interval of a sample.
struct Hdi {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // lo == hi (all mass on one value inside the window)
};

// Shortest interval containing ceil(level * m) of the m draws.  Ties are
// broken toward the lowest start.  When the window would span all but one
// draw (or more), the full (min, max) range is returned so that
// hdi(x, 1 - 1/m) == (min, max) holds exactly.  Requires at least 100 draws.
Hdi hdi(const std::vector<double>& draws, double level);

struct ScalarSummary {
  std::string name;
  double mean = 0.0;
  double hdi_lo = 0.0;
  double hdi_hi = 0.0;
  double mcse = 0.0;
};

// Pointwise summary of a smooth-term curve over a covariate grid.  Curves of
// sum-to-zero constrained terms are additionally centered per draw by the
// curve's mean over the grid, so they are comparable across runs.
struct CurveSummary {
  std::string name;
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> hdi_lo;
  std::vector<double> hdi_hi;
};

struct PosteriorSummary {
  std::vector<ScalarSummary> scalars;
  std::vector<CurveSummary> curves;
  double level = 0.95;

  Table scalar_table() const;  // columns: parameter, mean, hdi_lo, hdi_hi, mcse
};

// Pools retained draws of several chains row-wise.  All chains must share the
// same parameter layout.
Eigen::MatrixXd pool_draws(const std::vector<ChainOutput>& chains);

// Scalar summaries for every sampled parameter plus grid curves for every
// spline block in the model.  Needs >= 100 pooled draws.
PosteriorSummary summarize(const std::vector<ChainOutput>& chains,
                           const JointModel& model, double level = 0.95,
                           int grid_points = 100);

// Scalar-only summary straight from a draws matrix (e.g. re-read from disk).
PosteriorSummary summarize_draws(const std::vector<std::string>& names,
                                 const Eigen::MatrixXd& draws,
                                 double level = 0.95);

// One scored target of a simulation replication.  Scalar targets carry the
// posterior mean and the generating value; vector targets (smooth curves,
// spatial fields, random effects) aggregate over their grid/regions/subjects
// and leave estimate/truth at NaN.
struct MetricRow {
  std::string target;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double truth = std::numeric_limits<double>::quiet_NaN();
  double mse = 0.0;
  double bias = 0.0;   // signed, averaged over components for vector targets
  double mae = 0.0;    // mean absolute error over components; |bias| for scalars
  double covered = 0.0;  // 0/1 for scalars, fraction of points otherwise
};

// Compares a fitted model against the generating quantities recorded by the
// simulator (JSON text).  Smooth and spatial targets are scored as centered
// contrasts: each posterior draw of the curve is shifted by its own mean over
// the observed covariate values, and the true curve is shifted the same way,
// which removes the arbitrary level split between intercept and constrained
// terms.
std::vector<MetricRow> score_against_truth(const std::string& truth_json_text,
                                           const std::vector<ChainOutput>& chains,
                                           const JointModel& model,
                                           double level = 0.95,
                                           int grid_points = 100);

Table metric_table(const std::vector<MetricRow>& rows);

}  // namespace spajm
