#pragma once

// Design and penalty builders for the structured additive predictor:
// B-spline bases with difference penalties, subject-level random effects,
// and Markov random fields over an adjacency graph.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "spajm/data.hpp"

namespace spajm {

// cubic-by-default B-spline basis on equidistant knots spanning [x_min, x_max]
struct BSplineBasis {
  double x_min = 0.0;
  double x_max = 1.0;
  int degree = 3;
  int num_basis = 10;  // number of basis functions / columns

  double knot_step() const { return (x_max - x_min) / (num_basis - degree); }
  // extended knot vector position k, k = 0 .. num_basis + degree
  double knot(int k) const { return x_min + (k - degree) * knot_step(); }
  Eigen::VectorXd eval_point(double x) const;       // one row of the design
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
};

BSplineBasis make_bspline_basis(double x_min, double x_max, int num_basis, int degree);

// convenience: basis over the observed range of x
Eigen::MatrixXd bspline_design(const Eigen::VectorXd& x, int num_basis, int degree);

// K = D'D with D the order-th difference operator (num_coef columns)
Eigen::MatrixXd difference_penalty(int num_coef, int order);

struct AdjacencyGraph {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> neighbors;  // index lists, symmetric

  std::size_t size() const { return labels.size(); }
  int index_of(const std::string& label) const;  // -1 when absent
  int connected_components() const;
  void validate() const;  // symmetry, no self loops, labels unique
};

AdjacencyGraph read_gra(const std::string& path);
AdjacencyGraph parse_gra_text(const std::string& text, const std::string& origin = "<memory>");
void write_gra(const AdjacencyGraph& g, const std::string& path);
std::string gra_text(const AdjacencyGraph& g);

// graph Laplacian: K[s][s] = degree, K[s][r] = -1 iff s ~ r
Eigen::MatrixXd mrf_penalty(const AdjacencyGraph& g);

// one-nonzero-per-row design: row r has value `value[r]` in column `col[r]`.
// dense designs keep `dense`; the optional map Q turns raw coefficients into
// the reduced (constrained) coordinates: effective design = raw * Q.
struct Design {
  Eigen::MatrixXd dense;          // empty when indexed
  std::vector<int> col;           // indexed form
  Eigen::VectorXd value;
  int raw_cols = 0;
  Eigen::MatrixXd Q;              // raw_cols x ncoef; empty means identity

  bool indexed() const { return dense.size() == 0; }
  Eigen::Index nrows() const {
    return indexed() ? static_cast<Eigen::Index>(col.size()) : dense.rows();
  }
  int ncoef() const;
  Eigen::VectorXd mul(const Eigen::VectorXd& gamma) const;         // Z gamma
  Eigen::VectorXd tmul(const Eigen::VectorXd& u) const;            // Z' u
  Eigen::MatrixXd gram(const Eigen::VectorXd& w) const;            // Z' diag(w) Z
  static Design from_dense(Eigen::MatrixXd Z);
  static Design from_index(std::vector<int> col, Eigen::VectorXd value, int raw_cols);
};

// subject random effect design: column id-1, value 1 (intercept) or z (slope)
Design random_effect_design(const std::vector<int>& subject_id, int n_subjects,
                            const std::vector<double>* slope_covariate = nullptr);

// region indicator design against graph order
Design mrf_design(const std::vector<std::string>& region, const AdjacencyGraph& g);

// rank via SVD with relative threshold
int penalty_rank(const Eigen::MatrixXd& K, double rel_tol = 1e-8);

// orthonormal basis of the null space of c' (c = weighted column sums);
// result maps reduced coordinates back to the raw coefficient space
Eigen::MatrixXd sum_to_zero_transform(const Eigen::VectorXd& column_sums);

}  // namespace spajm
