#include "spajm/basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace spajm {

BSplineBasis make_bspline_basis(double x_min, double x_max, int num_basis, int degree) {
  if (degree < 0) throw ConfigError("spline degree must be >= 0");
  if (num_basis < degree + 2)
    throw ConfigError("spline needs at least degree + 2 basis functions, got " +
                      std::to_string(num_basis));
  if (!(x_max > x_min)) {
    // degenerate covariate: widen symmetrically so the basis stays well posed
    double pad = std::max(1.0, std::abs(x_min)) * 1e-3;
    x_min -= pad;
    x_max += pad;
  }
  BSplineBasis b;
  b.x_min = x_min;
  b.x_max = x_max;
  b.degree = degree;
  b.num_basis = num_basis;
  return b;
}

Eigen::VectorXd BSplineBasis::eval_point(double x) const {
  // Cox-de Boor recursion on the extended equidistant knot grid
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_basis);
  double h = knot_step();
  // clamp into the closed support so boundary points keep partition of unity
  double xc = std::min(std::max(x, x_min), x_max);
  // interval index: xc in [knot(degree + j), knot(degree + j + 1))
  int j = static_cast<int>(std::floor((xc - x_min) / h));
  j = std::min(std::max(j, 0), num_basis - degree - 1);
  // de Boor's algorithm for all degree+1 nonzero functions on that interval
  std::vector<double> N(degree + 1, 0.0);
  N[0] = 1.0;
  for (int d = 1; d <= degree; ++d) {
    // N currently holds values of degree d-1 for basis indices j .. j+d-1
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      int i = j + r;  // basis index of this entry at degree d-1... see below
      // knots for basis i at degree d: t_{i} .. t_{i+d+1} on the extended grid
      double left = knot(i + degree - d + 1);
      double right = knot(i + degree + 1);
      double denom = right - left;
      double term = N[r] / denom;
      N[r] = saved + (right - xc) * term;
      saved = (xc - left) * term;
    }
    N[d] = saved;
  }
  for (int r = 0; r <= degree; ++r) {
    int idx = j + r;
    if (idx >= 0 && idx < num_basis) out[idx] = N[r];
  }
  return out;
}

Eigen::MatrixXd BSplineBasis::evaluate(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd Z(x.size(), num_basis);
  for (Eigen::Index r = 0; r < x.size(); ++r) Z.row(r) = eval_point(x[r]).transpose();
  return Z;
}

Eigen::MatrixXd bspline_design(const Eigen::VectorXd& x, int num_basis, int degree) {
  if (x.size() == 0) throw ConfigError("cannot build a spline basis on no data");
  auto b = make_bspline_basis(x.minCoeff(), x.maxCoeff(), num_basis, degree);
  return b.evaluate(x);
}

Eigen::MatrixXd difference_penalty(int num_coef, int order) {
  if (order < 1 || order > 2)
    throw ConfigError("difference order must be 1 or 2");
  if (num_coef <= order)
    throw ConfigError("difference penalty needs more coefficients than its order");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(num_coef - order, num_coef);
  for (int r = 0; r < num_coef - order; ++r) {
    if (order == 1) {
      D(r, r) = -1.0;
      D(r, r + 1) = 1.0;
    } else {
      D(r, r) = 1.0;
      D(r, r + 1) = -2.0;
      D(r, r + 2) = 1.0;
    }
  }
  return D.transpose() * D;
}

int AdjacencyGraph::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return -1;
}

void AdjacencyGraph::validate() const {
  if (labels.size() != neighbors.size())
    throw ConfigError("adjacency graph: label/neighbor size mismatch");
  std::set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw ConfigError("adjacency graph: duplicate region label '" + l + "'");
  int n = static_cast<int>(labels.size());
  for (int s = 0; s < n; ++s) {
    for (int r : neighbors[s]) {
      if (r < 0 || r >= n)
        throw ConfigError("adjacency graph: neighbor index out of range for region '" +
                          labels[s] + "'");
      if (r == s)
        throw ConfigError("adjacency graph: region '" + labels[s] + "' lists itself");
      const auto& back = neighbors[r];
      if (std::find(back.begin(), back.end(), s) == back.end())
        throw ConfigError("adjacency graph: asymmetric edge " + labels[s] + " -> " +
                          labels[r]);
    }
  }
}

int AdjacencyGraph::connected_components() const {
  int n = static_cast<int>(labels.size());
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = ncomp;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int r : neighbors[v])
        if (comp[r] < 0) {
          comp[r] = ncomp;
          stack.push_back(r);
        }
    }
    ++ncomp;
  }
  return ncomp;
}

AdjacencyGraph parse_gra_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw IoError(origin + ": empty graph file");
  int n = 0;
  try {
    n = std::stoi(lines[0]);
  } catch (...) {
    throw IoError(origin + ": first line must be the number of regions");
  }
  if (n <= 0) throw IoError(origin + ": region count must be positive");
  if (static_cast<int>(lines.size()) != 1 + 3 * n)
    throw IoError(origin + ": expected " + std::to_string(1 + 3 * n) +
                  " non-empty lines for " + std::to_string(n) + " regions, got " +
                  std::to_string(lines.size()));
  AdjacencyGraph g;
  g.labels.resize(n);
  g.neighbors.resize(n);
  for (int s = 0; s < n; ++s) {
    g.labels[s] = lines[1 + 3 * s];
    int cnt = 0;
    try {
      cnt = std::stoi(lines[2 + 3 * s]);
    } catch (...) {
      throw IoError(origin + ": bad neighbor count for region '" + g.labels[s] + "'");
    }
    if (cnt < 0) throw IoError(origin + ": negative neighbor count");
    std::istringstream ns(lines[3 + 3 * s]);
    std::vector<int> nb;
    int v;
    while (ns >> v) nb.push_back(v);
    if (cnt == 0 && lines[3 + 3 * s] != "-")
      throw IoError(origin + ": region '" + g.labels[s] +
                    "' with no neighbors must list '-'");
    if (cnt > 0 && static_cast<int>(nb.size()) != cnt)
      throw IoError(origin + ": region '" + g.labels[s] + "' announces " +
                    std::to_string(cnt) + " neighbors but lists " +
                    std::to_string(nb.size()));
    std::sort(nb.begin(), nb.end());
    g.neighbors[s] = std::move(nb);
  }
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw IoError(origin + ": " + e.what());
  }
  return g;
}

AdjacencyGraph read_gra(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_gra_text(ss.str(), path);
}

std::string gra_text(const AdjacencyGraph& g) {
  std::ostringstream out;
  out << g.size() << "\n";
  for (std::size_t s = 0; s < g.size(); ++s) {
    out << g.labels[s] << "\n" << g.neighbors[s].size() << "\n";
    if (g.neighbors[s].empty()) {
      out << "-\n";
    } else {
      for (std::size_t k = 0; k < g.neighbors[s].size(); ++k)
        out << (k ? " " : "") << g.neighbors[s][k];
      out << "\n";
    }
  }
  return out.str();
}

void write_gra(const AdjacencyGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << gra_text(g);
}

Eigen::MatrixXd mrf_penalty(const AdjacencyGraph& g) {
  g.validate();
  int n = static_cast<int>(g.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s) {
    K(s, s) = static_cast<double>(g.neighbors[s].size());
    for (int r : g.neighbors[s]) K(s, r) = -1.0;
  }
  return K;
}

int Design::ncoef() const {
  if (Q.size() > 0) return static_cast<int>(Q.cols());
  return indexed() ? raw_cols : static_cast<int>(dense.cols());
}

Eigen::VectorXd Design::mul(const Eigen::VectorXd& gamma) const {
  Eigen::VectorXd raw = Q.size() > 0 ? Eigen::VectorXd(Q * gamma) : gamma;
  if (!indexed()) return dense * raw;
  Eigen::VectorXd out(col.size());
  for (std::size_t r = 0; r < col.size(); ++r) out[r] = value[r] * raw[col[r]];
  return out;
}

Eigen::VectorXd Design::tmul(const Eigen::VectorXd& u) const {
  if (!indexed()) {
    Eigen::VectorXd raw = dense.transpose() * u;
    return Q.size() > 0 ? Eigen::VectorXd(Q.transpose() * raw) : raw;
  }
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(raw_cols);
  for (std::size_t r = 0; r < col.size(); ++r) raw[col[r]] += value[r] * u[r];
  return Q.size() > 0 ? Eigen::VectorXd(Q.transpose() * raw) : raw;
}

Eigen::MatrixXd Design::gram(const Eigen::VectorXd& w) const {
  if (!indexed()) {
    Eigen::MatrixXd raw = dense.transpose() * w.asDiagonal() * dense;
    return Q.size() > 0 ? Eigen::MatrixXd(Q.transpose() * raw * Q) : raw;
  }
  // raw gram is diagonal because each row touches one column
  Eigen::VectorXd d = Eigen::VectorXd::Zero(raw_cols);
  for (std::size_t r = 0; r < col.size(); ++r)
    d[col[r]] += w[r] * value[r] * value[r];
  if (Q.size() == 0) return d.asDiagonal();
  return Q.transpose() * d.asDiagonal() * Q;
}

Design Design::from_dense(Eigen::MatrixXd Z) {
  Design d;
  d.dense = std::move(Z);
  return d;
}

Design Design::from_index(std::vector<int> col, Eigen::VectorXd value, int raw_cols) {
  Design d;
  d.col = std::move(col);
  d.value = std::move(value);
  d.raw_cols = raw_cols;
  for (int c : d.col)
    if (c < 0 || c >= raw_cols) throw NumericError("design index out of range");
  return d;
}

Design random_effect_design(const std::vector<int>& subject_id, int n_subjects,
                            const std::vector<double>* slope_covariate) {
  std::vector<int> col(subject_id.size());
  Eigen::VectorXd val(subject_id.size());
  for (std::size_t r = 0; r < subject_id.size(); ++r) {
    int i = subject_id[r];
    if (i < 1 || i > n_subjects)
      throw ConfigError("random effect: subject ids must be dense in 1..n");
    col[r] = i - 1;
    val[r] = slope_covariate ? (*slope_covariate)[r] : 1.0;
  }
  return Design::from_index(std::move(col), std::move(val), n_subjects);
}

Design mrf_design(const std::vector<std::string>& region, const AdjacencyGraph& g) {
  std::vector<int> col(region.size());
  Eigen::VectorXd val = Eigen::VectorXd::Ones(region.size());
  for (std::size_t r = 0; r < region.size(); ++r) {
    int idx = g.index_of(region[r]);
    if (idx < 0)
      throw ConfigError("region '" + region[r] + "' not present in the map file");
    col[r] = idx;
  }
  return Design::from_index(std::move(col), std::move(val),
                            static_cast<int>(g.size()));
}

int penalty_rank(const Eigen::MatrixXd& K, double rel_tol) {
  if (K.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
  double top = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  if (top <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > rel_tol * top) ++rank;
  return rank;
}

Eigen::MatrixXd sum_to_zero_transform(const Eigen::VectorXd& column_sums) {
  // orthonormal null space of the 1 x J functional c'
  Eigen::Index J = column_sums.size();
  if (J < 2) throw ConfigError("sum-to-zero constraint needs at least 2 coefficients");
  if (column_sums.norm() <= 0.0)
    return Eigen::MatrixXd::Identity(J, J);  // nothing to constrain
  Eigen::MatrixXd C = column_sums.transpose();
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
  Eigen::MatrixXd Qfull = qr.matrixQ();
  return Qfull.rightCols(J - 1);
}

}  // namespace spajm
