#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spajm/basis.hpp"
#include "spajm/commands.hpp"
#include "spajm/posterior.hpp"
#include "spajm/rng.hpp"
#include "spajm/simulate.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "additive joint longitudinal-survival models";
  m.attr("__version__") = spajm::kVersion;

  py::register_exception<spajm::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<spajm::IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<spajm::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("derive_seed", &spajm::derive_seed, py::arg("seed"), py::arg("stream"),
        "independent child seed for a tagged stream");

  m.def(
      "bspline_design",
      [](const Eigen::VectorXd& x, double x_min, double x_max, int num_basis, int degree) {
        return spajm::make_bspline_basis(x_min, x_max, num_basis, degree).evaluate(x);
      },
      py::arg("x"), py::arg("x_min"), py::arg("x_max"), py::arg("num_basis"),
      py::arg("degree") = 3, "B-spline design matrix on an equidistant knot grid");

  m.def("difference_penalty", &spajm::difference_penalty, py::arg("num_coef"),
        py::arg("order") = 2, "P-spline penalty D'D of the given difference order");

  m.def(
      "gra_laplacian",
      [](const std::string& path) { return spajm::mrf_penalty(spajm::read_gra(path)); },
      py::arg("path"), "graph Laplacian penalty of a .gra adjacency file");

  m.def(
      "write_lattice_gra",
      [](int rows, int cols, const std::string& path) {
        spajm::write_gra(spajm::make_lattice_map(rows, cols).graph, path);
      },
      py::arg("rows"), py::arg("cols"), py::arg("path"),
      "write a rook-neighbor lattice as a .gra adjacency file");

  m.def("f_bump", py::vectorize(spajm::f_bump), py::arg("x"));
  m.def("f_sine", py::vectorize(spajm::f_sine), py::arg("x"));
  m.def("f_geo", py::vectorize(spajm::f_geo), py::arg("cx"), py::arg("cy"));

  m.def(
      "weibull_cumulative_hazard",
      [](double scale, double shape, double t) {
        spajm::HazardSpec h;
        h.scale = scale;
        h.shape = shape;
        return spajm::cumulative_hazard(h, t);
      },
      py::arg("scale"), py::arg("shape"), py::arg("t"),
      "numerically integrated Weibull cumulative hazard (for cross-checking)");

  m.def(
      "hdi",
      [](const std::vector<double>& draws, double level) {
        const spajm::Hdi h = spajm::hdi(draws, level);
        return py::make_tuple(h.lo, h.hi);
      },
      py::arg("draws"), py::arg("level") = 0.95,
      "shortest interval containing ceil(level * n) draws");

  m.def(
      "canonical_config",
      [](const std::string& text) {
        return spajm::serialize_model_config(spajm::parse_model_config(text));
      },
      py::arg("text"), "parse a model configuration and return its canonical form");

  m.def(
      "simulate",
      [](const std::string& out_dir, int setting, int n, int ni, std::uint64_t seed,
         int map_rows, int map_cols) {
        spajm::SimulateArgs a;
        a.out_dir = out_dir;
        a.setting = setting;
        a.n = n;
        a.ni = ni;
        a.seed = seed;
        a.map_rows = map_rows;
        a.map_cols = map_cols;
        return spajm::cmd_simulate(a);
      },
      py::arg("out_dir"), py::arg("setting") = 2, py::arg("n") = 200, py::arg("ni") = 6,
      py::arg("seed") = 1, py::arg("map_rows") = 8, py::arg("map_cols") = 8,
      "write a synthetic study (long.csv, surv.csv, grid.gra, truth.json)");

  m.def(
      "augment",
      [](const std::string& long_path, const std::string& surv_path,
         const std::string& out_path, const std::string& strategy, int intervals,
         bool merge_obs_times, const std::string& locf) {
        spajm::AugmentArgs a;
        a.long_path = long_path;
        a.surv_path = surv_path;
        a.out_path = out_path;
        a.strategy = strategy;
        a.intervals = intervals;
        a.merge_obs_times = merge_obs_times;
        a.locf = locf;
        return spajm::cmd_augment(a);
      },
      py::arg("long_path"), py::arg("surv_path"), py::arg("out_path"),
      py::arg("strategy") = "events", py::arg("intervals") = 20,
      py::arg("merge_obs_times") = false, py::arg("locf") = "backfill",
      "expand survival records into pseudo-Poisson interval rows");

  m.def(
      "fit",
      [](const std::string& config, const std::string& long_path,
         const std::string& surv_path, const std::string& out_dir,
         std::optional<long> iterations, std::optional<long> burnin,
         std::optional<long> thin, std::optional<std::uint64_t> seed,
         std::optional<int> chains, const std::string& strategy, int intervals,
         bool merge_obs_times, const std::string& locf, double level) {
        spajm::FitArgs a;
        a.config_path = config;
        a.long_path = long_path;
        a.surv_path = surv_path;
        a.out_dir = out_dir;
        a.iterations = iterations;
        a.burn_in = burnin;
        a.thinning = thin;
        a.seed = seed;
        a.chains = chains;
        a.strategy = strategy;
        a.intervals = intervals;
        a.merge_obs_times = merge_obs_times;
        a.locf = locf;
        a.level = level;
        return spajm::cmd_fit(a);
      },
      py::arg("config"), py::arg("long_path"), py::arg("surv_path"), py::arg("out_dir"),
      py::arg("iterations") = std::nullopt, py::arg("burnin") = std::nullopt,
      py::arg("thin") = std::nullopt, py::arg("seed") = std::nullopt,
      py::arg("chains") = std::nullopt, py::arg("strategy") = "events",
      py::arg("intervals") = 20, py::arg("merge_obs_times") = false,
      py::arg("locf") = "backfill", py::arg("level") = 0.95,
      "run the sampler; writes draws.csv, summary.csv, acceptance.json, manifest.json");

  m.def(
      "summarize",
      [](const std::string& draws, const std::string& out, double level) {
        spajm::SummarizeArgs a;
        a.draws_path = draws;
        a.out_path = out;
        a.level = level;
        return spajm::cmd_summarize(a);
      },
      py::arg("draws"), py::arg("out") = std::string(), py::arg("level") = 0.95,
      "posterior means and HDIs of a draws file or fit directory");

  m.def(
      "benchmark",
      [](const std::string& out_dir, int setting, int replications, std::uint64_t seed,
         int workers, int n, int ni, long iterations, long burnin, long thin) {
        spajm::BenchmarkArgs a;
        a.out_dir = out_dir;
        a.setting = setting;
        a.replications = replications;
        a.seed = seed;
        a.workers = workers;
        a.n = n;
        a.ni = ni;
        a.iterations = iterations;
        a.burn_in = burnin;
        a.thinning = thin;
        return spajm::cmd_benchmark(a);
      },
      py::arg("out_dir"), py::arg("setting") = 2, py::arg("replications") = 10,
      py::arg("seed") = 1, py::arg("workers") = 1, py::arg("n") = 200, py::arg("ni") = 6,
      py::arg("iterations") = 20000, py::arg("burnin") = 5000, py::arg("thin") = 15,
      "simulate-fit-score replications and aggregate the metrics");
}
