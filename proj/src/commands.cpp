#include "spajm/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace spajm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* kVersion = "0.1.0";

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const IoError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return 4;
  return 1;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_checksum(const std::string& path) { return hex64(fnv1a64(read_text_file(path))); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

CutStrategy parse_strategy(const std::string& s) {
  if (s == "events") return CutStrategy::EventTimes;
  if (s == "quantiles") return CutStrategy::Quantiles;
  throw ConfigError("unknown cut strategy '" + s + "' (expected events or quantiles)");
}

LocfPolicy parse_locf(const std::string& s) {
  if (s == "backfill") return LocfPolicy::BackFill;
  if (s == "drop") return LocfPolicy::DropSubject;
  throw ConfigError("unknown locf policy '" + s + "' (expected backfill or drop)");
}

const TermSpec* find_mrf(const PredictorSpec& spec) {
  for (const auto* terms : {&spec.eta_l, &spec.eta_ls, &spec.eta_s})
    for (const auto& t : *terms)
      if (t.kind == TermKind::Mrf) return &t;
  return nullptr;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

json diagnostics_json(const SamplerDiagnostics& d) {
  json out;
  out["exp_clips"] = d.exp_clips;
  out["floored_weights"] = d.floored_weights;
  out["cholesky_jitters"] = d.cholesky_jitters;
  json prop = json::object(), acc = json::object();
  for (const auto& [k, v] : d.mh_proposed) prop[k] = v;
  for (const auto& [k, v] : d.mh_accepted) acc[k] = v;
  out["mh_proposed"] = prop;
  out["mh_accepted"] = acc;
  return out;
}

void write_acceptance_json(const std::string& path, const std::vector<ChainOutput>& chains) {
  json out;
  out["version"] = kVersion;
  out["chains"] = json::array();
  for (std::size_t c = 0; c < chains.size(); ++c) {
    json jc;
    jc["chain"] = c + 1;
    jc["seed"] = chains[c].seed;
    jc["seconds"] = chains[c].seconds;
    json rates = json::object();
    for (const auto& [k, v] : chains[c].acceptance) rates[k] = v;
    jc["acceptance"] = rates;
    jc["diagnostics"] = diagnostics_json(chains[c].diagnostics);
    out["chains"].push_back(jc);
  }
  write_text_file(path, out.dump(2) + "\n");
}

void write_logpost_csv(const std::string& path, const std::vector<ChainOutput>& chains) {
  std::vector<double> iteration, chain, value;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t t = 0; t < chains[c].logpost.size(); ++t) {
      iteration.push_back(static_cast<double>(t + 1));
      chain.push_back(static_cast<double>(c + 1));
      value.push_back(chains[c].logpost[t]);
    }
  Table t;
  t.add_num("iteration", iteration);
  t.add_num("chain", chain);
  t.add_num("logpost", value);
  t.write_csv(path);
}

// draws + summary + curves + logpost + acceptance under `dir`
void write_fit_artifacts(const std::string& dir, const PreparedFit& pf,
                         const std::vector<ChainOutput>& chains, double level) {
  write_draws_csv(dir + "/draws.csv", chains.front());
  for (std::size_t c = 1; c < chains.size(); ++c)
    write_draws_csv(dir + "/draws_chain" + std::to_string(c + 1) + ".csv", chains[c]);
  write_logpost_csv(dir + "/logpost.csv", chains);
  write_acceptance_json(dir + "/acceptance.json", chains);

  Eigen::Index pooled_rows = 0;
  for (const auto& c : chains) pooled_rows += c.draws.rows();
  if (pooled_rows < 100) {
    std::cout << "note: only " << pooled_rows
              << " retained draws, skipping summary.csv (needs >= 100)\n";
    return;
  }
  PosteriorSummary ps = summarize(chains, pf.model, level);
  ps.scalar_table().write_csv(dir + "/summary.csv");
  if (!ps.curves.empty()) {
    std::vector<std::string> term;
    std::vector<double> x, mean, lo, hi;
    for (const auto& cv : ps.curves)
      for (std::size_t i = 0; i < cv.grid.size(); ++i) {
        term.push_back(cv.name);
        x.push_back(cv.grid[i]);
        mean.push_back(cv.mean[i]);
        lo.push_back(cv.hdi_lo[i]);
        hi.push_back(cv.hdi_hi[i]);
      }
    Table t;
    t.add_str("term", term);
    t.add_num("x", x);
    t.add_num("mean", mean);
    t.add_num("hdi_lo", lo);
    t.add_num("hdi_hi", hi);
    t.write_csv(dir + "/curves.csv");
  }
}

void check_sampler_config(const SamplerConfig& s) {
  if (s.iterations < 1) throw ConfigError("iterations must be positive");
  if (s.burn_in < 0 || s.burn_in >= s.iterations)
    throw ConfigError("burn-in must lie in [0, iterations)");
  if (s.thinning < 1) throw ConfigError("thinning must be at least 1");
  if (s.chains < 1) throw ConfigError("chains must be at least 1");
}

}  // namespace

PreparedFit prepare_fit(const ParsedModel& parsed, LongitudinalDataset long_data,
                        SurvivalDataset surv, const std::string& config_dir,
                        const std::string& strategy, int intervals,
                        bool merge_obs_times, const std::string& locf) {
  PreparedFit pf;
  if (const TermSpec* mrf = find_mrf(parsed.predictors)) {
    fs::path p = mrf->map_ref;
    if (p.is_relative() && !config_dir.empty()) p = fs::path(config_dir) / p;
    pf.map = read_gra(p.string());
  }
  const auto problems =
      validate_against_data(parsed.predictors, long_data, surv, pf.map ? &*pf.map : nullptr);
  if (!problems.empty()) throw ConfigError(join(problems, "; "));
  std::vector<double> extra;
  if (merge_obs_times) extra = long_data.time;
  const auto cuts = make_cuts(surv, parse_strategy(strategy), intervals, extra);
  pf.ped = augment(long_data, surv, cuts, parse_locf(locf));
  pf.long_data = std::move(long_data);
  pf.surv = std::move(surv);
  pf.model = assemble_model(parsed, pf.long_data, pf.surv, pf.ped,
                            pf.map ? &*pf.map : nullptr);
  return pf;
}

ParsedModel benchmark_model(int setting, const std::string& map_ref, long iterations,
                            long burn_in, long thinning, std::uint64_t seed) {
  auto lin = [](const std::string& c) {
    TermSpec t;
    t.kind = TermKind::Linear;
    t.covariate = c;
    return t;
  };
  auto ps = [](const std::string& c) {
    TermSpec t;
    t.kind = TermKind::PSpline;
    t.covariate = c;
    return t;
  };
  TermSpec mrf;
  mrf.kind = TermKind::Mrf;
  mrf.covariate = "region";
  mrf.map_ref = map_ref;
  TermSpec rint;
  rint.kind = TermKind::RandomIntercept;
  TermSpec rslope;
  rslope.kind = TermKind::RandomSlope;
  rslope.covariate = "t";
  TermSpec base;
  base.kind = TermKind::BaselinePSpline;

  ParsedModel m;
  m.predictors.eta_l = {lin("x_l1"), ps("x_l2")};
  m.predictors.eta_ls = {lin("x_ls1"), ps("x_ls2"), lin("x_ls3"), lin("t"), rint, rslope};
  m.predictors.eta_s = {lin("x_s1"), ps("x_s2"), base};
  switch (setting) {
    case 1: m.predictors.eta_ls.push_back(mrf); break;
    case 2: m.predictors.eta_s.push_back(mrf); break;
    case 3: m.predictors.eta_l.push_back(mrf); break;
    default: throw ConfigError("setting must be 1, 2, or 3");
  }
  m.predictors.association_init = -0.1;
  m.sampler.iterations = iterations;
  m.sampler.burn_in = burn_in;
  m.sampler.thinning = thinning;
  m.sampler.seed = seed;
  m.sampler.chains = 1;
  return m;
}

void write_draws_csv(const std::string& path, const ChainOutput& chain) {
  Table t;
  const Eigen::Index m = chain.draws.rows();
  for (std::size_t j = 0; j < chain.names.size(); ++j) {
    std::vector<double> col(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
      col[static_cast<std::size_t>(i)] = chain.draws(i, static_cast<Eigen::Index>(j));
    t.add_num(chain.names[j], std::move(col));
  }
  t.write_csv(path);
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_draws_csv(const std::string& path) {
  const Table t = Table::read_csv(path);
  std::vector<std::string> names = t.names();
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(t.nrows()),
                        static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!t.is_numeric(names[j]))
      throw IoError(path + ": column '" + names[j] + "' is not numeric");
    const auto& col = t.num(names[j]);
    for (std::size_t i = 0; i < col.size(); ++i)
      draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  return {std::move(names), std::move(draws)};
}

int cmd_simulate(const SimulateArgs& args) {
  SimulationConfig sc;
  sc.n = args.n;
  sc.ni = args.ni;
  sc.setting = args.setting;
  sc.seed = args.seed;
  sc.map_rows = args.map_rows;
  sc.map_cols = args.map_cols;
  const SimulatedStudy study = simulate_study(sc);

  fs::create_directories(args.out_dir);
  const std::string dir = args.out_dir;
  study.long_data.to_table().write_csv(dir + "/long.csv");
  study.surv_data.to_table().write_csv(dir + "/surv.csv");
  write_gra(study.map.graph, dir + "/grid.gra");
  write_text_file(dir + "/truth.json", study.truth_json);

  json manifest;
  manifest["command"] = "simulate";
  manifest["version"] = kVersion;
  manifest["args"] = {{"setting", args.setting}, {"n", args.n},      {"ni", args.ni},
                      {"seed", args.seed},       {"map_rows", args.map_rows},
                      {"map_cols", args.map_cols}};
  json outputs = json::object();
  for (const char* f : {"long.csv", "surv.csv", "grid.gra", "truth.json"})
    outputs[f] = file_checksum(dir + "/" + f);
  manifest["outputs"] = outputs;
  write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");

  int events = 0;
  for (int d : study.surv_data.event) events += d;
  std::cout << "simulated " << study.surv_data.n_subjects << " subjects ("
            << events << " events, " << study.long_data.y.size()
            << " measurements) into " << dir << "\n";
  return 0;
}

int cmd_augment(const AugmentArgs& args) {
  const auto long_data = LongitudinalDataset::read_csv(args.long_path);
  const auto surv = SurvivalDataset::read_csv(args.surv_path);
  std::vector<double> extra;
  if (args.merge_obs_times) extra = long_data.time;
  const auto cuts = make_cuts(surv, parse_strategy(args.strategy), args.intervals, extra);
  const AugmentedDataset ped = augment(long_data, surv, cuts, parse_locf(args.locf));
  if (fs::path(args.out_path).has_parent_path())
    fs::create_directories(fs::path(args.out_path).parent_path());
  ped.write_csv(args.out_path);
  std::cout << "augmented " << surv.n_subjects << " subjects into " << ped.nrows()
            << " interval rows (" << cuts.size() - 1 << " intervals) at "
            << args.out_path << "\n";
  if (!ped.dropped_subjects.empty())
    std::cout << "dropped " << ped.dropped_subjects.size()
              << " subjects without usable first measurement\n";
  return 0;
}

int cmd_fit(const FitArgs& args) {
  ParsedModel parsed = read_model_config(args.config_path);
  if (args.iterations) parsed.sampler.iterations = *args.iterations;
  if (args.burn_in) parsed.sampler.burn_in = *args.burn_in;
  if (args.thinning) parsed.sampler.thinning = *args.thinning;
  if (args.seed) parsed.sampler.seed = *args.seed;
  if (args.chains) parsed.sampler.chains = *args.chains;
  check_sampler_config(parsed.sampler);

  auto long_data = LongitudinalDataset::read_csv(args.long_path);
  auto surv = SurvivalDataset::read_csv(args.surv_path);
  const std::string config_dir = fs::path(args.config_path).parent_path().string();
  PreparedFit pf = prepare_fit(parsed, std::move(long_data), std::move(surv), config_dir,
                               args.strategy, args.intervals, args.merge_obs_times,
                               args.locf);
  const auto chains = run_chains(pf.model, parsed.sampler);

  fs::create_directories(args.out_dir);
  write_fit_artifacts(args.out_dir, pf, chains, args.level);
  write_text_file(args.out_dir + "/model_config.txt", serialize_model_config(parsed));

  json manifest;
  manifest["command"] = "fit";
  manifest["version"] = kVersion;
  manifest["args"] = {{"config", args.config_path},
                      {"long", args.long_path},
                      {"surv", args.surv_path},
                      {"iterations", parsed.sampler.iterations},
                      {"burnin", parsed.sampler.burn_in},
                      {"thin", parsed.sampler.thinning},
                      {"seed", parsed.sampler.seed},
                      {"chains", parsed.sampler.chains},
                      {"strategy", args.strategy},
                      {"intervals", args.intervals},
                      {"merge_obs_times", args.merge_obs_times},
                      {"locf", args.locf},
                      {"level", args.level}};
  json inputs = json::object();
  inputs["config"] = file_checksum(args.config_path);
  inputs["long"] = file_checksum(args.long_path);
  inputs["surv"] = file_checksum(args.surv_path);
  manifest["inputs"] = inputs;
  manifest["ped_rows"] = pf.ped.nrows();
  manifest["intervals"] = pf.ped.cuts.size() - 1;
  write_text_file(args.out_dir + "/manifest.json", manifest.dump(2) + "\n");

  double secs = 0.0;
  for (const auto& c : chains) secs += c.seconds;
  std::cout << "fit finished: " << chains.size() << " chain(s), "
            << chains.front().draws.rows() << " retained draws each, "
            << pf.ped.nrows() << " augmented rows, " << secs << " s sampling\n";
  return 0;
}

int cmd_summarize(const SummarizeArgs& args) {
  std::vector<std::string> files;
  fs::path base = args.draws_path;
  if (fs::is_directory(base)) {
    files.push_back((base / "draws.csv").string());
    for (int c = 2;; ++c) {
      fs::path extra = base / ("draws_chain" + std::to_string(c) + ".csv");
      if (!fs::exists(extra)) break;
      files.push_back(extra.string());
    }
  } else {
    files.push_back(base.string());
    base = base.parent_path();
  }

  std::vector<std::string> names;
  Eigen::MatrixXd pooled;
  for (const auto& f : files) {
    auto [n, d] = read_draws_csv(f);
    if (names.empty()) {
      names = n;
      pooled = d;
    } else {
      if (n != names) throw IoError("draw files disagree on parameter layout");
      Eigen::MatrixXd grown(pooled.rows() + d.rows(), pooled.cols());
      grown << pooled, d;
      pooled = std::move(grown);
    }
  }

  const PosteriorSummary ps = summarize_draws(names, pooled, args.level);
  const std::string out =
      args.out_path.empty() ? (base / "summary.csv").string() : args.out_path;
  ps.scalar_table().write_csv(out);
  std::cout << "summarized " << pooled.rows() << " draws of " << names.size()
            << " parameters into " << out << "\n";
  return 0;
}

namespace {

struct RepOutcome {
  int rep = 0;
  bool ok = false;
  std::string error;
  int error_code = 0;
  double seconds = 0.0;
  std::vector<MetricRow> metrics;
};

RepOutcome run_rep(const BenchmarkArgs& a, int rep) {
  RepOutcome out;
  out.rep = rep;
  const double t0 = now_seconds();
  const std::string dir = a.out_dir + "/rep_" + std::to_string(rep);
  try {
    fs::create_directories(dir);
    SimulationConfig sc;
    sc.n = a.n;
    sc.ni = a.ni;
    sc.setting = a.setting;
    sc.seed = a.seed + static_cast<std::uint64_t>(rep);
    const SimulatedStudy study = simulate_study(sc);
    study.long_data.to_table().write_csv(dir + "/long.csv");
    study.surv_data.to_table().write_csv(dir + "/surv.csv");
    write_gra(study.map.graph, dir + "/grid.gra");
    write_text_file(dir + "/truth.json", study.truth_json);

    const ParsedModel pm = benchmark_model(a.setting, "grid.gra", a.iterations,
                                           a.burn_in, a.thinning, sc.seed);
    write_text_file(dir + "/config.txt", serialize_model_config(pm));
    const ParsedModel parsed = read_model_config(dir + "/config.txt");

    PreparedFit pf = prepare_fit(parsed, study.long_data, study.surv_data, dir,
                                 a.strategy, a.intervals, a.merge_obs_times, "backfill");
    const auto chains = run_chains(pf.model, parsed.sampler);
    write_fit_artifacts(dir, pf, chains, 0.95);
    out.metrics = score_against_truth(study.truth_json, chains, pf.model, 0.95);
    metric_table(out.metrics).write_csv(dir + "/metrics_rep.csv");
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.error_code = exit_code_for(e);
  }
  out.seconds = now_seconds() - t0;
  return out;
}

}  // namespace

int cmd_benchmark(const BenchmarkArgs& args) {
  if (args.replications < 1) throw ConfigError("replications must be at least 1");
  if (args.workers < 1) throw ConfigError("workers must be at least 1");
  fs::create_directories(args.out_dir);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(args.replications));
  std::atomic<int> next{1};
  std::mutex io_mu;
  auto work = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r > args.replications) break;
      RepOutcome out = run_rep(args, r);
      {
        std::lock_guard<std::mutex> lock(io_mu);
        if (out.ok)
          std::cout << "rep " << r << "/" << args.replications << " done in "
                    << out.seconds << " s\n" << std::flush;
        else
          std::cout << "rep " << r << "/" << args.replications
                    << " FAILED: " << out.error << "\n" << std::flush;
      }
      outcomes[static_cast<std::size_t>(r - 1)] = std::move(out);
    }
  };
  const int workers = std::min(args.workers, args.replications);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  // aggregate over successful replications, targets in first-seen order
  std::vector<std::string> order;
  struct Agg {
    double mse = 0.0, bias = 0.0, mae = 0.0, covered = 0.0;
    int n = 0;
  };
  std::map<std::string, Agg> agg;
  std::vector<double> bp_rep, bp_est, bp_truth, bp_bias, bp_mae;
  std::vector<std::string> bp_target;
  int n_ok = 0;
  for (const auto& out : outcomes) {
    if (!out.ok) continue;
    ++n_ok;
    for (const auto& row : out.metrics) {
      auto it = agg.find(row.target);
      if (it == agg.end()) {
        order.push_back(row.target);
        it = agg.emplace(row.target, Agg{}).first;
      }
      it->second.mse += row.mse;
      it->second.bias += row.bias;
      it->second.mae += row.mae;
      it->second.covered += row.covered;
      it->second.n += 1;
      bp_rep.push_back(static_cast<double>(out.rep));
      bp_target.push_back(row.target);
      bp_est.push_back(row.estimate);
      bp_truth.push_back(row.truth);
      bp_bias.push_back(row.bias);
      bp_mae.push_back(row.mae);
    }
  }

  if (n_ok > 0) {
    std::vector<std::string> target;
    std::vector<double> mse, bias, mae, covered;
    for (const auto& name : order) {
      const Agg& a = agg[name];
      target.push_back(name);
      mse.push_back(a.mse / a.n);
      bias.push_back(a.bias / a.n);
      mae.push_back(a.mae / a.n);
      covered.push_back(a.covered / a.n);
    }
    Table t;
    t.add_str("target", target);
    t.add_num("mse", mse);
    t.add_num("bias", bias);
    t.add_num("mae", mae);
    t.add_num("covered", covered);
    t.write_csv(args.out_dir + "/metrics.csv");

    Table bp;
    bp.add_num("rep", bp_rep);
    bp.add_str("target", bp_target);
    bp.add_num("estimate", bp_est);
    bp.add_num("truth", bp_truth);
    bp.add_num("bias", bp_bias);
    bp.add_num("mae", bp_mae);
    bp.write_csv(args.out_dir + "/boxplot_long.csv");
  }

  json manifest;
  manifest["command"] = "benchmark";
  manifest["version"] = kVersion;
  manifest["args"] = {{"setting", args.setting},
                      {"replications", args.replications},
                      {"seed", args.seed},
                      {"workers", args.workers},
                      {"n", args.n},
                      {"ni", args.ni},
                      {"iterations", args.iterations},
                      {"burnin", args.burn_in},
                      {"thin", args.thinning},
                      {"strategy", args.strategy},
                      {"intervals", args.intervals},
                      {"merge_obs_times", args.merge_obs_times}};
  json reps = json::array();
  for (const auto& out : outcomes) {
    json jr;
    jr["rep"] = out.rep;
    jr["ok"] = out.ok;
    jr["seconds"] = out.seconds;
    if (!out.ok) jr["error"] = out.error;
    reps.push_back(jr);
  }
  manifest["replications"] = reps;
  manifest["succeeded"] = n_ok;
  write_text_file(args.out_dir + "/manifest.json", manifest.dump(2) + "\n");

  std::cout << "benchmark: " << n_ok << "/" << args.replications
            << " replications succeeded, results in " << args.out_dir << "\n";
  if (n_ok == args.replications) return 0;
  if (n_ok == 0) {
    for (const auto& out : outcomes)
      if (!out.ok) return out.error_code != 0 ? out.error_code : 4;
    return 4;
  }
  return 5;
}

}  // namespace spajm
