#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "noisygap/bounds.hpp"
#include "noisygap/cli.hpp"
#include "noisygap/error.hpp"
#include "noisygap/fock.hpp"
#include "noisygap/spectral.hpp"

namespace noisygap::cli {
namespace {

using nlohmann::json;
using std::to_string;

std::string num(double v) { return format_number(v); }

json seeds_json(std::uint64_t first, std::size_t count) {
  return {{"first", first}, {"count", count}, {"rule", "sample i uses first + i"}};
}

// Runs fn(i) for i < n on up to `threads` workers; results go to slots the
// caller owns, so the outcome does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ComplexVector leading_mode(const ScaledProduct& acc) {
  const auto snap = eig_sorted(acc.core(), false, DefectivePolicy::kFlag);
  return snap.right_modes.column(0);
}

double ln_eig_ratio(const ScaledProduct& acc) {
  const auto snap = eig_sorted(acc.core(), false, DefectivePolicy::kFlag);
  return std::log(std::abs(snap.eigenvalues[1])) - std::log(std::abs(snap.eigenvalues[0]));
}

CsvTable series_table(const EnsembleResult& r, const std::string& hash) {
  CsvTable t({"config_hash", "series", "t", "mean", "std", "count", "lnMeanExp2", "lnMeanExpNeg2"});
  for (const auto& [name, s] : r.series) {
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      const auto& m = s.moments[i];
      const bool any = m.count() > 0;
      t.add({hash, name, to_string(s.times[i]), any ? num(m.mean()) : "nan", any ? num(std::sqrt(m.variance())) : "nan",
             to_string(m.count()), any ? num(m.log_mean_exp(2)) : "nan", any ? num(m.log_mean_exp(-2)) : "nan"});
    }
  }
  return t;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  std::string hash;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
  json results = json::object();
  json seeds;

  void emit(const std::string& name, const CsvTable& table) { files.emplace_back(name, table.str()); }
};

void gap_convergence(Context& ctx) {
  const auto& c = ctx.cfg;
  EnsembleOptions o;
  o.t_max = c.t_max;
  o.samples = c.samples;
  o.cadence = c.cadence;
  o.threads = ctx.opts.threads;
  o.diagnostics = {Diagnostic::kGap, Diagnostic::kEigRatio};
  const auto r = run_ensemble(c.model, o);
  ctx.emit("gap_series.csv", series_table(r, ctx.hash));
  const double last_ratio = r.at("lnEigRatio").mean().back();

  const auto mean = r.at("gap").mean();
  const std::size_t tail = std::max<std::size_t>(1, mean.size() / 10);
  double s = 0.0;
  for (std::size_t i = mean.size() - tail; i < mean.size(); ++i) s += mean[i];
  ctx.results = {{"finalGap", mean.back()}, {"tailMeanGap", s / static_cast<double>(tail)},
                 {"tailRecords", tail}, {"cadence", r.cadence},
                 {"finalMeanLnEigRatio", last_ratio},
                 {"ratioResolved", last_ratio > kResolvableLnRatio}};
  ctx.seeds = seeds_json(c.model.seed, c.samples);
}

CsvTable lyapunov_table() {
  return CsvTable({"config_hash", "X", "beta", "seed", "blockLength", "blockCount", "burnIn", "e1", "e2", "gap",
                   "gapTimesX", "clampedBlocks"});
}

// One Lyapunov run per seed for each size; returns mean gap per size.
json lyapunov_runs(Context& ctx, const std::vector<std::size_t>& sizes, CsvTable& table) {
  const auto& c = ctx.cfg;
  json per_size = json::array();
  for (std::size_t x : sizes) {
    ModelSpec base = c.model;
    base.size = x;
    std::vector<LyapunovEstimate> est(c.samples);
    parallel_for(c.samples, ctx.opts.threads, [&](std::size_t i) {
      ModelSpec s = base;
      s.seed = base.seed + i;
      est[i] = lyapunov_pair(s, c.block_length, c.block_count, c.burn_in);
    });
    double sum = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
      const auto& e = est[i];
      if (!std::isfinite(e.gap())) throw NumericalError("lyapunov: non-finite exponents for X = " + to_string(x));
      sum += e.gap();
      table.add({ctx.hash, to_string(x), num(base.beta), to_string(base.seed + i), to_string(c.block_length),
                 to_string(c.block_count), to_string(c.burn_in), num(e.e1), num(e.e2), num(e.gap()),
                 num(e.gap() * static_cast<double>(x)), to_string(e.clamped_blocks)});
    }
    const double mean = sum / static_cast<double>(est.size());
    per_size.push_back({{"X", x}, {"meanGap", mean}, {"meanGapTimesX", mean * static_cast<double>(x)}});
  }
  return per_size;
}

void lyapunov(Context& ctx) {
  auto table = lyapunov_table();
  const auto per = lyapunov_runs(ctx, {ctx.cfg.model.size}, table);
  ctx.emit("lyapunov.csv", table);
  ctx.results = per.at(0);
  ctx.results["t"] = ctx.cfg.block_length * ctx.cfg.block_count;
  ctx.seeds = seeds_json(ctx.cfg.model.seed, ctx.cfg.samples);
}

void size_scan(Context& ctx) {
  auto table = lyapunov_table();
  ctx.results = {{"sizes", lyapunov_runs(ctx, ctx.cfg.sizes, table)}};
  ctx.emit("size_scan.csv", table);
  ctx.seeds = seeds_json(ctx.cfg.model.seed, ctx.cfg.samples);
}

void decay_curves(Context& ctx) {
  const auto& c = ctx.cfg;
  EnsembleOptions o;
  o.t_max = c.t_max;
  o.samples = c.samples;
  o.cadence = c.cadence;
  o.threads = ctx.opts.threads;
  o.diagnostics = c.diagnostics;
  const auto r = run_ensemble(c.model, o);
  ctx.emit("series.csv", series_table(r, ctx.hash));

  json res = {{"cadence", r.cadence}};
  const double predicted = perturbative_slope(c.model);
  res["predictedSlopeLnOmegaSv"] = predicted;
  if (r.series.count("lnOmegaSv")) {
    // Fit only where beta^2 t / X <= 0.1, the range of the small-noise expansion.
    const double t_end = 0.1 * static_cast<double>(c.model.size) / (c.model.beta * c.model.beta);
    const auto mean = r.at("lnOmegaSv").mean();
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < r.times.size(); ++i)
      if (static_cast<double>(r.times[i]) <= t_end && std::isfinite(mean[i])) {
        ts.push_back(static_cast<double>(r.times[i]));
        ys.push_back(mean[i]);
      }
    res["fitWindowEnd"] = std::isfinite(t_end) ? json(t_end) : json(nullptr);
    if (ts.size() >= 2) {
      const auto [slope, intercept] = linear_fit(ts, ys);
      res["fittedSlopeLnOmegaSv"] = slope;
      res["fittedInterceptLnOmegaSv"] = intercept;
    } else {
      res["fittedSlopeLnOmegaSv"] = nullptr;
    }
  }
  ctx.results = res;
  ctx.seeds = seeds_json(c.model.seed, c.samples);
}

void trajectories(Context& ctx) {
  const auto& c = ctx.cfg;
  const std::size_t cadence = c.cadence ? c.cadence : default_cadence(c.t_max);
  const SiteGrid grid(c.model.size);
  const FockConfiguration in_a(grid, c.input_a), in_b(grid, c.input_b);
  const double ln_c = std::log(c.c);

  struct Row {
    std::size_t t;
    double ln_ratio, x2a, x2b;
  };
  std::vector<std::vector<Row>> rows(c.samples);
  parallel_for(c.samples, ctx.opts.threads, [&](std::size_t i) {
    ModelSpec s = c.model;
    s.seed = c.model.seed + i;
    const NoisyModel model(s);
    auto acc = ScaledProduct::identity(s.size);
    for (std::size_t t = 1; t <= c.t_max; ++t) {
      model.apply_step(t, acc);
      if (t % cadence && t != c.t_max) continue;
      rows[i].push_back({t, ln_eig_ratio(acc), mean_x_squared(output_distribution(acc, in_a)),
                         mean_x_squared(output_distribution(acc, in_b))});
    }
  });

  CsvTable table({"config_hash", "seed", "t", "lnEigRatio", "x2A", "x2B", "x2Gap"});
  json per_seed = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::optional<double> first_eig, first_x;
    for (const auto& r : rows[i]) {
      const double gap = std::abs(r.x2a - r.x2b);
      table.add({ctx.hash, to_string(c.model.seed + i), to_string(r.t), num(r.ln_ratio), num(r.x2a), num(r.x2b),
                 num(gap)});
      if (!first_eig && r.ln_ratio <= ln_c) first_eig = static_cast<double>(r.t);
      if (!first_x && std::log(gap) <= ln_c) first_x = static_cast<double>(r.t);
    }
    per_seed.push_back({{"seed", c.model.seed + i},
                        {"firstEigRatioBelowC", opt_json(first_eig)},
                        {"firstX2GapBelowC", opt_json(first_x)}});
  }
  ctx.emit("trajectories.csv", table);
  ctx.results = {{"cadence", cadence}, {"c", c.c}, {"trajectories", per_seed}};
  if (c.delta) ctx.results["tauDelta"] = std::abs(ln_c) / *c.delta;
  ctx.seeds = seeds_json(c.model.seed, c.samples);
}

bool is_closed_form(RelaxationKind k) { return k == RelaxationKind::kOmegaSv || k == RelaxationKind::kOmegaEig; }

void relaxation_scan(Context& ctx) {
  const auto& c = ctx.cfg;
  std::vector<RelaxationKind> measured;
  for (auto k : c.kinds)
    if (!is_closed_form(k)) measured.push_back(k);

  CsvTable table({"config_hash", "beta", "kind", "c", "tMax", "cadence", "repeats", "mean", "median", "unbounded"});
  std::map<RelaxationKind, std::vector<std::pair<double, double>>> points;
  for (double beta : c.betas) {
    ModelSpec s = c.model;
    s.beta = beta;
    const double scale = predict(s, c.c, false).tau_omega_sv;
    const auto t_max = static_cast<std::size_t>(std::ceil(c.t_max_factor * scale));
    EnsembleOptions o;
    o.t_max = std::max<std::size_t>(1, t_max);
    o.samples = c.samples;
    o.cadence = std::max<std::size_t>(1, o.t_max / c.records);
    o.threads = ctx.opts.threads;
    o.input_a = c.input_a;
    o.input_b = c.input_b;

    std::map<RelaxationKind, TwoLevelEstimate> est;
    if (!measured.empty())
      for (auto& e : two_level_relaxation(s, o, measured, c.c, c.repeats)) est[e.kind] = e;
    for (auto k : c.kinds) {
      if (is_closed_form(k)) {
        const auto r = relaxation_time_closed(s, k, c.c);
        table.add({ctx.hash, num(beta), std::string(relaxation_kind_name(k)), num(c.c), "", "", "0",
                   r.tau ? num(*r.tau) : "inf", r.tau ? num(*r.tau) : "inf", r.tau ? "0" : "1"});
        if (r.tau) points[k].emplace_back(beta, *r.tau);
        continue;
      }
      const auto& e = est.at(k);
      table.add({ctx.hash, num(beta), std::string(relaxation_kind_name(k)), num(c.c), to_string(o.t_max),
                 to_string(o.cadence), to_string(c.repeats), e.mean ? num(*e.mean) : "nan",
                 e.median ? num(*e.median) : "nan", to_string(e.unbounded)});
      if (e.mean) points[k].emplace_back(beta, *e.mean);
    }
  }
  ctx.emit("relaxation_scan.csv", table);

  json fits = json::object();
  for (auto k : c.kinds) {
    const auto& p = points[k];
    const std::string name(relaxation_kind_name(k));
    if (p.size() < 3) {
      fits[name] = nullptr;
      continue;
    }
    const auto f = power_law_fit(p);
    fits[name] = {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"residual", f.residual}, {"points", p.size()}};
  }
  ctx.results = {{"fits", fits}};
  ctx.seeds = {{"first", c.model.seed},
               {"count", c.samples * c.repeats},
               {"rule", "repeat r, sample i uses first + r * nSamples + i; the same seeds at every beta"}};
}

void bound_scan(Context& ctx) {
  const auto& c = ctx.cfg;
  CsvTable table({"config_hash", "beta", "mu", "nu", "rate", "tauOmegaEig", "tauOmegaSv", "sqrtNuMinusMu"});
  double worst = 0.0;
  for (double beta : c.betas) {
    ModelSpec s = c.model;
    s.beta = beta;
    const double mu = mu_of(build_twofold(s));
    const double nu = nu_of(s);
    const double diff = std::abs(std::sqrt(nu) - mu);
    worst = std::max(worst, diff);
    table.add({ctx.hash, num(beta), num(mu), num(nu), num(cs_bound_rate(mu, nu)), num(tau_omega_eig(mu, nu, c.c)),
               num(predict(s, c.c, false).tau_omega_sv), num(diff)});
  }
  ctx.emit("bound_scan.csv", table);
  ctx.results = {{"maxAbsSqrtNuMinusMu", worst}, {"c", c.c}};
  ctx.seeds = json::object();  // deterministic, no sampling
}

void bunching_distribution(Context& ctx) {
  const auto& c = ctx.cfg;
  const SiteGrid grid(c.model.size);
  const FockConfiguration in_a(grid, c.input_a), in_b(grid, c.input_b);
  const NoisyModel model(c.model);
  auto acc = ScaledProduct::identity(c.model.size);

  CsvTable table({"config_hash", "t", "config", "probA", "probB", "bunching"});
  json per_time = json::array();
  std::size_t t = 0;
  for (std::size_t target : c.times) {
    while (t < target) model.apply_step(++t, acc);
    const auto da = output_distribution(acc, in_a);
    const auto db = output_distribution(acc, in_b);
    const auto mode = leading_mode(acc);
    const auto bunch = bunching_prediction(mode, c.input_a.size());
    for (std::size_t k = 0; k < da.configs.size(); ++k)
      table.add({ctx.hash, to_string(t), da.configs[k].label(), num(da.probs[k]), num(db.probs[k]),
                 num(bunch.probs[k])});
    per_time.push_back({{"t", t},
                        {"lnEigRatio", ln_eig_ratio(acc)},
                        {"tvA", total_variation(da, bunch)},
                        {"tvB", total_variation(db, bunch)},
                        {"x2A", mean_x_squared(da)},
                        {"x2B", mean_x_squared(db)},
                        {"ipr", ipr(mode)}});
  }
  ctx.emit("distribution.csv", table);
  ctx.results = {{"times", per_time}};
  ctx.seeds = seeds_json(c.model.seed, 1);
}

void ipr_scan(Context& ctx) {
  const auto& c = ctx.cfg;
  CsvTable table({"config_hash", "X", "seed", "t", "ipr"});
  json per_size = json::array();
  double lo = INFINITY, hi = 0.0;
  for (std::size_t x : c.sizes) {
    std::vector<double> v(c.samples);
    parallel_for(c.samples, ctx.opts.threads, [&](std::size_t i) {
      ModelSpec s = c.model;
      s.size = x;
      s.seed = c.model.seed + i;
      const NoisyModel model(s);
      auto acc = ScaledProduct::identity(x);
      for (std::size_t t = 1; t <= c.t_max; ++t) model.apply_step(t, acc);
      v[i] = ipr(leading_mode(acc));
    });
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      table.add({ctx.hash, to_string(x), to_string(c.model.seed + i), to_string(c.t_max), num(v[i])});
      sum += v[i];
      sq += v[i] * v[i];
    }
    const double n = static_cast<double>(v.size());
    const double mean = sum / n;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    per_size.push_back({{"X", x}, {"meanIpr", mean}, {"stdIpr", std::sqrt(std::max(0.0, sq / n - mean * mean))}});
  }
  ctx.emit("ipr.csv", table);
  ctx.results = {{"sizes", per_size}, {"maxOverMinMeanIpr", hi / lo}};
  ctx.seeds = seeds_json(c.model.seed, c.samples);
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
  out.close();
  if (!out) throw Error("cannot write " + p.string());
}

}  // namespace

RunReport run_experiment(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.model.seed = *options.seed;
  std::filesystem::create_directories(options.out_dir);
  const OutputLock lock(options.out_dir);
  const auto start = std::chrono::steady_clock::now();

  Context ctx{config, options, config_hash(config), {}, json::object(), json::object()};
  RunReport report;
  const auto echo = config_to_json(config);
  write_text(options.out_dir / "config.json", echo.dump(2) + "\n");
  report.files.push_back(options.out_dir / "config.json");

  switch (config.experiment) {
    case Experiment::kGapConvergence: gap_convergence(ctx); break;
    case Experiment::kLyapunov: lyapunov(ctx); break;
    case Experiment::kDecayCurves: decay_curves(ctx); break;
    case Experiment::kTrajectories: trajectories(ctx); break;
    case Experiment::kRelaxationScan: relaxation_scan(ctx); break;
    case Experiment::kSizeScan: size_scan(ctx); break;
    case Experiment::kBoundScan: bound_scan(ctx); break;
    case Experiment::kBunchingDistribution: bunching_distribution(ctx); break;
    case Experiment::kIprScan: ipr_scan(ctx); break;
  }

  for (const auto& [name, text] : ctx.files) {
    write_text(options.out_dir / name, text);
    report.files.push_back(options.out_dir / name);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.summary = {{"experiment", std::string(experiment_name(config.experiment))},
                    {"config_hash", ctx.hash},
                    {"seeds", ctx.seeds},
                    {"results", ctx.results},
                    {"wall_time", wall}};
  write_text(options.out_dir / "summary.json", report.summary.dump(2) + "\n");
  report.files.push_back(options.out_dir / "summary.json");
  return report;
}

}  // namespace noisygap::cli
