#include "noisygap/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "noisygap/bounds.hpp"
#include "noisygap/error.hpp"
#include "noisygap/fock.hpp"
#include "noisygap/spectral.hpp"

namespace noisygap {
namespace {

constexpr std::pair<Diagnostic, std::string_view> kDiagnosticNames[] = {
    {Diagnostic::kGap, "gap"},           {Diagnostic::kEigRatio, "eigRatio"},
    {Diagnostic::kSvRatio, "svRatio"},   {Diagnostic::kOmegaEig, "omegaEig"},
    {Diagnostic::kOmegaSv, "omegaSv"},   {Diagnostic::kXSquared, "xSquared"},
    {Diagnostic::kTraceMoments, "traceMoments"}, {Diagnostic::kIpr, "ipr"},
};

constexpr std::pair<RelaxationKind, std::string_view> kKindNames[] = {
    {RelaxationKind::kDelta, "tauDelta"},
    {RelaxationKind::kLambdaEig, "tauLambdaEig"},
    {RelaxationKind::kLambdaSv, "tauLambdaSv"},
    {RelaxationKind::kX, "tauX"},
    {RelaxationKind::kLambdaEigPrime, "tauLambdaEigPrime"},
    {RelaxationKind::kLambdaSvPrime, "tauLambdaSvPrime"},
    {RelaxationKind::kOmegaSv, "tauOmegaSv"},
    {RelaxationKind::kOmegaEig, "tauOmegaEig"},
};

int exponent_slot(int k) {
  for (int i = 0; i < 3; ++i)
    if (MomentAccumulator::kExponents[i] == k) return i;
  throw DomainError("log_mean_exp: exponent " + std::to_string(k) + " is not tracked");
}

std::vector<std::string> series_names(Diagnostic d) {
  switch (d) {
    case Diagnostic::kGap: return {"gap"};
    case Diagnostic::kEigRatio: return {"lnEigRatio"};
    case Diagnostic::kSvRatio: return {"lnSvRatio"};
    case Diagnostic::kOmegaEig: return {"lnOmegaEig"};
    case Diagnostic::kOmegaSv: return {"lnOmegaSv"};
    case Diagnostic::kXSquared: return {"x2Gap"};
    case Diagnostic::kTraceMoments: return {"lnTraceSq", "lnTraceDefectSq", "lnInvOmegaEig"};
    case Diagnostic::kIpr: return {"ipr"};
  }
  return {};
}

// Values of every requested series at one recorded time; NaN marks "no value".
class Recorder {
 public:
  Recorder(const ModelSpec& spec, const EnsembleOptions& options) : diags_(options.diagnostics) {
    for (Diagnostic d : diags_)
      for (auto& n : series_names(d)) names_.push_back(n);
    if (has(Diagnostic::kXSquared)) {
      const SiteGrid grid(spec.size);
      input_a_ = FockConfiguration(grid, options.input_a);
      input_b_ = FockConfiguration(grid, options.input_b);
      if (input_a_.boson_count() != input_b_.boson_count() || input_a_.boson_count() == 0)
        throw DomainError("x^2 inputs must hold the same, nonzero number of bosons");
    }
  }

  const std::vector<std::string>& names() const { return names_; }

  void record(const ScaledProduct& acc, std::size_t t, std::vector<double>& out) const {
    out.clear();
    const ComplexMatrix& core = acc.core();
    std::optional<SpectralSnapshot> eig;
    if (has(Diagnostic::kGap) || has(Diagnostic::kEigRatio) || has(Diagnostic::kIpr))
      eig = eig_sorted(core, false, DefectivePolicy::kFlag, t);
    std::optional<std::vector<double>> sv;
    if (has(Diagnostic::kSvRatio) || has(Diagnostic::kOmegaSv)) sv = svd_sorted(core, t).singular_values;
    const double eig_ln_ratio =
        eig ? std::log(std::abs(eig->eigenvalues[1])) - std::log(std::abs(eig->eigenvalues[0])) : 0.0;

    for (Diagnostic d : diags_) {
      switch (d) {
        case Diagnostic::kGap:
          out.push_back(-eig_ln_ratio / static_cast<double>(t));
          break;
        case Diagnostic::kEigRatio:
          out.push_back(eig_ln_ratio);
          break;
        case Diagnostic::kSvRatio:
          out.push_back(std::log((*sv)[1]) - std::log((*sv)[0]));
          break;
        case Diagnostic::kOmegaEig: {
          const auto om = omega_eig(core);
          out.push_back(om ? std::log(*om) : nan());
          break;
        }
        case Diagnostic::kOmegaSv:
          out.push_back(std::log(omega_sv(*sv)));
          break;
        case Diagnostic::kXSquared: {
          const auto pa = output_distribution(core, input_a_);
          const auto pb = output_distribution(core, input_b_);
          out.push_back(std::abs(mean_x_squared(pa) - mean_x_squared(pb)));
          break;
        }
        case Diagnostic::kTraceMoments: {
          const double l = acc.log_scale();
          const cd tr = core.trace();
          cd tr2 = 0.0;
          for (std::size_t i = 0; i < core.rows(); ++i)
            for (std::size_t j = 0; j < core.cols(); ++j) tr2 += core(i, j) * core(j, i);
          out.push_back(2.0 * l + std::log(std::norm(tr)));
          out.push_back(4.0 * l + std::log(std::norm(tr * tr - tr2)));
          const auto om = omega_eig(core);
          out.push_back(om ? -std::log(*om) : nan());
          break;
        }
        case Diagnostic::kIpr:
          out.push_back(ipr(eig->right_modes.column(0)));
          break;
      }
    }
  }

 private:
  static double nan() { return std::numeric_limits<double>::quiet_NaN(); }
  bool has(Diagnostic d) const { return diags_.count(d) != 0; }

  std::set<Diagnostic> diags_;
  std::vector<std::string> names_;
  FockConfiguration input_a_, input_b_;
};

using Grid = std::vector<std::vector<MomentAccumulator>>;  // [series][time]

void run_chunk(const ModelSpec& spec, const EnsembleOptions& options, const Recorder& recorder,
               const std::vector<std::size_t>& times, std::size_t first, std::size_t last, Grid& grid) {
  std::vector<double> values;
  for (std::size_t s = first; s < last; ++s) {
    ModelSpec sample_spec = spec;
    sample_spec.seed = spec.seed + s;
    const NoisyModel model(sample_spec);
    ScaledProduct acc = ScaledProduct::identity(spec.size);
    std::size_t next = 0;
    for (std::size_t t = 1; t <= options.t_max; ++t) {
      model.apply_step(t, acc);
      if (next < times.size() && times[next] == t) {
        recorder.record(acc, t, values);
        for (std::size_t k = 0; k < values.size(); ++k)
          if (std::isfinite(values[k])) grid[k][next].add(values[k]);
        ++next;
      }
    }
  }
}

}  // namespace

std::string_view diagnostic_name(Diagnostic d) {
  for (const auto& [k, n] : kDiagnosticNames)
    if (k == d) return n;
  return "?";
}

Diagnostic parse_diagnostic(std::string_view name) {
  for (const auto& [k, n] : kDiagnosticNames)
    if (n == name) return k;
  throw ConfigError("diagnostics", "unknown diagnostic '" + std::string(name) + "'");
}

std::string_view relaxation_kind_name(RelaxationKind k) {
  for (const auto& [kind, n] : kKindNames)
    if (kind == k) return n;
  return "?";
}

RelaxationKind parse_relaxation_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames)
    if (n == name) return kind;
  throw ConfigError("kinds", "unknown relaxation time '" + std::string(name) + "'");
}

void MomentAccumulator::add(double v) {
  ++n_;
  const double delta = v - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (v - mean_);
  for (int i = 0; i < 3; ++i) {
    const double x = kExponents[i] * v;
    if (n_ == 1) {
      lme_max_[i] = x;
      lme_sum_[i] = 1.0;
    } else if (x <= lme_max_[i]) {
      lme_sum_[i] += std::exp(x - lme_max_[i]);
    } else {
      lme_sum_[i] = lme_sum_[i] * std::exp(lme_max_[i] - x) + 1.0;
      lme_max_[i] = x;
    }
  }
}

void MomentAccumulator::merge(const MomentAccumulator& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
  const double delta = o.mean_ - mean_;
  mean_ += delta * nb / n;
  m2_ += o.m2_ + delta * delta * na * nb / n;
  n_ += o.n_;
  for (int i = 0; i < 3; ++i) {
    const double m = std::max(lme_max_[i], o.lme_max_[i]);
    lme_sum_[i] = lme_sum_[i] * std::exp(lme_max_[i] - m) + o.lme_sum_[i] * std::exp(o.lme_max_[i] - m);
    lme_max_[i] = m;
  }
}

double MomentAccumulator::variance() const noexcept {
  return n_ > 1 ? std::max(0.0, m2_ / static_cast<double>(n_)) : 0.0;
}

double MomentAccumulator::log_mean_exp(int k) const {
  const int i = exponent_slot(k);
  if (n_ == 0) throw DomainError("log_mean_exp: no samples");
  return lme_max_[i] + std::log(lme_sum_[i]) - std::log(static_cast<double>(n_));
}

std::vector<double> EnsembleSeries::mean() const {
  std::vector<double> v;
  for (const auto& m : moments) v.push_back(m.mean());
  return v;
}

std::vector<double> EnsembleSeries::variance() const {
  std::vector<double> v;
  for (const auto& m : moments) v.push_back(m.variance());
  return v;
}

std::vector<double> EnsembleSeries::log_mean_exp(int k) const {
  std::vector<double> v;
  for (const auto& m : moments) v.push_back(m.log_mean_exp(k));
  return v;
}

const EnsembleSeries& EnsembleResult::at(const std::string& name) const {
  const auto it = series.find(name);
  if (it == series.end()) throw DomainError("ensemble result has no series '" + name + "'");
  return it->second;
}

std::size_t default_cadence(std::size_t t_max) { return std::max<std::size_t>(1, t_max / 10000); }

EnsembleResult run_ensemble(const ModelSpec& spec, const EnsembleOptions& options) {
  spec.validate();
  if (options.samples == 0) throw DomainError("run_ensemble: need at least one sample");
  if (options.t_max == 0) throw DomainError("run_ensemble: t_max must be at least 1");
  if (options.diagnostics.empty()) throw DomainError("run_ensemble: no diagnostics requested");
  const Recorder recorder(spec, options);

  EnsembleResult result;
  result.cadence = options.cadence ? options.cadence : default_cadence(options.t_max);
  for (std::size_t t = result.cadence; t <= options.t_max; t += result.cadence) result.times.push_back(t);
  if (result.times.empty() || result.times.back() != options.t_max) result.times.push_back(options.t_max);
  result.first_seed = spec.seed;
  result.samples = options.samples;

  const std::size_t chunks = (options.samples + kEnsembleChunk - 1) / kEnsembleChunk;
  const std::size_t n_series = recorder.names().size();
  std::vector<Grid> partial(chunks, Grid(n_series, std::vector<MomentAccumulator>(result.times.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        run_chunk(spec, options, recorder, result.times, c * kEnsembleChunk,
                  std::min(options.samples, (c + 1) * kEnsembleChunk), partial[c]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = chunks;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, chunks));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Merge in chunk order so the result is independent of the worker count.
  for (std::size_t k = 0; k < n_series; ++k) {
    EnsembleSeries s;
    s.name = recorder.names()[k];
    s.times = result.times;
    s.moments.resize(result.times.size());
    for (std::size_t c = 0; c < chunks; ++c)
      for (std::size_t i = 0; i < result.times.size(); ++i) s.moments[i].merge(partial[c][k][i]);
    result.series.emplace(s.name, std::move(s));
  }
  return result;
}

double resolved_gap(const EnsembleResult& result) {
  const auto& gap = result.at("gap");
  // mean ln|lambda_2/lambda_1| = -t * mean Delta_t; the first record is used
  // even when nothing is resolved.
  std::size_t best = 0;
  for (std::size_t i = 0; i < gap.times.size(); ++i)
    if (-static_cast<double>(gap.times[i]) * gap.moments[i].mean() > kResolvableLnRatio) best = i;
  return gap.moments[best].mean();
}

Diagnostic diagnostic_for(RelaxationKind kind) {
  switch (kind) {
    case RelaxationKind::kDelta: return Diagnostic::kGap;
    case RelaxationKind::kLambdaEig:
    case RelaxationKind::kLambdaEigPrime: return Diagnostic::kEigRatio;
    case RelaxationKind::kLambdaSv:
    case RelaxationKind::kLambdaSvPrime: return Diagnostic::kSvRatio;
    case RelaxationKind::kX: return Diagnostic::kXSquared;
    case RelaxationKind::kOmegaSv:
    case RelaxationKind::kOmegaEig: break;
  }
  throw DomainError(std::string(relaxation_kind_name(kind)) + " has a closed form and is not measured");
}

std::vector<double> relaxation_functional(const EnsembleResult& result, RelaxationKind kind) {
  std::vector<double> f;
  switch (kind) {
    case RelaxationKind::kLambdaEig:
      for (double v : result.at("lnEigRatio").log_mean_exp(-2)) f.push_back(-0.5 * v);
      break;
    case RelaxationKind::kLambdaEigPrime:
      for (double v : result.at("lnEigRatio").log_mean_exp(2)) f.push_back(0.5 * v);
      break;
    case RelaxationKind::kLambdaSv:
      f = result.at("lnSvRatio").mean();
      break;
    case RelaxationKind::kLambdaSvPrime:
      for (double v : result.at("lnSvRatio").log_mean_exp(-2)) f.push_back(-0.5 * v);
      break;
    case RelaxationKind::kX:
      for (double v : result.at("x2Gap").mean()) f.push_back(std::log(v));
      break;
    case RelaxationKind::kDelta: {
      const double delta = resolved_gap(result);
      for (std::size_t t : result.times) f.push_back(-delta * static_cast<double>(t));
      break;
    }
    default:
      throw DomainError(std::string(relaxation_kind_name(kind)) + " has a closed form and no f_t series");
  }
  return f;
}

RelaxationEstimate first_crossing(std::span<const std::size_t> times, std::span<const double> f,
                                  RelaxationKind kind, double c, std::size_t resolution) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("relaxation_time: c must lie in (0, 1)");
  if (times.size() != f.size() || times.empty()) throw DimensionError("relaxation_time: empty or mismatched series");
  RelaxationEstimate e;
  e.kind = kind;
  e.c = c;
  e.resolution = resolution;
  e.last_f = f.back();
  const double target = std::log(c);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] <= target) {
      e.tau = static_cast<double>(times[i]);
      break;
    }
  }
  return e;
}

RelaxationEstimate relaxation_time(const EnsembleResult& result, RelaxationKind kind, double c) {
  if (kind == RelaxationKind::kDelta) {
    auto e = relaxation_time_delta(resolved_gap(result), c);
    e.resolution = result.cadence;
    return e;
  }
  const auto f = relaxation_functional(result, kind);
  return first_crossing(result.times, f, kind, c, result.cadence);
}

RelaxationEstimate relaxation_time_delta(double delta, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("relaxation_time: c must lie in (0, 1)");
  RelaxationEstimate e;
  e.kind = RelaxationKind::kDelta;
  e.c = c;
  e.resolution = 0;
  e.last_f = -delta;
  if (delta > 0.0) e.tau = std::abs(std::log(c)) / delta;
  return e;
}

RelaxationEstimate relaxation_time_closed(const ModelSpec& spec, RelaxationKind kind, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("relaxation_time: c must lie in (0, 1)");
  RelaxationEstimate e;
  e.kind = kind;
  e.c = c;
  e.resolution = 0;
  double tau;
  if (kind == RelaxationKind::kOmegaSv) {
    tau = predict(spec, c, false).tau_omega_sv;
  } else if (kind == RelaxationKind::kOmegaEig) {
    tau = tau_omega_eig(mu_of(build_twofold(spec)), nu_of(spec), c);
  } else {
    throw DomainError(std::string(relaxation_kind_name(kind)) + " has no closed form");
  }
  if (std::isfinite(tau)) e.tau = tau;
  return e;
}

std::vector<TwoLevelEstimate> two_level_relaxation(const ModelSpec& spec, const EnsembleOptions& options,
                                                   std::span<const RelaxationKind> kinds, double c,
                                                   std::size_t repeats) {
  if (repeats == 0) throw DomainError("two_level_relaxation: need at least one repeat");
  if (!(c > 0.0 && c < 1.0)) throw DomainError("relaxation_time: c must lie in (0, 1)");
  EnsembleOptions opts = options;
  for (RelaxationKind k : kinds) opts.diagnostics.insert(diagnostic_for(k));
  std::vector<TwoLevelEstimate> out(kinds.size());
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    out[i].kind = kinds[i];
    out[i].c = c;
  }
  for (std::size_t r = 0; r < repeats; ++r) {
    ModelSpec s = spec;
    s.seed = spec.seed + r * options.samples;
    const auto result = run_ensemble(s, opts);
    for (std::size_t i = 0; i < kinds.size(); ++i) out[i].taus.push_back(relaxation_time(result, kinds[i], c).tau);
  }
  for (auto& est : out) {
    std::vector<double> bounded;
    for (const auto& t : est.taus)
      if (t) bounded.push_back(*t);
    est.unbounded = est.taus.size() - bounded.size();
    if (bounded.empty()) continue;
    double sum = 0.0;
    for (double t : bounded) sum += t;
    est.mean = sum / static_cast<double>(bounded.size());
    std::sort(bounded.begin(), bounded.end());
    const std::size_t m = bounded.size() / 2;
    est.median = bounded.size() % 2 ? bounded[m] : 0.5 * (bounded[m - 1] + bounded[m]);
  }
  return out;
}

std::pair<double, double> linear_fit(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 2) throw DimensionError("linear_fit: need >= 2 matching points");
  const double n = static_cast<double>(t.size());
  double st = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  if (!(stt > 0.0)) throw DomainError("linear_fit: abscissae are all equal");
  const double slope = sty / stt;
  return {slope, my - slope * mt};
}

PowerLawFit power_law_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw DomainError("power_law_fit: need at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [beta, tau] : points) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("power_law_fit: beta must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("power_law_fit: unbounded or non-positive tau");
    lx.push_back(std::log(beta));
    ly.push_back(std::log(tau));
  }
  const auto [slope, intercept] = linear_fit(lx, ly);
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (slope * lx[i] + intercept);
    ss += r * r;
  }
  return {slope, std::exp(intercept), std::sqrt(ss / static_cast<double>(lx.size()))};
}

std::vector<double> fluctuation_report(const EnsembleSeries& gap) {
  std::vector<double> r;
  for (const auto& m : gap.moments) {
    const double sd = std::sqrt(m.variance());
    r.push_back(m.mean() == 0.0 ? std::numeric_limits<double>::infinity() : sd / std::abs(m.mean()));
  }
  return r;
}

}  // namespace noisygap
