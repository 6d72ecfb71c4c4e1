#pragma once

// Monte Carlo driver over seeded trajectories. Sample i uses seed
// spec.seed + i; samples are accumulated in fixed chunks that are merged in
// chunk order, so results do not depend on the number of worker threads.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisygap/models.hpp"

namespace noisygap {

enum class Diagnostic {
  kGap,            // "gap":          Delta_t = -ln|lambda_2/lambda_1| / t
  kEigRatio,       // "lnEigRatio":   ln|lambda_2/lambda_1|
  kSvRatio,        // "lnSvRatio":    ln(Lambda_2/Lambda_1)
  kOmegaEig,       // "lnOmegaEig":   ln Omega^lambda
  kOmegaSv,        // "lnOmegaSv":    ln Omega^Lambda
  kXSquared,       // "x2Gap":        |<x^2>_a - <x^2>_b|
  kTraceMoments,   // "lnTraceSq", "lnTraceDefectSq", "lnInvOmegaEig"
  kIpr,            // "ipr":          IPR of the dominant right mode
};

std::string_view diagnostic_name(Diagnostic d);
Diagnostic parse_diagnostic(std::string_view name);  // throws ConfigError

/// Running moments of one diagnostic at one recorded time. Besides mean and
/// variance it keeps ln avg(e^{k v}) for k in {1, 2, -2}, merged stably.
class MomentAccumulator {
 public:
  static constexpr int kExponents[3] = {1, 2, -2};

  void add(double v);
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept;  // population variance, 0 for one sample
  /// ln avg(exp(k v)); k must be one of kExponents.
  double log_mean_exp(int k) const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double lme_max_[3] = {0.0, 0.0, 0.0};
  double lme_sum_[3] = {0.0, 0.0, 0.0};
};

struct EnsembleSeries {
  std::string name;
  std::vector<std::size_t> times;
  std::vector<MomentAccumulator> moments;  // one per time

  std::vector<double> mean() const;
  std::vector<double> variance() const;
  std::vector<double> log_mean_exp(int k) const;
};

struct EnsembleOptions {
  std::size_t t_max = 1000;
  std::size_t samples = 100;
  std::set<Diagnostic> diagnostics;
  std::size_t cadence = 0;     // record every k steps; 0 means max(1, t_max / 1e4)
  std::size_t threads = 1;
  std::vector<long> input_a = {-5, 5};  // x^2 inputs
  std::vector<long> input_b = {-1, 0};
};

inline constexpr std::size_t kEnsembleChunk = 8;

struct EnsembleResult {
  std::size_t cadence = 1;
  std::vector<std::size_t> times;
  std::uint64_t first_seed = 0;
  std::size_t samples = 0;
  std::map<std::string, EnsembleSeries> series;

  const EnsembleSeries& at(const std::string& name) const;  // throws DomainError
};

std::size_t default_cadence(std::size_t t_max);

/// Runs options.samples trajectories of length t_max and records the chosen
/// diagnostics every `cadence` steps (and at t_max).
EnsembleResult run_ensemble(const ModelSpec& spec, const EnsembleOptions& options);

enum class RelaxationKind {
  kDelta,           // f_t = -Delta t (closed form |ln c| / Delta, Delta from resolved_gap)
  kLambdaEig,       // f_t = -ln(avg |lambda_1/lambda_2|^2) / 2
  kLambdaSv,        // f_t = avg ln(Lambda_2/Lambda_1)
  kX,               // f_t = ln avg |<x^2>_a - <x^2>_b|
  kLambdaEigPrime,  // f_t = ln(avg |lambda_2/lambda_1|^2) / 2
  kLambdaSvPrime,   // f_t = -ln(avg |Lambda_1/Lambda_2|^2) / 2
  kOmegaSv,         // closed form from the perturbative slope
  kOmegaEig,        // closed form from mu and nu
};

std::string_view relaxation_kind_name(RelaxationKind k);
RelaxationKind parse_relaxation_kind(std::string_view name);  // throws ConfigError

struct RelaxationEstimate {
  RelaxationKind kind = RelaxationKind::kLambdaSv;
  double c = 0.0;
  std::optional<double> tau;  // empty when f_t never reached ln c
  double last_f = 0.0;        // f at the last recorded time
  std::size_t resolution = 1; // recording cadence
};

/// f_t series for a measured kind.
std::vector<double> relaxation_functional(const EnsembleResult& result, RelaxationKind kind);

/// Smallest recorded t with f_t <= ln c.
RelaxationEstimate relaxation_time(const EnsembleResult& result, RelaxationKind kind, double c);
RelaxationEstimate first_crossing(std::span<const std::size_t> times, std::span<const double> f,
                                  RelaxationKind kind, double c, std::size_t resolution);

/// Closed forms: |ln c| / Delta, and the two tau_Omega values.
RelaxationEstimate relaxation_time_delta(double delta, double c);
RelaxationEstimate relaxation_time_closed(const ModelSpec& spec, RelaxationKind kind, double c);

/// ln(1e-12). Below it |lambda_2/lambda_1| of a normalized product is at the
/// rounding level of a double-precision eigensolver, and Delta_t saturates near 28/t.
inline constexpr double kResolvableLnRatio = -27.631021115928547;

/// Mean Delta_t at the latest record whose mean ln|lambda_2/lambda_1| is still
/// above kResolvableLnRatio (the first record if none is).
double resolved_gap(const EnsembleResult& result);

/// Diagnostic needed to measure a kind (kDelta is measured through the gap).
Diagnostic diagnostic_for(RelaxationKind kind);

/// Outer average over `repeats` independent ensembles; repeat r uses seeds
/// spec.seed + r * samples + i. Mean and median are taken over bounded taus.
struct TwoLevelEstimate {
  RelaxationKind kind = RelaxationKind::kLambdaSv;
  double c = 0.0;
  std::vector<std::optional<double>> taus;
  std::optional<double> mean;
  std::optional<double> median;
  std::size_t unbounded = 0;
};

/// Runs the repeats once and evaluates every kind on the same ensembles.
std::vector<TwoLevelEstimate> two_level_relaxation(const ModelSpec& spec, const EnsembleOptions& options,
                                                   std::span<const RelaxationKind> kinds, double c,
                                                   std::size_t repeats);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // root-mean-square residual in ln tau
};

/// Least squares on (ln beta, ln tau); needs >= 3 points, all positive and finite.
PowerLawFit power_law_fit(std::span<const std::pair<double, double>> points);

/// Least-squares slope and intercept of y against t.
std::pair<double, double> linear_fit(std::span<const double> t, std::span<const double> y);

/// std/mean of the gap at each recorded time; +infinity where the mean is 0.
std::vector<double> fluctuation_report(const EnsembleSeries& gap);

}  // namespace noisygap
