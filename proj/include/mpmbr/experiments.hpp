#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mpmbr/backends.hpp"
#include "mpmbr/mbr.hpp"
#include "mpmbr/prompt.hpp"
#include "mpmbr/scoring.hpp"
#include "mpmbr/task.hpp"

namespace mpmbr {

enum class UsageMode { reference_scored, mbr_selected };
const char* to_string(UsageMode m);
UsageMode usage_mode_from_string(const std::string& s);

struct UsageEntry {
  std::string prompt_id;
  double weight = 0.0;
  double wins = 0.0;
  int trials = 0;
};

// Prompt usage distribution: the proportion of inputs on which each prompt
// produced the winning candidate. Ties share fractional credit, so wins sum
// exactly to the number of inputs.
struct UsageEstimate {
  std::vector<UsageEntry> entries;  // bank order
  UsageMode mode = UsageMode::reference_scored;

  json to_json() const;
  PromptBank apply_weights(const PromptBank& bank) const;
};

// One candidate per prompt per training input; the prompt of the best
// candidate gets the credit. reference_scored credits the highest eval
// score against references; mbr_selected credits the MBR winner's prompt
// (the same metric doubles as the pairwise utility). Inputs whose
// candidates all get filtered raise a DataError listing their ids.
UsageEstimate estimate_usage(const std::vector<TaskInput>& train,
                             const PromptBank& bank, const Backend& backend,
                             const SamplingParams& params,
                             const MetricSpec& eval_metric, UsageMode mode,
                             TaskKind task_kind, const ScoringContext& ctx,
                             uint64_t rng_seed);

// Seeded shuffle, then exact partition: train takes round(fraction * N)
// items (at least 1, rounding half away from zero); DomainError if either
// side would be empty.
std::pair<std::vector<TaskInput>, std::vector<TaskInput>> holdout_split(
    const std::vector<TaskInput>& dataset, double fraction, uint64_t rng_seed);

// Best achievable per-input score over the active candidates.
double oracle_score(const HypothesisSet& hset,
                    const std::function<double(const Candidate&)>& eval,
                    MetricDirection direction);
double oracle_score(const HypothesisSet& hset, const TaskInput& input,
                    const MetricSpec& eval_metric, const ScoringContext& ctx);

// Probability that a uniformly random k-subset of n candidates contains at
// least one of the c passing ones: 1 - C(n-c, k) / C(n, k), computed in
// overflow-safe product form.
double expected_pass_at_k(int n, int c, int k);

struct SignificanceResult {
  double p_value = 1.0;
  int iterations = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  int wins_a = 0;

  json to_json() const;
};

// Paired bootstrap: resample input indices with replacement, count the
// resamples where system a's mean strictly exceeds b's, report
// p = 1 - wins_a / iterations. Resampled indices depend only on
// (seed, size, iterations), never on the score values.
SignificanceResult bootstrap_significance(const std::vector<double>& scores_a,
                                          const std::vector<double>& scores_b,
                                          int iterations, uint64_t rng_seed);

struct CurvePoint {
  int set_size = 0;
  double mean_score = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int iterations = 0;
};

using SelectFn = std::function<SelectionResult(const HypothesisSet&)>;
using EvalFn = std::function<double(const TaskInput&, const Candidate&)>;

struct SizeCurveOptions {
  int iterations = 5;
  uint64_t rng_seed = 0;
  // nested=true draws one permutation per (input, iteration) and uses its
  // prefixes, so subsamples grow monotonically with size. The default draws
  // an independent prompt-stratified subsample per size.
  bool nested = false;
};

// Candidate-set-size curve: per iteration, subsample every input's
// candidates (without replacement) down to the given size, select, and
// evaluate the winner; the point carries the mean over iterations and the
// 2.5/97.5 percentile interval (widened, if needed, to contain the mean).
std::vector<CurvePoint> size_curve(const std::vector<TaskInput>& inputs,
                                   const std::vector<HypothesisSet>& hsets,
                                   const std::vector<int>& sizes,
                                   const SelectFn& select_fn,
                                   const EvalFn& eval_fn,
                                   const SizeCurveOptions& options);

struct SimStudyRow {
  double temperature = 0.0;
  double mean_eval_single = 0.0;
  double mean_eval_multi = 0.0;
  double diversity_single = 0.0;
  double diversity_multi = 0.0;
  SignificanceResult significance;  // multi vs single, paired over seed x input
  std::vector<double> paired_single;
  std::vector<double> paired_multi;
};

struct SimStudyReport {
  size_t n_prompts = 0;
  size_t set_size = 0;
  size_t n_seeds = 0;
  size_t n_inputs = 0;
  std::vector<SimStudyRow> rows;

  json to_json() const;
};

// Synthetic multi-prompt vs best-single-prompt comparison on the sim
// backend. Both arms get identical budgets (set_size candidates) and share
// the same seed stream; eval is the negative latent distance to gold, the
// pairwise utility the negative distance between candidates.
SimStudyReport sim_study(const SimConfig& sim, size_t n_prompts,
                         size_t set_size,
                         const std::vector<double>& temperatures,
                         const std::vector<uint64_t>& seeds);

}  // namespace mpmbr
