#include "mpmbr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mpmbr/errors.hpp"
#include "mpmbr/rng.hpp"

namespace mpmbr {

namespace {

double percentile(std::vector<double> sorted_values, double q) {
  const size_t m = sorted_values.size();
  if (m == 1) return sorted_values[0];
  double pos = q * static_cast<double>(m - 1);
  size_t lo = static_cast<size_t>(pos);
  if (lo >= m - 1) return sorted_values[m - 1];
  double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

double mean_of(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

// Prompt-stratified subsample without replacement: every prompt contributes
// proportionally (largest-remainder quotas, ties by group order). Indices
// come back in generation order.
std::vector<size_t> stratified_subsample(const HypothesisSet& hset,
                                         size_t size, Rng& rng) {
  std::vector<std::string> group_order;
  std::unordered_map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < hset.candidates.size(); ++i) {
    const std::string& pid = hset.candidates[i].prompt_id;
    auto [it, inserted] = groups.try_emplace(pid);
    if (inserted) group_order.push_back(pid);
    it->second.push_back(i);
  }
  const size_t n = hset.candidates.size();
  std::vector<size_t> quota(group_order.size(), 0);
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t g = 0; g < group_order.size(); ++g) {
    double exact = static_cast<double>(size) *
                   static_cast<double>(groups[group_order[g]].size()) /
                   static_cast<double>(n);
    quota[g] = static_cast<size_t>(exact);
    assigned += quota[g];
    remainders.emplace_back(exact - static_cast<double>(quota[g]), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; assigned < size; ++r) {
    size_t g = remainders[r % remainders.size()].second;
    if (quota[g] < groups[group_order[g]].size()) {
      ++quota[g];
      ++assigned;
    }
  }

  std::vector<size_t> picked;
  picked.reserve(size);
  for (size_t g = 0; g < group_order.size(); ++g) {
    std::vector<size_t>& members = groups[group_order[g]];
    std::vector<size_t> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (size_t t = 0; t < quota[g]; ++t) picked.push_back(members[order[t]]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

HypothesisSet subset_of(const HypothesisSet& hset,
                        const std::vector<size_t>& indices) {
  HypothesisSet sub;
  sub.input_id = hset.input_id;
  for (size_t idx : indices) sub.candidates.push_back(hset.candidates[idx]);
  return sub;
}

}  // namespace

const char* to_string(UsageMode m) {
  return m == UsageMode::mbr_selected ? "mbr_selected" : "reference_scored";
}

UsageMode usage_mode_from_string(const std::string& s) {
  if (s == "reference_scored") return UsageMode::reference_scored;
  if (s == "mbr_selected") return UsageMode::mbr_selected;
  throw ConfigError("unknown usage mode: " + s);
}

json UsageEstimate::to_json() const {
  json obj = json::object();
  obj["mode"] = to_string(mode);
  json rows = json::array();
  for (const UsageEntry& e : entries) {
    rows.push_back({{"prompt_id", e.prompt_id},
                    {"weight", e.weight},
                    {"wins", e.wins},
                    {"trials", e.trials}});
  }
  obj["prompts"] = std::move(rows);
  return obj;
}

PromptBank UsageEstimate::apply_weights(const PromptBank& bank) const {
  std::unordered_map<std::string, double> weight_by_id;
  for (const UsageEntry& e : entries) weight_by_id[e.prompt_id] = e.weight;
  PromptBank out = bank;
  for (Prompt& p : out.prompts) {
    auto it = weight_by_id.find(p.id);
    if (it == weight_by_id.end()) {
      throw DataError("usage estimate has no entry for prompt " + p.id);
    }
    p.weight = it->second;
  }
  return out;
}

UsageEstimate estimate_usage(const std::vector<TaskInput>& train,
                             const PromptBank& bank, const Backend& backend,
                             const SamplingParams& params,
                             const MetricSpec& eval_metric, UsageMode mode,
                             TaskKind task_kind, const ScoringContext& ctx,
                             uint64_t rng_seed) {
  if (train.empty()) throw DataError("estimate_usage: empty training set");
  if (bank.empty()) throw ConfigError("estimate_usage: empty prompt bank");
  if (mode == UsageMode::reference_scored) {
    for (const TaskInput& input : train) {
      if (input.references.empty()) {
        throw DataError("estimate_usage: input '" + input.id +
                        "' has no references for reference_scored mode");
      }
    }
  }

  SamplingParams one = params;
  one.n_per_prompt = 1;
  one.seed = derive_seed(rng_seed, "usage");

  std::unordered_map<std::string, double> wins;
  for (const Prompt& p : bank.prompts) wins[p.id] = 0.0;
  std::vector<std::string> empty_inputs;

  for (const TaskInput& input : train) {
    HypothesisSet hset = generate(backend, input, bank.prompts, one);
    try {
      hset = filter_candidates(hset, task_kind);
    } catch (const EmptyHypothesisError&) {
      empty_inputs.push_back(input.id);
      continue;
    }
    HypothesisSet active = hset.active_subset();

    std::vector<double> scores;
    MetricDirection direction = eval_metric.direction;
    if (mode == UsageMode::reference_scored) {
      scores.reserve(active.candidates.size());
      for (const Candidate& c : active.candidates) {
        scores.push_back(eval_candidate(eval_metric, input, c.text, ctx));
      }
    } else {
      UtilityMatrix matrix =
          utility_matrix(active, eval_metric, input.source, ctx, true);
      SelectionResult stage = mbr_select(matrix, active);
      scores = stage.expected_utilities;
      direction = MetricDirection::higher_better;
    }

    // Fractional credit across the tie group at the top.
    const double sign = direction == MetricDirection::lower_better ? -1.0 : 1.0;
    double best = -std::numeric_limits<double>::infinity();
    for (double s : scores) best = std::max(best, sign * s);
    std::vector<size_t> tied;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (best - sign * scores[i] <= kTieEps) tied.push_back(i);
    }
    const double credit = 1.0 / static_cast<double>(tied.size());
    for (size_t i : tied) wins[active.candidates[i].prompt_id] += credit;
  }

  if (!empty_inputs.empty()) {
    std::string ids;
    for (const std::string& id : empty_inputs) {
      if (!ids.empty()) ids += ", ";
      ids += id;
    }
    throw DataError("estimate_usage: no surviving candidates for inputs: " + ids);
  }

  UsageEstimate estimate;
  estimate.mode = mode;
  const double total = static_cast<double>(train.size());
  for (const Prompt& p : bank.prompts) {
    UsageEntry entry;
    entry.prompt_id = p.id;
    entry.wins = wins[p.id];
    entry.trials = static_cast<int>(train.size());
    entry.weight = entry.wins / total;
    estimate.entries.push_back(std::move(entry));
  }
  return estimate;
}

std::pair<std::vector<TaskInput>, std::vector<TaskInput>> holdout_split(
    const std::vector<TaskInput>& dataset, double fraction, uint64_t rng_seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw DomainError("holdout_split: fraction must be in (0, 1)");
  }
  const size_t n = dataset.size();
  if (n < 2) throw DomainError("holdout_split: need at least 2 inputs");
  long long t = std::llround(fraction * static_cast<double>(n));
  if (t < 1) t = 1;
  if (t >= static_cast<long long>(n)) {
    throw DomainError("holdout_split: fraction leaves the test side empty");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(rng_seed, "holdout"));
  rng.shuffle(order);

  std::pair<std::vector<TaskInput>, std::vector<TaskInput>> split;
  for (size_t i = 0; i < n; ++i) {
    if (i < static_cast<size_t>(t)) {
      split.first.push_back(dataset[order[i]]);
    } else {
      split.second.push_back(dataset[order[i]]);
    }
  }
  return split;
}

double oracle_score(const HypothesisSet& hset,
                    const std::function<double(const Candidate&)>& eval,
                    MetricDirection direction) {
  bool found = false;
  double best = 0.0;
  const double sign = direction == MetricDirection::lower_better ? -1.0 : 1.0;
  for (const Candidate& c : hset.candidates) {
    if (!c.active()) continue;
    double score = eval(c);
    if (!found || sign * score > sign * best) {
      best = score;
      found = true;
    }
  }
  if (!found) {
    throw EmptyHypothesisError("oracle_score: no active candidates for input '" +
                               hset.input_id + "'");
  }
  return best;
}

double oracle_score(const HypothesisSet& hset, const TaskInput& input,
                    const MetricSpec& eval_metric, const ScoringContext& ctx) {
  if (eval_metric.mode != MetricMode::reference_based_eval) {
    throw ConfigError("oracle_score: metric '" + eval_metric.name +
                      "' is not reference-based");
  }
  if (input.references.empty()) {
    throw DataError("oracle_score: input '" + input.id + "' has no references");
  }
  return oracle_score(
      hset,
      [&](const Candidate& c) {
        return eval_candidate(eval_metric, input, c.text, ctx);
      },
      eval_metric.direction);
}

double expected_pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n || k < 1 || k > n) {
    throw DomainError("expected_pass_at_k: need 0 <= c <= n and 1 <= k <= n");
  }
  if (n - c < k) return 1.0;
  double prod = 1.0;
  for (int i = 0; i < k; ++i) {
    prod *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - prod;
}

json SignificanceResult::to_json() const {
  return json{{"p_value", p_value},
              {"iterations", iterations},
              {"mean_a", mean_a},
              {"mean_b", mean_b},
              {"wins_a", wins_a}};
}

SignificanceResult bootstrap_significance(const std::vector<double>& scores_a,
                                          const std::vector<double>& scores_b,
                                          int iterations, uint64_t rng_seed) {
  if (scores_a.size() != scores_b.size()) {
    throw DataError("bootstrap_significance: paired lists have different lengths");
  }
  const size_t n = scores_a.size();
  if (n < 2) throw DataError("bootstrap_significance: need at least 2 pairs");
  if (iterations < 1) throw DomainError("bootstrap_significance: iterations must be positive");

  Rng rng(derive_seed(rng_seed, "bootstrap"));
  int wins = 0;
  for (int it = 0; it < iterations; ++it) {
    double sum_a = 0.0;
    double sum_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
      size_t idx = rng.next_index(n);
      sum_a += scores_a[idx];
      sum_b += scores_b[idx];
    }
    if (sum_a > sum_b) ++wins;
  }

  SignificanceResult result;
  result.iterations = iterations;
  result.wins_a = wins;
  result.p_value = 1.0 - static_cast<double>(wins) / static_cast<double>(iterations);
  result.mean_a = mean_of(scores_a);
  result.mean_b = mean_of(scores_b);
  return result;
}

std::vector<CurvePoint> size_curve(const std::vector<TaskInput>& inputs,
                                   const std::vector<HypothesisSet>& hsets,
                                   const std::vector<int>& sizes,
                                   const SelectFn& select_fn,
                                   const EvalFn& eval_fn,
                                   const SizeCurveOptions& options) {
  if (inputs.size() != hsets.size() || inputs.empty()) {
    throw DataError("size_curve: inputs and hypothesis sets must match 1:1");
  }
  if (options.iterations < 1) {
    throw DomainError("size_curve: iterations must be positive");
  }
  for (int size : sizes) {
    if (size < 1) throw DomainError("size_curve: sizes must be positive");
    for (const HypothesisSet& hset : hsets) {
      if (static_cast<size_t>(size) > hset.candidates.size()) {
        throw DomainError("size_curve: size " + std::to_string(size) +
                          " exceeds candidate count for input '" +
                          hset.input_id + "'");
      }
    }
  }

  std::vector<CurvePoint> points;
  for (int size : sizes) {
    std::vector<double> iteration_means;
    iteration_means.reserve(options.iterations);
    for (int it = 0; it < options.iterations; ++it) {
      double sum = 0.0;
      for (size_t x = 0; x < inputs.size(); ++x) {
        std::vector<size_t> picked;
        if (options.nested) {
          // Fixed permutation per (input, iteration): prefixes nest.
          std::vector<size_t> order(hsets[x].candidates.size());
          std::iota(order.begin(), order.end(), 0);
          Rng rng(derive_seed(options.rng_seed, "curve_nested",
                              inputs[x].id, static_cast<uint64_t>(it)));
          rng.shuffle(order);
          picked.assign(order.begin(), order.begin() + size);
          std::sort(picked.begin(), picked.end());
        } else {
          Rng rng(derive_seed(options.rng_seed, "curve", inputs[x].id,
                              static_cast<uint64_t>(it),
                              static_cast<uint64_t>(size)));
          picked = stratified_subsample(hsets[x], static_cast<size_t>(size), rng);
        }
        HypothesisSet sub = subset_of(hsets[x], picked);
        SelectionResult selection = select_fn(sub);
        sum += eval_fn(inputs[x], sub.candidates[selection.winner_index]);
      }
      iteration_means.push_back(sum / static_cast<double>(inputs.size()));
    }

    CurvePoint point;
    point.set_size = size;
    point.iterations = options.iterations;
    point.mean_score = mean_of(iteration_means);
    std::vector<double> sorted = iteration_means;
    std::sort(sorted.begin(), sorted.end());
    point.ci_low = std::min(percentile(sorted, 0.025), point.mean_score);
    point.ci_high = std::max(percentile(sorted, 0.975), point.mean_score);
    points.push_back(point);
  }
  return points;
}

namespace {

std::vector<std::vector<double>> parse_latents(const HypothesisSet& hset) {
  std::vector<std::vector<double>> latents;
  latents.reserve(hset.candidates.size());
  for (const Candidate& c : hset.candidates) {
    latents.push_back(sim_deserialize(c.text));
  }
  return latents;
}

double latent_distance(const std::vector<double>& a,
                       const std::vector<double>& b) {
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

// MBR with the negative-latent-distance utility; returns eval (negative
// distance of the winner to gold).
double run_sim_mbr(const HypothesisSet& hset, const std::vector<double>& gold) {
  std::vector<std::vector<double>> latents = parse_latents(hset);
  const size_t n = latents.size();
  UtilityMatrix matrix;
  matrix.n = n;
  matrix.metric = "neg_latent_distance";
  matrix.self_included = true;
  matrix.values.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i; j < n; ++j) {
      double u = -latent_distance(latents[i], latents[j]);
      matrix.at(i, j) = u;
      matrix.at(j, i) = u;
    }
  }
  SelectionResult selection = mbr_select(matrix, hset);
  return -latent_distance(latents[selection.winner_index], gold);
}

}  // namespace

json SimStudyReport::to_json() const {
  json obj = json::object();
  obj["n_prompts"] = n_prompts;
  obj["set_size"] = set_size;
  obj["n_seeds"] = n_seeds;
  obj["n_inputs"] = n_inputs;
  json jrows = json::array();
  for (const SimStudyRow& row : rows) {
    jrows.push_back({{"temperature", row.temperature},
                     {"mean_eval_single", row.mean_eval_single},
                     {"mean_eval_multi", row.mean_eval_multi},
                     {"diversity_single", row.diversity_single},
                     {"diversity_multi", row.diversity_multi},
                     {"significance", row.significance.to_json()},
                     {"paired_single", row.paired_single},
                     {"paired_multi", row.paired_multi}});
  }
  obj["rows"] = std::move(jrows);
  return obj;
}

SimStudyReport sim_study(const SimConfig& sim, size_t n_prompts,
                         size_t set_size,
                         const std::vector<double>& temperatures,
                         const std::vector<uint64_t>& seeds) {
  if (n_prompts == 0 || n_prompts > sim.offsets.size()) {
    throw DomainError("sim_study: n_prompts must be in [1, offsets]");
  }
  if (set_size == 0) throw DomainError("sim_study: set_size must be positive");
  if (temperatures.empty() || seeds.empty()) {
    throw DomainError("sim_study: need at least one temperature and seed");
  }

  Backend backend = Backend::make_sim(sim);
  std::vector<Prompt> bank = sim.prompt_bank();
  std::vector<TaskInput> inputs = sim.task_inputs();

  // Best single prompt by ground truth: smallest offset norm, ties by index.
  size_t best_prompt = 0;
  double best_norm = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n_prompts; ++i) {
    double norm = 0.0;
    for (double v : sim.offsets[i]) norm += v * v;
    if (norm < best_norm - 1e-15) {
      best_norm = norm;
      best_prompt = i;
    }
  }

  std::vector<Prompt> single_entries(set_size, bank[best_prompt]);
  std::vector<Prompt> multi_entries;
  multi_entries.reserve(set_size);
  for (size_t e = 0; e < set_size; ++e) {
    multi_entries.push_back(bank[e % n_prompts]);
  }

  SimStudyReport report;
  report.n_prompts = n_prompts;
  report.set_size = set_size;
  report.n_seeds = seeds.size();
  report.n_inputs = inputs.size();

  for (size_t t = 0; t < temperatures.size(); ++t) {
    SimStudyRow row;
    row.temperature = temperatures[t];
    double diversity_single_sum = 0.0;
    double diversity_multi_sum = 0.0;

    for (uint64_t seed : seeds) {
      for (const TaskInput& input : inputs) {
        SamplingParams params;
        params.temperature = temperatures[t];
        params.top_p = 1.0;
        params.n_per_prompt = 1;
        // Both arms share the seed stream, so identical entry lists yield
        // identical candidates.
        params.seed = derive_seed(seed, "sim_study", static_cast<uint64_t>(t),
                                  input.id);
        const std::vector<double>& gold = sim.gold_for(input.id);

        HypothesisSet hs_single = generate(backend, input, single_entries, params);
        HypothesisSet hs_multi = generate(backend, input, multi_entries, params);

        row.paired_single.push_back(run_sim_mbr(hs_single, gold));
        row.paired_multi.push_back(run_sim_mbr(hs_multi, gold));
        diversity_single_sum += distinct_bigram_ratio(hs_single);
        diversity_multi_sum += distinct_bigram_ratio(hs_multi);
      }
    }

    const double pairs = static_cast<double>(row.paired_single.size());
    row.mean_eval_single = mean_of(row.paired_single);
    row.mean_eval_multi = mean_of(row.paired_multi);
    row.diversity_single = diversity_single_sum / pairs;
    row.diversity_multi = diversity_multi_sum / pairs;
    row.significance = bootstrap_significance(
        row.paired_multi, row.paired_single, 1000,
        derive_seed(seeds[0], "sim_study_bootstrap", static_cast<uint64_t>(t)));
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mpmbr
