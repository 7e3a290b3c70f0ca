#include "mpmbr/mbr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpmbr/errors.hpp"

namespace mpmbr {

namespace {

void require_match(const UtilityMatrix& matrix, const HypothesisSet& hset) {
  if (matrix.n != hset.candidates.size()) {
    throw DataError("utility matrix size " + std::to_string(matrix.n) +
                    " does not match hypothesis set size " +
                    std::to_string(hset.candidates.size()));
  }
  if (matrix.n == 0) {
    throw EmptyHypothesisError("selection over an empty hypothesis set");
  }
}

// Masked tie-aware argmax; mask[i]=true means candidate i is out of play.
ArgBest argbest_masked(const std::vector<double>& scores,
                       MetricDirection direction, const HypothesisSet& hset,
                       const std::vector<bool>& mask) {
  const double sign =
      direction == MetricDirection::lower_better ? -1.0 : 1.0;
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (mask.empty() ? false : mask[i]) continue;
    if (!std::isfinite(scores[i])) {
      throw DataError("non-finite selection score at index " +
                      std::to_string(i));
    }
    best = std::max(best, sign * scores[i]);
    found = true;
  }
  if (!found) throw EmptyHypothesisError("selection over an empty candidate pool");

  std::vector<size_t> tied;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (mask.empty() ? false : mask[i]) continue;
    if (best - sign * scores[i] <= kTieEps) tied.push_back(i);
  }

  ArgBest result;
  result.tie_broken = tied.size() > 1;
  if (tied.size() == 1) {
    result.index = tied[0];
    return result;
  }
  bool all_logprob = true;
  for (size_t i : tied) {
    if (!hset.candidates[i].logprob) {
      all_logprob = false;
      break;
    }
  }
  size_t winner = tied[0];
  if (all_logprob) {
    for (size_t i : tied) {
      if (*hset.candidates[i].logprob > *hset.candidates[winner].logprob) {
        winner = i;
      }
    }
  }
  result.index = winner;
  return result;
}

std::vector<double> expected_utilities_over(const UtilityMatrix& matrix,
                                            const std::vector<size_t>& refs,
                                            const std::vector<size_t>& rows) {
  std::vector<double> eu(matrix.n, 0.0);
  for (size_t i : rows) {
    double sum = 0.0;
    size_t count = 0;
    for (size_t j : refs) {
      if (!matrix.self_included && i == j) continue;
      sum += matrix.at(i, j);
      ++count;
    }
    eu[i] = count == 0 ? 0.0 : sum / static_cast<double>(count);
  }
  return eu;
}

}  // namespace

const char* to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::mbr:
      return "mbr";
    case SelectionMethod::rerank:
      return "rerank";
    case SelectionMethod::rerank_mbr:
      return "rerank_mbr";
    case SelectionMethod::multi_turn_mbr:
      return "multi_turn_mbr";
    case SelectionMethod::self_consistency:
      return "self_consistency";
  }
  return "mbr";
}

SelectionMethod selection_method_from_string(const std::string& s) {
  if (s == "mbr") return SelectionMethod::mbr;
  if (s == "rerank") return SelectionMethod::rerank;
  if (s == "rerank_mbr") return SelectionMethod::rerank_mbr;
  if (s == "multi_turn_mbr") return SelectionMethod::multi_turn_mbr;
  if (s == "self_consistency") return SelectionMethod::self_consistency;
  throw ConfigError("unknown selection method: " + s);
}

UtilityMatrix utility_matrix(const HypothesisSet& hset,
                             const PairwiseFn& utility,
                             std::string metric_name, bool self_included) {
  const size_t n = hset.candidates.size();
  if (n == 0) {
    throw EmptyHypothesisError("utility_matrix over an empty hypothesis set");
  }
  UtilityMatrix matrix;
  matrix.n = n;
  matrix.metric = std::move(metric_name);
  matrix.self_included = self_included;
  matrix.values.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (!self_included && i == j) continue;
      double value;
      try {
        value = utility(hset.candidates[i], hset.candidates[j]);
      } catch (const std::exception& e) {
        throw DataError("utility '" + matrix.metric + "' failed at pair (" +
                        std::to_string(i) + "," + std::to_string(j) +
                        "): " + e.what());
      }
      if (!std::isfinite(value)) {
        throw DataError("utility '" + matrix.metric +
                        "' returned non-finite value at pair (" +
                        std::to_string(i) + "," + std::to_string(j) + ")");
      }
      matrix.at(i, j) = value;
    }
  }
  return matrix;
}

ArgBest argbest_with_tie_rule(const std::vector<double>& scores,
                              MetricDirection direction,
                              const HypothesisSet& hset) {
  return argbest_masked(scores, direction, hset, {});
}

std::vector<size_t> rank_with_tie_rule(const std::vector<double>& scores,
                                       MetricDirection direction,
                                       const HypothesisSet& hset, size_t m) {
  if (m > scores.size()) {
    throw DomainError("rank_with_tie_rule: m exceeds candidate count");
  }
  std::vector<bool> mask(scores.size(), false);
  std::vector<size_t> order;
  order.reserve(m);
  for (size_t r = 0; r < m; ++r) {
    ArgBest best = argbest_masked(scores, direction, hset, mask);
    order.push_back(best.index);
    mask[best.index] = true;
  }
  return order;
}

SelectionResult mbr_select(const UtilityMatrix& matrix,
                           const HypothesisSet& hset) {
  require_match(matrix, hset);
  std::vector<size_t> all(matrix.n);
  for (size_t i = 0; i < matrix.n; ++i) all[i] = i;
  std::vector<double> eu = expected_utilities_over(matrix, all, all);

  SelectionResult result;
  result.method = SelectionMethod::mbr;
  result.expected_utilities = std::move(eu);
  ArgBest best = argbest_with_tie_rule(result.expected_utilities,
                                       MetricDirection::higher_better, hset);
  result.winner_index = best.index;
  result.tie_broken = best.tie_broken;
  return result;
}

SelectionResult self_consistency(const HypothesisSet& hset,
                                 const AnswerExtractor& extractor) {
  const size_t n = hset.candidates.size();
  if (n == 0) {
    throw EmptyHypothesisError("self_consistency over an empty hypothesis set");
  }
  // Extract once per candidate, then fill the indicator matrix.
  std::vector<std::optional<std::string>> answers(n);
  for (size_t i = 0; i < n; ++i) {
    answers[i] = extractor.extract(hset.candidates[i].text);
  }
  UtilityMatrix matrix;
  matrix.n = n;
  matrix.metric = "exact_match";
  matrix.self_included = true;
  matrix.values.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      matrix.at(i, j) =
          answers[i] && answers[j] && *answers[i] == *answers[j] ? 1.0 : 0.0;
    }
  }
  SelectionResult result = mbr_select(matrix, hset);
  result.method = SelectionMethod::self_consistency;
  return result;
}

SelectionResult rerank(const HypothesisSet& hset,
                       const std::vector<double>& scores,
                       MetricDirection direction) {
  if (scores.size() != hset.candidates.size()) {
    throw DataError("rerank: score count does not match candidate count");
  }
  if (scores.empty()) {
    throw EmptyHypothesisError("rerank over an empty hypothesis set");
  }
  SelectionResult result;
  result.method = SelectionMethod::rerank;
  result.expected_utilities = scores;
  ArgBest best = argbest_with_tie_rule(scores, direction, hset);
  result.winner_index = best.index;
  result.tie_broken = best.tie_broken;
  return result;
}

SelectionResult rerank(const HypothesisSet& hset, const CandidateScoreFn& fn,
                       MetricDirection direction) {
  std::vector<double> scores;
  scores.reserve(hset.candidates.size());
  for (size_t i = 0; i < hset.candidates.size(); ++i) {
    try {
      scores.push_back(fn(hset.candidates[i]));
    } catch (const std::exception& e) {
      throw DataError("reference-free metric failed at candidate " +
                      std::to_string(i) + ": " + e.what());
    }
  }
  return rerank(hset, scores, direction);
}

SelectionResult rerank_then_mbr(const HypothesisSet& hset,
                                const std::vector<double>& rf_scores,
                                MetricDirection rf_direction,
                                const PairwiseFn& utility,
                                std::string utility_name, bool self_included,
                                size_t m) {
  const size_t n = hset.candidates.size();
  if (rf_scores.size() != n) {
    throw DataError("rerank_then_mbr: score count mismatch");
  }
  if (m < 1 || m > n) {
    throw DomainError("rerank_then_mbr: need 1 <= m <= n");
  }
  std::vector<size_t> kept = rank_with_tie_rule(rf_scores, rf_direction, hset, m);
  std::sort(kept.begin(), kept.end());  // generation order within the subset

  HypothesisSet sub;
  sub.input_id = hset.input_id;
  for (size_t idx : kept) sub.candidates.push_back(hset.candidates[idx]);
  UtilityMatrix sub_matrix =
      utility_matrix(sub, utility, std::move(utility_name), self_included);
  SelectionResult sub_result = mbr_select(sub_matrix, sub);

  SelectionResult result;
  result.method = SelectionMethod::rerank_mbr;
  result.winner_index = kept[sub_result.winner_index];
  result.tie_broken = sub_result.tie_broken;
  result.expected_utilities = rf_scores;  // dropped keep their rf score
  for (size_t s = 0; s < kept.size(); ++s) {
    result.expected_utilities[kept[s]] = sub_result.expected_utilities[s];
  }
  return result;
}

SelectionResult multi_turn_mbr(const UtilityMatrix& matrix,
                               const HypothesisSet& hset, size_t m) {
  require_match(matrix, hset);
  if (m < 1 || m > matrix.n) {
    throw DomainError("multi_turn_mbr: need 1 <= m <= n");
  }
  SelectionResult stage1 = mbr_select(matrix, hset);
  std::vector<size_t> kept = rank_with_tie_rule(
      stage1.expected_utilities, MetricDirection::higher_better, hset, m);
  std::sort(kept.begin(), kept.end());

  // Stage 2: same pairwise values, reference set restricted to the kept
  // subset.
  std::vector<double> eu = expected_utilities_over(matrix, kept, kept);
  std::vector<double> stage2_scores;
  stage2_scores.reserve(kept.size());
  HypothesisSet sub;
  sub.input_id = hset.input_id;
  for (size_t idx : kept) {
    sub.candidates.push_back(hset.candidates[idx]);
    stage2_scores.push_back(eu[idx]);
  }
  ArgBest best = argbest_with_tie_rule(stage2_scores,
                                       MetricDirection::higher_better, sub);

  SelectionResult result;
  result.method = SelectionMethod::multi_turn_mbr;
  result.winner_index = kept[best.index];
  result.tie_broken = best.tie_broken;
  result.expected_utilities = stage1.expected_utilities;
  for (size_t idx : kept) result.expected_utilities[idx] = eu[idx];
  return result;
}

}  // namespace mpmbr
