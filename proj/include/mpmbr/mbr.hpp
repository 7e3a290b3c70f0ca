#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mpmbr/metrics.hpp"
#include "mpmbr/task.hpp"

namespace mpmbr {

// Two scores within this absolute distance count as tied.
inline constexpr double kTieEps = 1e-12;

// Pairwise utilities u(y, y') over one hypothesis set. values[i*n+j] scores
// candidate i against reference j. With self_included=false the diagonal is
// left at 0 and ignored by consumers.
struct UtilityMatrix {
  size_t n = 0;
  std::vector<double> values;
  std::string metric;
  bool self_included = true;

  double at(size_t i, size_t j) const { return values[i * n + j]; }
  double& at(size_t i, size_t j) { return values[i * n + j]; }
};

enum class SelectionMethod { mbr, rerank, rerank_mbr, multi_turn_mbr, self_consistency };

const char* to_string(SelectionMethod m);
SelectionMethod selection_method_from_string(const std::string& s);

struct SelectionResult {
  size_t winner_index = 0;
  // Per-candidate score from the last stage the candidate took part in:
  // expected utility for MBR stages, raw reference-free score for candidates
  // dropped by a rerank stage.
  std::vector<double> expected_utilities;
  SelectionMethod method = SelectionMethod::mbr;
  bool tie_broken = false;
};

using PairwiseFn = std::function<double(const Candidate&, const Candidate&)>;
using CandidateScoreFn = std::function<double(const Candidate&)>;

// Computes the n x n utility matrix. With self_included=false the diagonal
// is skipped (n^2 - n metric calls instead of n^2). Metric exceptions are
// rethrown as DataError carrying the (i, j) pair.
UtilityMatrix utility_matrix(const HypothesisSet& hset,
                             const PairwiseFn& utility,
                             std::string metric_name, bool self_included);

// Tie-aware argmax. Scores within kTieEps of the best form the tie group;
// if every member carries a logprob the highest wins, otherwise the
// earliest generation index does.
struct ArgBest {
  size_t index = 0;
  bool tie_broken = false;
};
ArgBest argbest_with_tie_rule(const std::vector<double>& scores,
                              MetricDirection direction,
                              const HypothesisSet& hset);

// Top-m ranking obtained by repeating the tie-aware argmax, so subset
// selection is "stable under the tie rule" by construction. Returned in
// selection order.
std::vector<size_t> rank_with_tie_rule(const std::vector<double>& scores,
                                       MetricDirection direction,
                                       const HypothesisSet& hset, size_t m);

// Full MBR: expected utility of each candidate is its mean utility against
// every reference (the set itself), the winner the tie-aware argmax.
SelectionResult mbr_select(const UtilityMatrix& matrix,
                           const HypothesisSet& hset);

// Self-consistency: MBR under the indicator utility over extracted answers.
SelectionResult self_consistency(const HypothesisSet& hset,
                                 const AnswerExtractor& extractor);

// Reference-free rerank over precomputed per-candidate scores (stored
// as-is; lower_better metrics are only flipped at argmax time).
SelectionResult rerank(const HypothesisSet& hset,
                       const std::vector<double>& scores,
                       MetricDirection direction);
SelectionResult rerank(const HypothesisSet& hset, const CandidateScoreFn& fn,
                       MetricDirection direction);

// Two-stage selection: keep the top m by reference-free score, then run MBR
// inside the kept subset (n + m^2 metric calls). Winner index and score
// vector are reported in the original indexing.
SelectionResult rerank_then_mbr(const HypothesisSet& hset,
                                const std::vector<double>& rf_scores,
                                MetricDirection rf_direction,
                                const PairwiseFn& utility,
                                std::string utility_name, bool self_included,
                                size_t m);

// MBR, then MBR again restricted to the stage-1 top m. Stage 2 reuses the
// stage-1 pairwise values (no re-scoring); expected utilities still change
// because the reference set shrinks.
SelectionResult multi_turn_mbr(const UtilityMatrix& matrix,
                               const HypothesisSet& hset, size_t m);

}  // namespace mpmbr
