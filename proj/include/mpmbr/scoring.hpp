#pragma once

#include <string>
#include <vector>

#include "mpmbr/mbr.hpp"
#include "mpmbr/metrics.hpp"
#include "mpmbr/remote.hpp"
#include "mpmbr/task.hpp"

namespace mpmbr {

// Everything metric evaluation may need besides the spec itself.
struct ScoringContext {
  AnswerExtractor extractor;
  RemoteOptions remote;
};

// Pairwise utility for native metrics. Remote pairwise utilities go through
// the batched utility_matrix overload below instead.
PairwiseFn make_pairwise_fn(const MetricSpec& spec, const ScoringContext& ctx);

// MetricSpec-driven utility matrix. Native metrics evaluate cell by cell;
// remote ones batch all pairs through the scoring endpoint.
UtilityMatrix utility_matrix(const HypothesisSet& hset, const MetricSpec& spec,
                             const std::string& source,
                             const ScoringContext& ctx, bool self_included);

// Per-candidate reference-free scores (n metric calls), stored unmodified.
std::vector<double> reference_free_scores(const MetricSpec& spec,
                                          const HypothesisSet& hset,
                                          const std::string& source,
                                          const ScoringContext& ctx);

// Reference-based evaluation of one candidate text for one input.
double eval_candidate(const MetricSpec& spec, const TaskInput& input,
                      const std::string& text, const ScoringContext& ctx);

struct EvalItem {
  const TaskInput* input = nullptr;
  std::string text;
};

// Batched variant (one remote round-trip series for remote metrics).
std::vector<double> eval_candidates(const MetricSpec& spec,
                                    const std::vector<EvalItem>& items,
                                    const ScoringContext& ctx);

}  // namespace mpmbr
