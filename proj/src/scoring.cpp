#include "mpmbr/scoring.hpp"

#include "mpmbr/errors.hpp"

namespace mpmbr {

namespace {

double bleu_vs_answer_eval(const MetricSpec& spec, const TaskInput& input,
                           const std::string& text,
                           const ScoringContext& ctx) {
  if (spec.name == "bleu") {
    if (input.references.empty()) {
      throw DataError("bleu eval: input '" + input.id + "' has no references");
    }
    return bleu(text, input.references);
  }
  if (spec.name == "exact_match") {
    if (input.references.empty()) {
      throw DataError("exact_match eval: input '" + input.id +
                      "' has no references");
    }
    auto answer = ctx.extractor.extract(text);
    if (!answer) return 0.0;
    for (const std::string& ref : input.references) {
      auto ref_answer = ctx.extractor.extract(ref);
      if (ref_answer && *ref_answer == *answer) return 1.0;
    }
    return 0.0;
  }
  if (spec.name == "distinct2") {
    return distinct_bigram_ratio(std::vector<std::string>{text});
  }
  throw ConfigError("metric '" + spec.name +
                    "' cannot score against references");
}

}  // namespace

PairwiseFn make_pairwise_fn(const MetricSpec& spec, const ScoringContext& ctx) {
  spec.validate();
  if (spec.source == MetricSource::remote) {
    throw ConfigError("remote metric '" + spec.name +
                      "' must go through the batched utility matrix");
  }
  if (spec.name == "bleu") {
    return [](const Candidate& a, const Candidate& b) {
      return bleu(a.text, {b.text});
    };
  }
  if (spec.name == "exact_match") {
    AnswerExtractor extractor = ctx.extractor;
    return [extractor](const Candidate& a, const Candidate& b) {
      return static_cast<double>(exact_match_utility(a, b, extractor));
    };
  }
  if (spec.name == "test_agreement") {
    return [](const Candidate& a, const Candidate& b) {
      return test_agreement_utility(a, b);
    };
  }
  throw ConfigError("metric '" + spec.name +
                    "' cannot be used as a pairwise utility");
}

UtilityMatrix utility_matrix(const HypothesisSet& hset, const MetricSpec& spec,
                             const std::string& source,
                             const ScoringContext& ctx, bool self_included) {
  spec.validate();
  const size_t n = hset.candidates.size();
  if (n == 0) {
    throw EmptyHypothesisError("utility_matrix over an empty hypothesis set");
  }
  if (spec.source == MetricSource::native) {
    if (spec.name == "exact_match") {
      // Extract once per candidate instead of per pair.
      std::vector<std::optional<std::string>> answers(n);
      for (size_t i = 0; i < n; ++i) {
        answers[i] = ctx.extractor.extract(hset.candidates[i].text);
      }
      UtilityMatrix matrix;
      matrix.n = n;
      matrix.metric = spec.name;
      matrix.self_included = self_included;
      matrix.values.assign(n * n, 0.0);
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
          if (!self_included && i == j) continue;
          matrix.at(i, j) = answers[i] && answers[j] && *answers[i] == *answers[j]
                                ? 1.0
                                : 0.0;
        }
      }
      return matrix;
    }
    return utility_matrix(hset, make_pairwise_fn(spec, ctx), spec.name,
                          self_included);
  }

  // Remote pairwise: one batched request series over all (i, j) pairs.
  std::vector<std::pair<size_t, size_t>> pairs;
  pairs.reserve(n * n);
  std::vector<RemoteScoreItem> items;
  items.reserve(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (!self_included && i == j) continue;
      pairs.emplace_back(i, j);
      items.push_back(RemoteScoreItem{source, hset.candidates[i].text,
                                      {hset.candidates[j].text}});
    }
  }
  std::vector<double> scores =
      remote_score(spec.endpoint, spec.name, items, ctx.remote);
  UtilityMatrix matrix;
  matrix.n = n;
  matrix.metric = spec.name;
  matrix.self_included = self_included;
  matrix.values.assign(n * n, 0.0);
  for (size_t k = 0; k < pairs.size(); ++k) {
    matrix.at(pairs[k].first, pairs[k].second) = scores[k];
  }
  return matrix;
}

std::vector<double> reference_free_scores(const MetricSpec& spec,
                                          const HypothesisSet& hset,
                                          const std::string& source,
                                          const ScoringContext& ctx) {
  spec.validate();
  if (spec.mode != MetricMode::reference_free) {
    throw ConfigError("metric '" + spec.name + "' is not reference-free");
  }
  const size_t n = hset.candidates.size();
  if (spec.source == MetricSource::remote) {
    std::vector<RemoteScoreItem> items;
    items.reserve(n);
    for (const Candidate& c : hset.candidates) {
      items.push_back(RemoteScoreItem{source, c.text, {}});
    }
    return remote_score(spec.endpoint, spec.name, items, ctx.remote);
  }
  if (spec.name == "distinct2") {
    std::vector<double> scores;
    scores.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      try {
        scores.push_back(
            distinct_bigram_ratio(std::vector<std::string>{hset.candidates[i].text}));
      } catch (const std::exception& e) {
        throw DataError("reference-free metric failed at candidate " +
                        std::to_string(i) + ": " + e.what());
      }
    }
    return scores;
  }
  throw ConfigError("native metric '" + spec.name +
                    "' cannot be used reference-free");
}

double eval_candidate(const MetricSpec& spec, const TaskInput& input,
                      const std::string& text, const ScoringContext& ctx) {
  spec.validate();
  if (spec.source == MetricSource::remote) {
    std::vector<double> scores = remote_score(
        spec.endpoint, spec.name,
        {RemoteScoreItem{input.source, text, input.references}}, ctx.remote);
    return scores.at(0);
  }
  return bleu_vs_answer_eval(spec, input, text, ctx);
}

std::vector<double> eval_candidates(const MetricSpec& spec,
                                    const std::vector<EvalItem>& items,
                                    const ScoringContext& ctx) {
  spec.validate();
  if (spec.source == MetricSource::remote) {
    std::vector<RemoteScoreItem> remote_items;
    remote_items.reserve(items.size());
    for (const EvalItem& item : items) {
      remote_items.push_back(RemoteScoreItem{item.input->source, item.text,
                                             item.input->references});
    }
    return remote_score(spec.endpoint, spec.name, remote_items, ctx.remote);
  }
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const EvalItem& item : items) {
    scores.push_back(bleu_vs_answer_eval(spec, *item.input, item.text, ctx));
  }
  return scores;
}

}  // namespace mpmbr
