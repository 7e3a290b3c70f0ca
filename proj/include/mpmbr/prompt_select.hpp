#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpmbr/prompt.hpp"

namespace mpmbr {

// Standard cosine similarity. Throws DomainError on dimension mismatch or a
// zero vector.
double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

// Offline substitute for sentence embeddings: hashed bag of byte trigrams
// (text padded with sentinels so short strings still embed), L2-normalized.
// Deterministic; dim must be >= 8; empty text throws DomainError.
std::vector<double> fallback_embed(std::string_view text, size_t dim);

// Minimal highest-weight prefix whose cumulative weight reaches p, with the
// kept weights renormalized to sum to 1. Prompts are ranked by descending
// weight, ties broken by bank order; the cumulative threshold is tested
// within 1e-12 so that p = 1.0 closes on full banks despite rounding.
PromptBank top_p_prompt_set(const PromptBank& bank, double p);

// n i.i.d. draws (with replacement) from the bank's weight distribution.
std::vector<Prompt> sample_prompts(const PromptBank& bank, size_t n,
                                   uint64_t rng_seed);

enum class SelectStrategy {
  random,
  closest_similarity,
  farthest_similarity,
  knn_cluster_random,
  knn_cluster_performance,
  highest_performance,
};

const char* to_string(SelectStrategy s);
SelectStrategy select_strategy_from_string(const std::string& s);

// Fixed-size subset selection. The returned bank is in canonical bank order;
// remaining weights, if any, are renormalized. All ties break by bank order.
PromptBank select_prompts(const PromptBank& bank, size_t k,
                          SelectStrategy strategy, uint64_t rng_seed);

// Mean cosine similarity of each prompt to every other prompt (self
// excluded). Exposed for the selection heuristics and their tests.
std::vector<double> mean_pairwise_similarity(const PromptBank& bank);

struct KMeansResult {
  std::vector<size_t> assignment;               // point -> cluster
  std::vector<std::vector<double>> centroids;   // k centroids
  int iterations = 0;
};

// Lloyd's algorithm with seeded k-means++ initialization. Guarantees k
// non-empty clusters for n >= k by reseeding empty clusters with the point
// farthest from its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, size_t k,
                    uint64_t rng_seed, int max_iterations = 100,
                    double tolerance = 1e-6);

}  // namespace mpmbr
