#include "mpmbr/prompt_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mpmbr/errors.hpp"
#include "mpmbr/rng.hpp"

namespace mpmbr {

namespace {

constexpr double kCumulativeEps = 1e-12;

void require_weights(const PromptBank& bank, const char* op) {
  if (!bank.has_weights()) {
    throw ConfigError(std::string(op) + " requires prompt weights");
  }
}

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// Subset -> bank restricted to those indices, in bank order, with weights
// renormalized (or dropped when the kept mass is zero).
PromptBank subset_in_bank_order(const PromptBank& bank,
                                std::vector<size_t> indices) {
  std::sort(indices.begin(), indices.end());
  PromptBank out;
  out.embedding_dim = bank.embedding_dim;
  double kept_weight = 0.0;
  bool weighted = bank.has_weights();
  for (size_t idx : indices) {
    out.prompts.push_back(bank.prompts[idx]);
    if (weighted) kept_weight += *bank.prompts[idx].weight;
  }
  if (weighted) {
    for (Prompt& p : out.prompts) {
      if (kept_weight > 0.0) {
        p.weight = *p.weight / kept_weight;
      } else {
        p.weight.reset();
      }
    }
  }
  return out;
}

std::vector<size_t> top_k_by_score(const std::vector<double>& scores, size_t k,
                                   bool highest) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores, highest](size_t a, size_t b) {
                     return highest ? scores[a] > scores[b]
                                    : scores[a] < scores[b];
                   });
  order.resize(k);
  return order;
}

}  // namespace

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DomainError("cosine_similarity: dimension mismatch");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw DomainError("cosine_similarity: zero vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> fallback_embed(std::string_view text, size_t dim) {
  if (text.empty()) throw DomainError("fallback_embed: empty text");
  if (dim < 8) throw DomainError("fallback_embed: dim must be >= 8");
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back('\x02');
  padded.append(text);
  padded.push_back('\x03');

  std::vector<double> vec(dim, 0.0);
  for (size_t i = 0; i + 3 <= padded.size(); ++i) {
    uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
    size_t idx = static_cast<size_t>(h % dim);
    // Trigram-specific positive magnitude, so distinct trigram bags produce
    // distinct vectors even under bucket collisions.
    vec[idx] += 1.0 + static_cast<double>((h >> 32) & 0xffffULL) / 65536.0;
  }
  double norm = std::sqrt(
      std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0));
  for (double& v : vec) v /= norm;
  return vec;
}

PromptBank top_p_prompt_set(const PromptBank& bank, double p) {
  require_weights(bank, "top_p_prompt_set");
  if (!(p > 0.0) || p > 1.0) {
    throw DomainError("top_p_prompt_set: p must be in (0, 1]");
  }
  std::vector<size_t> order(bank.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&bank](size_t a, size_t b) {
    return *bank.prompts[a].weight > *bank.prompts[b].weight;
  });

  PromptBank out;
  out.embedding_dim = bank.embedding_dim;
  double cumulative = 0.0;
  for (size_t idx : order) {
    out.prompts.push_back(bank.prompts[idx]);
    cumulative += *bank.prompts[idx].weight;
    if (cumulative >= p - kCumulativeEps) break;
  }
  for (Prompt& prompt : out.prompts) {
    prompt.weight = *prompt.weight / cumulative;
  }
  return out;
}

std::vector<Prompt> sample_prompts(const PromptBank& bank, size_t n,
                                   uint64_t rng_seed) {
  require_weights(bank, "sample_prompts");
  double sum = 0.0;
  for (const Prompt& p : bank.prompts) sum += *p.weight;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("sample_prompts: weights are not normalized (sum=" +
                      std::to_string(sum) + ")");
  }
  std::vector<double> cumulative(bank.size());
  double acc = 0.0;
  for (size_t i = 0; i < bank.size(); ++i) {
    acc += *bank.prompts[i].weight;
    cumulative[i] = acc;
  }
  cumulative.back() = 1.0;

  Rng rng(derive_seed(rng_seed, "sample_prompts"));
  std::vector<Prompt> draws;
  draws.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double u = rng.next_double();
    size_t idx = static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    if (idx >= bank.size()) idx = bank.size() - 1;
    draws.push_back(bank.prompts[idx]);
  }
  return draws;
}

const char* to_string(SelectStrategy s) {
  switch (s) {
    case SelectStrategy::random:
      return "random";
    case SelectStrategy::closest_similarity:
      return "closest_similarity";
    case SelectStrategy::farthest_similarity:
      return "farthest_similarity";
    case SelectStrategy::knn_cluster_random:
      return "knn_cluster_random";
    case SelectStrategy::knn_cluster_performance:
      return "knn_cluster_performance";
    case SelectStrategy::highest_performance:
      return "highest_performance";
  }
  return "random";
}

SelectStrategy select_strategy_from_string(const std::string& s) {
  if (s == "random") return SelectStrategy::random;
  if (s == "closest_similarity") return SelectStrategy::closest_similarity;
  if (s == "farthest_similarity") return SelectStrategy::farthest_similarity;
  if (s == "knn_cluster_random") return SelectStrategy::knn_cluster_random;
  if (s == "knn_cluster_performance")
    return SelectStrategy::knn_cluster_performance;
  if (s == "highest_performance") return SelectStrategy::highest_performance;
  throw ConfigError("unknown selection strategy: " + s);
}

std::vector<double> mean_pairwise_similarity(const PromptBank& bank) {
  const size_t n = bank.size();
  std::vector<double> means(n, 0.0);
  if (n < 2) return means;
  for (size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      total += cosine_similarity(*bank.prompts[i].embedding,
                                 *bank.prompts[j].embedding);
    }
    means[i] = total / static_cast<double>(n - 1);
  }
  return means;
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, size_t k,
                    uint64_t rng_seed, int max_iterations, double tolerance) {
  const size_t n = points.size();
  if (k == 0 || k > n) throw DomainError("kmeans: need 0 < k <= n");
  const size_t dim = points[0].size();
  Rng rng(derive_seed(rng_seed, "kmeans"));

  // k-means++ seeding over data points.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  size_t first = rng.next_index(n);
  centroids.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> dist2(n, 0.0);
  while (centroids.size() < k) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) {
        best = std::min(best, squared_distance(points[i], c));
      }
      dist2[i] = chosen[i] ? 0.0 : best;
      total += dist2[i];
    }
    size_t pick = n;
    if (total > 0.0) {
      double u = rng.next_double() * total;
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        acc += dist2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    if (pick == n) {
      // All remaining points coincide with chosen centroids; take the first
      // unchosen one.
      for (size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
  }

  std::vector<size_t> assignment(n, 0);
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      size_t best_c = 0;
      for (size_t c = 0; c < k; ++c) {
        double d = squared_distance(points[i], centroids[c]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assignment[i] = best_c;
    }

    // Re-seed any empty cluster with the point farthest from its centroid
    // among clusters holding more than one point.
    std::vector<size_t> counts(k, 0);
    for (size_t a : assignment) ++counts[a];
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double farthest = -1.0;
      size_t victim = n;
      for (size_t i = 0; i < n; ++i) {
        if (counts[assignment[i]] < 2) continue;
        double d = squared_distance(points[i], centroids[assignment[i]]);
        if (d > farthest) {
          farthest = d;
          victim = i;
        }
      }
      if (victim == n) break;
      --counts[assignment[victim]];
      assignment[victim] = c;
      ++counts[c];
    }

    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (size_t i = 0; i < n; ++i) {
      for (size_t d = 0; d < dim; ++d) next[assignment[i]][d] += points[i][d];
    }
    double movement = 0.0;
    for (size_t c = 0; c < k; ++c) {
      for (size_t d = 0; d < dim; ++d) {
        next[c][d] /= static_cast<double>(counts[c]);
      }
      movement = std::max(movement,
                          std::sqrt(squared_distance(next[c], centroids[c])));
    }
    centroids = std::move(next);
    if (movement < tolerance) {
      ++iter;
      break;
    }
  }

  KMeansResult result;
  result.assignment = std::move(assignment);
  result.centroids = std::move(centroids);
  result.iterations = iter;
  return result;
}

PromptBank select_prompts(const PromptBank& bank, size_t k,
                          SelectStrategy strategy, uint64_t rng_seed) {
  const size_t n = bank.size();
  if (k == 0 || k > n) {
    throw DomainError("select_prompts: need 0 < k <= bank size");
  }
  const bool needs_embeddings = strategy == SelectStrategy::closest_similarity ||
                                strategy == SelectStrategy::farthest_similarity ||
                                strategy == SelectStrategy::knn_cluster_random ||
                                strategy == SelectStrategy::knn_cluster_performance;
  const bool needs_perf = strategy == SelectStrategy::highest_performance ||
                          strategy == SelectStrategy::knn_cluster_performance;
  if (needs_embeddings && !bank.has_embeddings()) {
    throw ConfigError(std::string("select_prompts: strategy ") +
                      to_string(strategy) + " requires embeddings");
  }
  if (needs_perf && !bank.has_perf()) {
    throw ConfigError(std::string("select_prompts: strategy ") +
                      to_string(strategy) + " requires perf scores");
  }

  std::vector<size_t> picked;
  switch (strategy) {
    case SelectStrategy::random: {
      std::vector<size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      Rng rng(derive_seed(rng_seed, "select_prompts", "random"));
      rng.shuffle(order);
      picked.assign(order.begin(), order.begin() + k);
      break;
    }
    case SelectStrategy::closest_similarity:
    case SelectStrategy::farthest_similarity: {
      std::vector<double> means = mean_pairwise_similarity(bank);
      picked = top_k_by_score(
          means, k, strategy == SelectStrategy::closest_similarity);
      break;
    }
    case SelectStrategy::highest_performance: {
      std::vector<double> perf(n);
      for (size_t i = 0; i < n; ++i) perf[i] = *bank.prompts[i].perf;
      picked = top_k_by_score(perf, k, true);
      break;
    }
    case SelectStrategy::knn_cluster_random:
    case SelectStrategy::knn_cluster_performance: {
      std::vector<std::vector<double>> points;
      points.reserve(n);
      for (const Prompt& p : bank.prompts) points.push_back(*p.embedding);
      KMeansResult clusters =
          kmeans(points, k, derive_seed(rng_seed, "select_prompts", "kmeans"));
      Rng rng(derive_seed(rng_seed, "select_prompts", "cluster_pick"));
      for (size_t c = 0; c < k; ++c) {
        std::vector<size_t> members;
        for (size_t i = 0; i < n; ++i) {
          if (clusters.assignment[i] == c) members.push_back(i);
        }
        if (strategy == SelectStrategy::knn_cluster_random) {
          picked.push_back(members[rng.next_index(members.size())]);
        } else {
          size_t best = members[0];
          for (size_t m : members) {
            if (*bank.prompts[m].perf > *bank.prompts[best].perf) best = m;
          }
          picked.push_back(best);
        }
      }
      break;
    }
  }
  return subset_in_bank_order(bank, std::move(picked));
}

}  // namespace mpmbr
