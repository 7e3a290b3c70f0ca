#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpmbr/task.hpp"

namespace mpmbr {

enum class MetricMode { pairwise_utility, reference_based_eval, reference_free };
enum class MetricDirection { higher_better, lower_better };
enum class MetricSource { native, remote };

const char* to_string(MetricMode m);
const char* to_string(MetricDirection d);
const char* to_string(MetricSource s);
MetricMode metric_mode_from_string(const std::string& s);
MetricDirection metric_direction_from_string(const std::string& s);
MetricSource metric_source_from_string(const std::string& s);

struct MetricSpec {
  std::string name;
  MetricMode mode = MetricMode::pairwise_utility;
  MetricDirection direction = MetricDirection::higher_better;
  MetricSource source = MetricSource::native;
  std::string endpoint;  // remote metrics only

  // Native names are limited to bleu / exact_match / test_agreement /
  // distinct2; remote specs must carry an endpoint URL.
  void validate() const;
};

struct ScoreRecord {
  int candidate_index = 0;
  double value = 0.0;
  std::string metric;
};

enum class BleuSmoothing { none, add_one };

// Sentence-level BLEU in [0, 1]: modified n-gram precision with per-order
// clipping against the reference bank, brevity penalty against the closest
// reference length (ties -> shorter), geometric mean over orders 1..max_n.
// Add-one smoothing applies to orders > 1. Tokens are Unicode-whitespace
// splits of the NFC-normalized strings. An empty candidate scores 0; an
// empty reference string is a data error.
double bleu(std::string_view candidate,
            const std::vector<std::string>& references, int max_n = 4,
            BleuSmoothing smoothing = BleuSmoothing::add_one);

// Configured answer extraction for self-consistency style utilities. With a
// pattern, the first capture group of the last match is the answer; without
// one, the whole text is. Extracted answers are normalized (trim, casefold,
// strip trailing punctuation) before comparison.
class AnswerExtractor {
 public:
  AnswerExtractor();  // whole-text extractor
  explicit AnswerExtractor(const std::string& pattern);
  AnswerExtractor(const AnswerExtractor& other);
  AnswerExtractor& operator=(const AnswerExtractor& other);
  ~AnswerExtractor();

  // nullopt when the pattern exists but does not match.
  std::optional<std::string> extract(const std::string& text) const;
  const std::optional<std::string>& pattern() const { return pattern_; }

 private:
  std::optional<std::string> pattern_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Indicator utility: 1 iff both answers extract and compare equal. An
// extraction failure on either side yields 0 (a warning is logged once).
int exact_match_utility(const Candidate& a, const Candidate& b,
                        const AnswerExtractor& extractor);

// Soft execution agreement: fraction of shared test ids whose outputs match
// after trailing-whitespace strip. Missing exec map -> ConfigError; zero
// shared ids -> DomainError.
double test_agreement_utility(const Candidate& a, const Candidate& b);

// Unique token bigrams over all candidates divided by total bigram
// occurrences. DomainError when the set has no bigrams at all.
double distinct_bigram_ratio(const HypothesisSet& hset);
double distinct_bigram_ratio(const std::vector<std::string>& texts);

}  // namespace mpmbr
