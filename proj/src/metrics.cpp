#include "mpmbr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <regex>
#include <unordered_map>
#include <unordered_set>

#include "mpmbr/errors.hpp"
#include "mpmbr/text.hpp"

namespace mpmbr {

namespace {

// n-grams as joined token strings; '\x1f' cannot appear inside a token.
std::unordered_map<std::string, int> ngram_counts(
    const std::vector<std::string>& tokens, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key.append(tokens[i + j]);
    }
    ++counts[key];
  }
  return counts;
}

void warn_extraction_failure(const std::string& text) {
  static bool warned = false;
  if (!warned) {
    std::cerr << "[mpmbr] warning: answer extraction failed on candidate "
                 "text (scoring 0); first failing text: "
              << text.substr(0, 60) << "\n";
    warned = true;
  }
}

}  // namespace

const char* to_string(MetricMode m) {
  switch (m) {
    case MetricMode::pairwise_utility:
      return "pairwise_utility";
    case MetricMode::reference_based_eval:
      return "reference_based_eval";
    case MetricMode::reference_free:
      return "reference_free";
  }
  return "pairwise_utility";
}

const char* to_string(MetricDirection d) {
  return d == MetricDirection::lower_better ? "lower_better" : "higher_better";
}

const char* to_string(MetricSource s) {
  return s == MetricSource::remote ? "remote" : "native";
}

MetricMode metric_mode_from_string(const std::string& s) {
  if (s == "pairwise_utility") return MetricMode::pairwise_utility;
  if (s == "reference_based_eval") return MetricMode::reference_based_eval;
  if (s == "reference_free") return MetricMode::reference_free;
  throw ConfigError("unknown metric mode: " + s);
}

MetricDirection metric_direction_from_string(const std::string& s) {
  if (s == "higher_better") return MetricDirection::higher_better;
  if (s == "lower_better") return MetricDirection::lower_better;
  throw ConfigError("unknown metric direction: " + s);
}

MetricSource metric_source_from_string(const std::string& s) {
  if (s == "native") return MetricSource::native;
  if (s == "remote") return MetricSource::remote;
  throw ConfigError("unknown metric source: " + s);
}

void MetricSpec::validate() const {
  if (name.empty()) throw ConfigError("metric spec with empty name");
  if (source == MetricSource::native) {
    if (name != "bleu" && name != "exact_match" && name != "test_agreement" &&
        name != "distinct2") {
      throw ConfigError("unknown native metric: " + name);
    }
  } else if (endpoint.empty()) {
    throw ConfigError("remote metric " + name + " requires an endpoint");
  }
}

double bleu(std::string_view candidate,
            const std::vector<std::string>& references, int max_n,
            BleuSmoothing smoothing) {
  if (references.empty()) throw DataError("bleu: no references");
  if (max_n < 1) throw DomainError("bleu: max_n must be >= 1");
  for (const std::string& ref : references) {
    if (tokenize(ref).empty()) throw DataError("bleu: empty reference string");
  }
  std::vector<std::string> cand_tokens = tokenize(candidate);
  const int cand_len = static_cast<int>(cand_tokens.size());
  if (cand_len == 0) return 0.0;

  std::vector<std::vector<std::string>> ref_tokens;
  ref_tokens.reserve(references.size());
  int closest_ref_len = 0;
  for (const std::string& ref : references) {
    ref_tokens.push_back(tokenize(ref));
    int len = static_cast<int>(ref_tokens.back().size());
    if (ref_tokens.size() == 1) {
      closest_ref_len = len;
    } else {
      int best_diff = std::abs(closest_ref_len - cand_len);
      int diff = std::abs(len - cand_len);
      if (diff < best_diff || (diff == best_diff && len < closest_ref_len)) {
        closest_ref_len = len;
      }
    }
  }

  double log_precision_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    auto cand_counts = ngram_counts(cand_tokens, n);
    std::unordered_map<std::string, int> max_ref_counts;
    for (const auto& tokens : ref_tokens) {
      for (const auto& [gram, count] : ngram_counts(tokens, n)) {
        auto it = max_ref_counts.find(gram);
        if (it == max_ref_counts.end()) {
          max_ref_counts.emplace(gram, count);
        } else {
          it->second = std::max(it->second, count);
        }
      }
    }
    long long clipped = 0;
    long long total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = max_ref_counts.find(gram);
      if (it != max_ref_counts.end()) clipped += std::min(count, it->second);
    }
    double p;
    if (n > 1 && smoothing == BleuSmoothing::add_one) {
      p = static_cast<double>(clipped + 1) / static_cast<double>(total + 1);
    } else {
      if (total == 0 || clipped == 0) return 0.0;
      p = static_cast<double>(clipped) / static_cast<double>(total);
    }
    log_precision_sum += std::log(p);
  }

  double brevity = 1.0;
  if (cand_len < closest_ref_len) {
    brevity = std::exp(1.0 - static_cast<double>(closest_ref_len) /
                                 static_cast<double>(cand_len));
  }
  return brevity * std::exp(log_precision_sum / static_cast<double>(max_n));
}

struct AnswerExtractor::Impl {
  std::regex re;
};

AnswerExtractor::AnswerExtractor() = default;

AnswerExtractor::AnswerExtractor(const std::string& pattern)
    : pattern_(pattern), impl_(std::make_unique<Impl>()) {
  try {
    impl_->re = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw ConfigError("answer extractor: invalid pattern: " +
                      std::string(e.what()));
  }
  if (impl_->re.mark_count() < 1) {
    throw ConfigError("answer extractor: pattern needs a capture group");
  }
}

AnswerExtractor::AnswerExtractor(const AnswerExtractor& other)
    : pattern_(other.pattern_) {
  if (other.impl_) impl_ = std::make_unique<Impl>(*other.impl_);
}

AnswerExtractor& AnswerExtractor::operator=(const AnswerExtractor& other) {
  if (this != &other) {
    pattern_ = other.pattern_;
    impl_ = other.impl_ ? std::make_unique<Impl>(*other.impl_) : nullptr;
  }
  return *this;
}

AnswerExtractor::~AnswerExtractor() = default;

std::optional<std::string> AnswerExtractor::extract(
    const std::string& text) const {
  if (!impl_) return normalize_answer(text);
  auto begin = std::sregex_iterator(text.begin(), text.end(), impl_->re);
  auto end = std::sregex_iterator();
  std::optional<std::string> answer;
  for (auto it = begin; it != end; ++it) {
    answer = (*it)[1].str();
  }
  if (!answer) return std::nullopt;
  return normalize_answer(*answer);
}

int exact_match_utility(const Candidate& a, const Candidate& b,
                        const AnswerExtractor& extractor) {
  auto ans_a = extractor.extract(a.text);
  auto ans_b = extractor.extract(b.text);
  if (!ans_a || !ans_b) {
    warn_extraction_failure(!ans_a ? a.text : b.text);
    return 0;
  }
  return *ans_a == *ans_b ? 1 : 0;
}

double test_agreement_utility(const Candidate& a, const Candidate& b) {
  if (!a.exec || !b.exec) {
    throw ConfigError("test_agreement requires exec maps on both candidates");
  }
  size_t shared = 0;
  size_t agree = 0;
  for (const auto& [test_id, out_a] : *a.exec) {
    auto it = b.exec->find(test_id);
    if (it == b.exec->end()) continue;
    ++shared;
    auto strip = [](const std::string& s) {
      size_t e = s.size();
      while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\t' ||
                       s[e - 1] == '\n' || s[e - 1] == '\r')) {
        --e;
      }
      return s.substr(0, e);
    };
    if (strip(out_a) == strip(it->second)) ++agree;
  }
  if (shared == 0) {
    throw DomainError("test_agreement: candidates share no test ids");
  }
  return static_cast<double>(agree) / static_cast<double>(shared);
}

double distinct_bigram_ratio(const std::vector<std::string>& texts) {
  std::unordered_set<std::string> unique;
  long long total = 0;
  for (const std::string& text : texts) {
    std::vector<std::string> tokens = tokenize(text);
    for (size_t i = 0; i + 2 <= tokens.size(); ++i) {
      ++total;
      unique.insert(tokens[i] + '\x1f' + tokens[i + 1]);
    }
  }
  if (total == 0) {
    throw DomainError("distinct_bigram_ratio: no bigrams in candidate set");
  }
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double distinct_bigram_ratio(const HypothesisSet& hset) {
  std::vector<std::string> texts;
  texts.reserve(hset.candidates.size());
  for (const Candidate& c : hset.candidates) texts.push_back(c.text);
  return distinct_bigram_ratio(texts);
}

}  // namespace mpmbr
