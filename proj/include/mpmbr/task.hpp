#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpmbr/jsonl.hpp"

namespace mpmbr {

struct TestCase {
  std::string id;
  std::string payload;
};

// One evaluation instance: source text, gold references, optional test cases.
struct TaskInput {
  std::string id;
  std::string source;
  std::vector<std::string> references;
  std::optional<std::vector<TestCase>> tests;
};

struct SamplingParams {
  double temperature = 0.9;
  double top_p = 0.95;
  int n_per_prompt = 10;
  int max_tokens = 256;
  std::optional<uint64_t> seed;

  void validate() const;  // throws DomainError
};

// One sampled output with provenance. `exec` maps test id -> observed output
// (produced by an external runner); `rejected` holds the filter reason.
struct Candidate {
  std::string input_id;
  std::string prompt_id;
  std::string text;
  std::optional<double> logprob;
  std::optional<std::map<std::string, std::string>> exec;
  std::optional<std::string> rejected;

  bool active() const { return !rejected.has_value(); }
};

// All candidates for one input, in generation order (the canonical
// tie-break order). Duplicates are kept deliberately: repeated strings carry
// consistency mass for MBR.
struct HypothesisSet {
  std::string input_id;
  std::vector<Candidate> candidates;

  size_t size() const { return candidates.size(); }
  std::vector<size_t> active_indices() const;
  HypothesisSet active_subset() const;  // drops rejected candidates
};

TaskInput input_from_json(const json& obj);
json input_to_json(const TaskInput& input);
std::vector<TaskInput> load_inputs(const std::string& path);
void save_inputs(const std::vector<TaskInput>& inputs, const std::string& path);

Candidate candidate_from_json(const json& obj);
json candidate_to_json(const Candidate& candidate);
std::vector<Candidate> load_candidates(const std::string& path);
void save_candidates(const std::vector<Candidate>& candidates,
                     const std::string& path);

// Groups a candidate stream by input id, first-appearance order.
std::vector<HypothesisSet> group_by_input(const std::vector<Candidate>& all);

}  // namespace mpmbr
