#include "mpmbr/task.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mpmbr/errors.hpp"

namespace mpmbr {

void SamplingParams::validate() const {
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw DomainError("sampling: temperature must be finite and >= 0");
  }
  if (!(top_p > 0.0) || top_p > 1.0) {
    throw DomainError("sampling: top_p must be in (0, 1]");
  }
  if (n_per_prompt <= 0) throw DomainError("sampling: n_per_prompt must be positive");
  if (max_tokens <= 0) throw DomainError("sampling: max_tokens must be positive");
}

std::vector<size_t> HypothesisSet::active_indices() const {
  std::vector<size_t> idx;
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].active()) idx.push_back(i);
  }
  return idx;
}

HypothesisSet HypothesisSet::active_subset() const {
  HypothesisSet out;
  out.input_id = input_id;
  for (const Candidate& c : candidates) {
    if (c.active()) out.candidates.push_back(c);
  }
  return out;
}

TaskInput input_from_json(const json& obj) {
  TaskInput input;
  input.id = obj.at("id").get<std::string>();
  if (input.id.empty()) throw DataError("input record with empty id");
  input.source = obj.value("source", std::string());
  if (obj.contains("references") && !obj["references"].is_null()) {
    input.references = obj["references"].get<std::vector<std::string>>();
  }
  if (obj.contains("tests") && !obj["tests"].is_null()) {
    std::vector<TestCase> tests;
    for (const json& t : obj["tests"]) {
      tests.push_back({t.at("id").get<std::string>(),
                       t.value("payload", std::string())});
    }
    input.tests = std::move(tests);
  }
  return input;
}

json input_to_json(const TaskInput& input) {
  json obj = json::object();
  obj["id"] = input.id;
  obj["source"] = input.source;
  obj["references"] = input.references;
  if (input.tests) {
    json tests = json::array();
    for (const TestCase& t : *input.tests) {
      tests.push_back({{"id", t.id}, {"payload", t.payload}});
    }
    obj["tests"] = std::move(tests);
  }
  return obj;
}

std::vector<TaskInput> load_inputs(const std::string& path) {
  std::vector<TaskInput> inputs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(path, [&](const json& obj, size_t line) {
    TaskInput input = input_from_json(obj);
    if (!seen.insert(input.id).second) {
      throw DataError(path + ":" + std::to_string(line) +
                      ": duplicate input id " + input.id);
    }
    inputs.push_back(std::move(input));
  });
  return inputs;
}

void save_inputs(const std::vector<TaskInput>& inputs, const std::string& path) {
  JsonlWriter writer(path);
  for (const TaskInput& input : inputs) writer.write(input_to_json(input));
  writer.flush();
}

Candidate candidate_from_json(const json& obj) {
  Candidate c;
  c.input_id = obj.at("input_id").get<std::string>();
  c.prompt_id = obj.at("prompt_id").get<std::string>();
  c.text = obj.value("text", std::string());
  if (obj.contains("logprob") && !obj["logprob"].is_null()) {
    c.logprob = obj["logprob"].get<double>();
    if (*c.logprob > 0.0) {
      throw DataError("candidate logprob must be <= 0");
    }
  }
  if (obj.contains("exec") && !obj["exec"].is_null()) {
    c.exec = obj["exec"].get<std::map<std::string, std::string>>();
  }
  if (obj.contains("rejected") && !obj["rejected"].is_null()) {
    c.rejected = obj["rejected"].get<std::string>();
  }
  return c;
}

json candidate_to_json(const Candidate& candidate) {
  json obj = json::object();
  obj["input_id"] = candidate.input_id;
  obj["prompt_id"] = candidate.prompt_id;
  obj["text"] = candidate.text;
  if (candidate.logprob) obj["logprob"] = *candidate.logprob;
  if (candidate.exec) obj["exec"] = *candidate.exec;
  if (candidate.rejected) obj["rejected"] = *candidate.rejected;
  return obj;
}

std::vector<Candidate> load_candidates(const std::string& path) {
  std::vector<Candidate> out;
  for_each_jsonl(path, [&out, &path](const json& obj, size_t line) {
    try {
      out.push_back(candidate_from_json(obj));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

void save_candidates(const std::vector<Candidate>& candidates,
                     const std::string& path) {
  JsonlWriter writer(path);
  for (const Candidate& c : candidates) writer.write(candidate_to_json(c));
  writer.flush();
}

std::vector<HypothesisSet> group_by_input(const std::vector<Candidate>& all) {
  std::vector<HypothesisSet> sets;
  std::unordered_map<std::string, size_t> index;
  for (const Candidate& c : all) {
    auto [it, inserted] = index.emplace(c.input_id, sets.size());
    if (inserted) {
      sets.push_back(HypothesisSet{c.input_id, {}});
    }
    sets[it->second].candidates.push_back(c);
  }
  return sets;
}

}  // namespace mpmbr
