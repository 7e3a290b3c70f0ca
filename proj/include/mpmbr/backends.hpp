#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpmbr/jsonl.hpp"
#include "mpmbr/prompt.hpp"
#include "mpmbr/task.hpp"

namespace mpmbr {

enum class BackendKind { http, replay, sim };
enum class TaskKind { text, code };

const char* to_string(BackendKind k);
const char* to_string(TaskKind k);
BackendKind backend_kind_from_string(const std::string& s);
TaskKind task_kind_from_string(const std::string& s);

struct HttpBackendConfig {
  std::string base_url;  // e.g. http://host:port/v1
  std::string model;
  std::string api_key_env = "MP_MBR_API_KEY";
  int timeout_ms = 30000;
  int max_retries = 3;
  int retry_base_ms = 100;
  int concurrency = 4;
};

// Desk-scale surrogate backend: every prompt defines a latent mode
// gold + offset, candidates are noisy draws around it, serialized into a
// token string that text-space metrics can chew on.
struct SimConfig {
  size_t dim = 3;
  std::vector<std::string> input_ids;
  std::vector<std::vector<double>> gold;     // parallel to input_ids
  std::vector<std::string> prompt_ids;
  std::vector<std::vector<double>> offsets;  // parallel to prompt_ids

  const std::vector<double>& gold_for(const std::string& input_id) const;
  size_t prompt_index(const std::string& prompt_id) const;

  std::vector<Prompt> prompt_bank() const;
  // Inputs whose single reference is the serialized gold point.
  std::vector<TaskInput> task_inputs() const;

  static SimConfig from_json(const json& obj);
  json to_json() const;
  static SimConfig load(const std::string& path);

  // Study config with seeded gold points and offsets in +/- pairs of equal
  // norm (symmetric about the origin).
  static SimConfig make_symmetric(size_t dim, size_t n_inputs,
                                  size_t n_prompts, double offset_norm,
                                  uint64_t seed);
};

// Latent <-> token-string codec on a fixed 1e-4 grid. Each coordinate is
// emitted as digit-prefix tokens with "|" between coordinates, e.g.
// (0.1234, -0.002) -> "1 12 123 1234 | -2 -20". The last token of a group
// carries the full quantized value, so the mapping reverses bit-for-bit.
std::string sim_serialize(const std::vector<double>& z);
std::vector<double> sim_deserialize(std::string_view text);
std::vector<double> sim_quantize(const std::vector<double>& z);

Candidate sim_generate(const SimConfig& sim, const std::string& input_id,
                       size_t prompt_index, const SamplingParams& params,
                       uint64_t rng_seed);

// Replays candidates recorded in a candidates.jsonl file, keyed by
// (input_id, prompt_id) and consumed in file order.
class ReplayStore {
 public:
  explicit ReplayStore(std::vector<Candidate> rows);
  static ReplayStore load(const std::string& path);

  Candidate take(const std::string& input_id, const std::string& prompt_id);
  void reset();
  const std::vector<Candidate>& rows() const { return rows_; }

 private:
  std::vector<Candidate> rows_;
  std::unordered_map<std::string, std::vector<size_t>> by_key_;
  std::unordered_map<std::string, size_t> cursor_;
};

struct Backend {
  BackendKind kind = BackendKind::sim;
  HttpBackendConfig http;
  std::shared_ptr<SimConfig> sim;
  std::shared_ptr<ReplayStore> replay;

  static Backend make_sim(SimConfig config);
  static Backend make_replay(ReplayStore store);
  static Backend make_http(HttpBackendConfig config);
};

// One candidate for the (entry_index, sample_index) slot of the generation
// plan. Seeds derive from params.seed via (input, entry, sample), so any
// slot can be recomputed independently.
Candidate generate_one(const Backend& backend, const TaskInput& input,
                       const Prompt& prompt, size_t entry_index,
                       size_t sample_index, const SamplingParams& params);

// n_per_prompt candidates per prompt entry, in deterministic
// (entry, sample) order; a prompt listed twice yields twice the candidates.
HypothesisSet generate(const Backend& backend, const TaskInput& input,
                       const std::vector<Prompt>& prompts,
                       const SamplingParams& params);

// Marks empty/degenerate/non-compiling candidates as rejected (kept in the
// record, excluded from selection). Idempotent. Throws EmptyHypothesisError
// if nothing survives.
HypothesisSet filter_candidates(
    HypothesisSet hset, TaskKind kind,
    const std::optional<std::string>& compile_hook = std::nullopt);

// Conservative degenerate-program check: signature/decorator lines removed,
// whitespace normalized; "" / "pass" / "return None" are degenerate.
bool is_degenerate_code(const std::string& text);

struct ParaphraseReport {
  size_t requested = 0;
  size_t produced = 0;
  size_t skipped_empty = 0;
  size_t skipped_duplicate = 0;
};

inline constexpr const char* kParaphrasePlaceholder = "{example_prompt}";

// Writes `count` new instruction prompts by filling `tmpl` with seed prompt
// texts and querying the HTTP backend. Seeds are never part of the output;
// blank or seed-identical completions are skipped (count may undershoot,
// see the report).
std::vector<Prompt> paraphrase_prompts(const HttpBackendConfig& http,
                                       const std::vector<Prompt>& seeds,
                                       const std::string& tmpl, size_t count,
                                       const SamplingParams& params,
                                       ParaphraseReport* report = nullptr);

}  // namespace mpmbr
