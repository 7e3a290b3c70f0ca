#include "mpmbr/backends.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "mpmbr/concurrency.hpp"
#include "mpmbr/errors.hpp"
#include "mpmbr/rng.hpp"
#include "mpmbr/text.hpp"

namespace mpmbr {

namespace {

constexpr double kSimGrid = 1e-4;

std::string replay_key(const std::string& input_id,
                       const std::string& prompt_id) {
  return input_id + '\x1f' + prompt_id;
}

struct ParsedUrl {
  std::string host;
  std::string path;
};

ParsedUrl parse_base_url(const std::string& url) {
  size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("backend base_url must include a scheme: " + url);
  }
  size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

json chat_messages(const Prompt& prompt, const std::string& source) {
  json messages = json::array();
  if (prompt.kind == PromptKind::instruction) {
    messages.push_back({{"role", "system"}, {"content", prompt.text}});
    messages.push_back({{"role", "user"}, {"content", source}});
  } else {
    // Few-shot blocks are a single serialized text; the source follows it.
    messages.push_back(
        {{"role", "user"}, {"content", prompt.text + "\n" + source}});
  }
  return messages;
}

struct ChatCompletion {
  std::string text;
  std::optional<double> logprob;
};

// One chat-completions request with exponential-backoff retries.
ChatCompletion http_chat(const HttpBackendConfig& cfg, const json& messages,
                         const SamplingParams& params,
                         const std::string& context) {
  ParsedUrl url = parse_base_url(cfg.base_url);
  json body = json::object();
  body["model"] = cfg.model;
  body["messages"] = messages;
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  body["n"] = 1;
  body["max_tokens"] = params.max_tokens;
  body["logprobs"] = true;
  const std::string payload = body.dump();

  const char* api_key = std::getenv(cfg.api_key_env.c_str());
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg.retry_base_ms * (1 << (attempt - 1))));
    }
    httplib::Client client(url.host);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000,
                            (cfg.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (api_key && *api_key) {
      headers.emplace("Authorization", std::string("Bearer ") + api_key);
    }
    auto res = client.Post(url.path + "/chat/completions", headers, payload,
                           "application/json");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") ||
        !parsed["choices"].is_array() || parsed["choices"].empty()) {
      last_error = "malformed response body";
      continue;
    }
    const json& choice = parsed["choices"][0];
    ChatCompletion out;
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      out.text = choice["message"]["content"].get<std::string>();
    }
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") &&
        choice["logprobs"]["content"].is_array()) {
      double sum = 0.0;
      bool any = false;
      for (const json& tok : choice["logprobs"]["content"]) {
        if (tok.contains("logprob") && tok["logprob"].is_number()) {
          sum += tok["logprob"].get<double>();
          any = true;
        }
      }
      if (any) out.logprob = std::min(sum, 0.0);
    }
    return out;
  }
  throw TransportError("chat request failed after " +
                       std::to_string(cfg.max_retries + 1) + " attempts (" +
                       context + "): " + last_error);
}

}  // namespace

const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::http:
      return "http";
    case BackendKind::replay:
      return "replay";
    case BackendKind::sim:
      return "sim";
  }
  return "sim";
}

const char* to_string(TaskKind k) {
  return k == TaskKind::code ? "code" : "text";
}

BackendKind backend_kind_from_string(const std::string& s) {
  if (s == "http") return BackendKind::http;
  if (s == "replay") return BackendKind::replay;
  if (s == "sim") return BackendKind::sim;
  throw ConfigError("unknown backend kind: " + s);
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "text") return TaskKind::text;
  if (s == "code") return TaskKind::code;
  throw ConfigError("unknown task kind: " + s);
}

// ---------------------------------------------------------------------------
// Sim backend
// ---------------------------------------------------------------------------

std::vector<double> sim_quantize(const std::vector<double>& z) {
  std::vector<double> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    out[i] = static_cast<double>(std::llround(z[i] / kSimGrid)) * kSimGrid;
  }
  return out;
}

std::string sim_serialize(const std::vector<double>& z) {
  std::string out;
  for (size_t i = 0; i < z.size(); ++i) {
    if (i != 0) out += " | ";
    long long q = std::llround(z[i] / kSimGrid);
    std::string digits = std::to_string(q);
    // Digit-prefix tokens ("1 12 123 1234"): nearby latents share leading
    // tokens, distant modes diverge early, and the bigram vocabulary scales
    // with the value range instead of saturating at digit pairs.
    size_t first = digits[0] == '-' ? 2 : 1;
    for (size_t len = first; len <= digits.size(); ++len) {
      if (len != first) out.push_back(' ');
      out.append(digits, 0, len);
    }
  }
  return out;
}

std::vector<double> sim_deserialize(std::string_view text) {
  std::vector<double> coords;
  std::string last;
  auto flush = [&]() {
    if (last.empty()) throw DataError("sim_deserialize: empty coordinate");
    size_t parsed = 0;
    long long value = 0;
    try {
      value = std::stoll(last, &parsed);
    } catch (const std::exception&) {
      throw DataError("sim_deserialize: bad token '" + last + "'");
    }
    if (parsed != last.size()) {
      throw DataError("sim_deserialize: bad token '" + last + "'");
    }
    coords.push_back(static_cast<double>(value) * kSimGrid);
    last.clear();
  };
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    if (token == "|") {
      flush();
      continue;
    }
    // The final token of a coordinate group is the full quantized value.
    last = token;
  }
  flush();
  return coords;
}

const std::vector<double>& SimConfig::gold_for(
    const std::string& input_id) const {
  for (size_t i = 0; i < input_ids.size(); ++i) {
    if (input_ids[i] == input_id) return gold[i];
  }
  throw DomainError("sim backend: unknown input id " + input_id);
}

size_t SimConfig::prompt_index(const std::string& prompt_id) const {
  for (size_t i = 0; i < prompt_ids.size(); ++i) {
    if (prompt_ids[i] == prompt_id) return i;
  }
  throw DomainError("sim backend: unknown prompt id " + prompt_id);
}

std::vector<Prompt> SimConfig::prompt_bank() const {
  std::vector<Prompt> prompts;
  prompts.reserve(prompt_ids.size());
  for (size_t i = 0; i < prompt_ids.size(); ++i) {
    Prompt p;
    p.id = prompt_ids[i];
    p.text = "latent mode " + std::to_string(i);
    p.kind = PromptKind::instruction;
    prompts.push_back(std::move(p));
  }
  return prompts;
}

std::vector<TaskInput> SimConfig::task_inputs() const {
  std::vector<TaskInput> inputs;
  inputs.reserve(input_ids.size());
  for (size_t i = 0; i < input_ids.size(); ++i) {
    TaskInput in;
    in.id = input_ids[i];
    in.source = "latent target " + std::to_string(i);
    in.references = {sim_serialize(gold[i])};
    inputs.push_back(std::move(in));
  }
  return inputs;
}

SimConfig SimConfig::from_json(const json& obj) {
  SimConfig cfg;
  cfg.dim = obj.at("dim").get<size_t>();
  if (cfg.dim == 0) throw ConfigError("sim config: dim must be positive");
  for (auto it = obj.at("gold").begin(); it != obj.at("gold").end(); ++it) {
    cfg.input_ids.push_back(it.key());
    cfg.gold.push_back(sim_quantize(it.value().get<std::vector<double>>()));
    if (cfg.gold.back().size() != cfg.dim) {
      throw ConfigError("sim config: gold point for " + it.key() +
                        " has wrong dimension");
    }
  }
  cfg.offsets.clear();
  for (const json& off : obj.at("offsets")) {
    cfg.offsets.push_back(sim_quantize(off.get<std::vector<double>>()));
    if (cfg.offsets.back().size() != cfg.dim) {
      throw ConfigError("sim config: offset with wrong dimension");
    }
  }
  if (obj.contains("prompt_ids")) {
    cfg.prompt_ids = obj["prompt_ids"].get<std::vector<std::string>>();
    if (cfg.prompt_ids.size() != cfg.offsets.size()) {
      throw ConfigError("sim config: prompt_ids/offsets size mismatch");
    }
  } else {
    for (size_t i = 0; i < cfg.offsets.size(); ++i) {
      cfg.prompt_ids.push_back("sim-p" + std::to_string(i));
    }
  }
  if (cfg.input_ids.empty() || cfg.offsets.empty()) {
    throw ConfigError("sim config: needs at least one input and one offset");
  }
  return cfg;
}

json SimConfig::to_json() const {
  json obj = json::object();
  obj["dim"] = dim;
  json gold_obj = json::object();
  for (size_t i = 0; i < input_ids.size(); ++i) gold_obj[input_ids[i]] = gold[i];
  obj["gold"] = std::move(gold_obj);
  obj["offsets"] = offsets;
  obj["prompt_ids"] = prompt_ids;
  return obj;
}

SimConfig SimConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sim config " + path);
  json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw DataError("invalid JSON in " + path);
  return from_json(obj);
}

SimConfig SimConfig::make_symmetric(size_t dim, size_t n_inputs,
                                    size_t n_prompts, double offset_norm,
                                    uint64_t seed) {
  if (dim == 0 || n_inputs == 0 || n_prompts == 0) {
    throw DomainError("sim config: dim, inputs and prompts must be positive");
  }
  SimConfig cfg;
  cfg.dim = dim;
  Rng rng(derive_seed(seed, "sim_config"));
  for (size_t i = 0; i < n_inputs; ++i) {
    cfg.input_ids.push_back("sim-x" + std::to_string(i));
    std::vector<double> g(dim);
    for (double& v : g) v = 2.0 * rng.next_double() - 1.0;
    cfg.gold.push_back(sim_quantize(g));
  }
  // Offsets come in +/- pairs of equal norm so the bank is symmetric about
  // the origin; an odd count leaves the last direction unpaired.
  size_t emitted = 0;
  while (emitted < n_prompts) {
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (double& v : dir) {
      v = rng.next_normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) continue;
    for (double& v : dir) v = v / norm * offset_norm;
    cfg.offsets.push_back(sim_quantize(dir));
    ++emitted;
    if (emitted < n_prompts) {
      std::vector<double> neg(dim);
      for (size_t d = 0; d < dim; ++d) neg[d] = -dir[d];
      cfg.offsets.push_back(sim_quantize(neg));
      ++emitted;
    }
  }
  for (size_t i = 0; i < n_prompts; ++i) {
    cfg.prompt_ids.push_back("sim-p" + std::to_string(i));
  }
  return cfg;
}

Candidate sim_generate(const SimConfig& sim, const std::string& input_id,
                       size_t prompt_index, const SamplingParams& params,
                       uint64_t rng_seed) {
  if (prompt_index >= sim.offsets.size()) {
    throw DomainError("sim backend: prompt index " +
                      std::to_string(prompt_index) + " out of range");
  }
  const std::vector<double>& g = sim.gold_for(input_id);
  const std::vector<double>& offset = sim.offsets[prompt_index];

  Rng rng(derive_seed(rng_seed, "sim_draw"));
  std::vector<double> z(sim.dim);
  for (size_t d = 0; d < sim.dim; ++d) {
    double noise = params.temperature > 0.0
                       ? params.temperature * rng.next_normal()
                       : 0.0;
    z[d] = g[d] + offset[d] + noise;
  }
  z = sim_quantize(z);

  double sq = 0.0;
  for (size_t d = 0; d < sim.dim; ++d) {
    double diff = z[d] - (g[d] + offset[d]);
    sq += diff * diff;
  }

  Candidate c;
  c.input_id = input_id;
  c.prompt_id = sim.prompt_ids[prompt_index];
  c.text = sim_serialize(z);
  c.logprob = 0.0 - sq / 2.0;
  return c;
}

// ---------------------------------------------------------------------------
// Replay backend
// ---------------------------------------------------------------------------

ReplayStore::ReplayStore(std::vector<Candidate> rows) : rows_(std::move(rows)) {
  for (size_t i = 0; i < rows_.size(); ++i) {
    by_key_[replay_key(rows_[i].input_id, rows_[i].prompt_id)].push_back(i);
  }
}

ReplayStore ReplayStore::load(const std::string& path) {
  return ReplayStore(load_candidates(path));
}

Candidate ReplayStore::take(const std::string& input_id,
                            const std::string& prompt_id) {
  const std::string key = replay_key(input_id, prompt_id);
  auto it = by_key_.find(key);
  size_t& cursor = cursor_[key];
  if (it == by_key_.end() || cursor >= it->second.size()) {
    throw DataError("replay miss: no stored candidate for input '" + input_id +
                    "' prompt '" + prompt_id + "' (sample " +
                    std::to_string(cursor) + ")");
  }
  return rows_[it->second[cursor++]];
}

void ReplayStore::reset() { cursor_.clear(); }

Backend Backend::make_sim(SimConfig config) {
  Backend b;
  b.kind = BackendKind::sim;
  b.sim = std::make_shared<SimConfig>(std::move(config));
  return b;
}

Backend Backend::make_replay(ReplayStore store) {
  Backend b;
  b.kind = BackendKind::replay;
  b.replay = std::make_shared<ReplayStore>(std::move(store));
  return b;
}

Backend Backend::make_http(HttpBackendConfig config) {
  Backend b;
  b.kind = BackendKind::http;
  b.http = std::move(config);
  return b;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

Candidate generate_one(const Backend& backend, const TaskInput& input,
                       const Prompt& prompt, size_t entry_index,
                       size_t sample_index, const SamplingParams& params) {
  switch (backend.kind) {
    case BackendKind::sim: {
      if (!backend.sim) throw ConfigError("sim backend not configured");
      uint64_t seed = derive_seed(params.seed.value_or(0), "generate",
                                  input.id, entry_index, sample_index);
      return sim_generate(*backend.sim, input.id,
                          backend.sim->prompt_index(prompt.id), params, seed);
    }
    case BackendKind::replay: {
      if (!backend.replay) throw ConfigError("replay backend not configured");
      return backend.replay->take(input.id, prompt.id);
    }
    case BackendKind::http: {
      std::string context = "input=" + input.id + " prompt=" + prompt.id +
                            " entry=" + std::to_string(entry_index) +
                            " sample=" + std::to_string(sample_index);
      ChatCompletion completion = http_chat(
          backend.http, chat_messages(prompt, input.source), params, context);
      Candidate c;
      c.input_id = input.id;
      c.prompt_id = prompt.id;
      c.text = completion.text;
      c.logprob = completion.logprob;
      return c;
    }
  }
  throw ConfigError("unknown backend kind");
}

HypothesisSet generate(const Backend& backend, const TaskInput& input,
                       const std::vector<Prompt>& prompts,
                       const SamplingParams& params) {
  params.validate();
  if (prompts.empty()) throw ConfigError("generate: empty prompt list");

  const size_t samples = static_cast<size_t>(params.n_per_prompt);
  const size_t total = prompts.size() * samples;
  HypothesisSet hset;
  hset.input_id = input.id;
  hset.candidates.resize(total);

  if (backend.kind == BackendKind::http) {
    parallel_for(total, backend.http.concurrency, [&](size_t idx) {
      size_t entry = idx / samples;
      size_t sample = idx % samples;
      hset.candidates[idx] = generate_one(backend, input, prompts[entry],
                                          entry, sample, params);
    });
  } else {
    // Replay consumption order must follow the plan; sim is pure anyway.
    for (size_t idx = 0; idx < total; ++idx) {
      size_t entry = idx / samples;
      size_t sample = idx % samples;
      hset.candidates[idx] =
          generate_one(backend, input, prompts[entry], entry, sample, params);
    }
  }
  return hset;
}

// ---------------------------------------------------------------------------
// Candidate filtering
// ---------------------------------------------------------------------------

bool is_degenerate_code(const std::string& text) {
  std::string body;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string stripped = normalize_whitespace(line);
    if (stripped.empty()) continue;
    if (stripped.rfind("def ", 0) == 0 || stripped.rfind("async def ", 0) == 0 ||
        stripped.rfind("@", 0) == 0) {
      continue;
    }
    if (!body.empty()) body.push_back(' ');
    body += stripped;
  }
  return body.empty() || body == "pass" || body == "return None";
}

namespace {

// exit status of `command` fed `text` on stdin; 0 keeps the candidate.
int run_compile_hook(const std::string& command, const std::string& text) {
  FILE* pipe = popen(command.c_str(), "w");
  if (!pipe) throw ConfigError("compile hook: cannot run '" + command + "'");
  if (!text.empty()) {
    fwrite(text.data(), 1, text.size(), pipe);
  }
  int status = pclose(pipe);
  if (status == -1) {
    throw ConfigError("compile hook: wait failed for '" + command + "'");
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 1;
}

}  // namespace

HypothesisSet filter_candidates(HypothesisSet hset, TaskKind kind,
                                const std::optional<std::string>& compile_hook) {
  for (Candidate& c : hset.candidates) {
    if (c.rejected) continue;
    if (is_blank(c.text)) {
      c.rejected = "empty";
      continue;
    }
    if (kind != TaskKind::code) continue;
    if (is_degenerate_code(c.text)) {
      c.rejected = "degenerate";
      continue;
    }
    if (compile_hook && run_compile_hook(*compile_hook, c.text) != 0) {
      c.rejected = "non_compiling";
    }
  }
  bool any_active = false;
  for (const Candidate& c : hset.candidates) {
    if (c.active()) {
      any_active = true;
      break;
    }
  }
  if (!hset.candidates.empty() && !any_active) {
    throw EmptyHypothesisError("all candidates rejected for input '" +
                               hset.input_id + "'");
  }
  return hset;
}

// ---------------------------------------------------------------------------
// Prompt paraphrasing
// ---------------------------------------------------------------------------

std::vector<Prompt> paraphrase_prompts(const HttpBackendConfig& http,
                                       const std::vector<Prompt>& seeds,
                                       const std::string& tmpl, size_t count,
                                       const SamplingParams& params,
                                       ParaphraseReport* report) {
  if (tmpl.find(kParaphrasePlaceholder) == std::string::npos) {
    throw ConfigError(std::string("paraphrase template must contain ") +
                      kParaphrasePlaceholder);
  }
  if (seeds.empty()) throw ConfigError("paraphrase_prompts: no seed prompts");
  params.validate();

  ParaphraseReport local;
  local.requested = count;
  std::vector<std::string> completions(count);
  parallel_for(count, http.concurrency, [&](size_t i) {
    const Prompt& seed = seeds[i % seeds.size()];
    std::string filled = tmpl;
    size_t pos = 0;
    while ((pos = filled.find(kParaphrasePlaceholder, pos)) !=
           std::string::npos) {
      filled.replace(pos, std::string(kParaphrasePlaceholder).size(),
                     seed.text);
      pos += seed.text.size();
    }
    json messages = json::array();
    messages.push_back({{"role", "user"}, {"content", filled}});
    completions[i] =
        http_chat(http, messages, params, "paraphrase sample " + std::to_string(i))
            .text;
  });

  std::vector<Prompt> out;
  for (size_t i = 0; i < count; ++i) {
    std::string text = trim(completions[i]);
    if (text.empty()) {
      ++local.skipped_empty;
      std::cerr << "[mpmbr] warning: paraphrase completion " << i
                << " was empty, skipping\n";
      continue;
    }
    bool duplicate = false;
    for (const Prompt& seed : seeds) {
      if (trim(seed.text) == text) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      ++local.skipped_duplicate;
      std::cerr << "[mpmbr] warning: paraphrase completion " << i
                << " duplicates a seed prompt, skipping\n";
      continue;
    }
    Prompt p;
    char id[32];
    std::snprintf(id, sizeof(id), "llm-p%04zu", out.size());
    p.id = id;
    p.text = std::move(text);
    p.kind = PromptKind::instruction;
    out.push_back(std::move(p));
  }
  local.produced = out.size();
  if (report) *report = local;
  return out;
}

}  // namespace mpmbr
