#include "mpmbr/config.hpp"

#include <filesystem>
#include <fstream>

#include "mpmbr/errors.hpp"

namespace mpmbr {

namespace {

void require_file(const std::string& path, const char* what) {
  if (path.empty()) {
    throw ConfigError(std::string(what) + " path is empty");
  }
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " path does not exist: " + path);
  }
}

MetricSpec parse_metric(const json& obj) {
  MetricSpec spec;
  spec.name = obj.at("name").get<std::string>();
  if (obj.contains("mode")) {
    spec.mode = metric_mode_from_string(obj["mode"].get<std::string>());
  }
  if (obj.contains("direction")) {
    spec.direction =
        metric_direction_from_string(obj["direction"].get<std::string>());
  }
  if (obj.contains("source")) {
    spec.source = metric_source_from_string(obj["source"].get<std::string>());
  }
  if (obj.contains("endpoint")) {
    spec.endpoint = obj["endpoint"].get<std::string>();
  }
  spec.validate();
  return spec;
}

}  // namespace

const char* to_string(PromptMode m) {
  switch (m) {
    case PromptMode::single:
      return "single";
    case PromptMode::sample:
      return "sample";
    case PromptMode::select:
      return "select";
  }
  return "sample";
}

PromptMode prompt_mode_from_string(const std::string& s) {
  if (s == "single") return PromptMode::single;
  if (s == "sample") return PromptMode::sample;
  if (s == "select") return PromptMode::select;
  throw ConfigError("unknown prompt strategy mode: " + s);
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.prompt_strategy.p = 0.6;
  MetricSpec bleu_eval;
  bleu_eval.name = "bleu";
  bleu_eval.mode = MetricMode::reference_based_eval;
  cfg.metrics.push_back(bleu_eval);
  return cfg;
}

RunConfig RunConfig::from_json(const json& obj) {
  RunConfig cfg = defaults();
  if (obj.contains("backend")) {
    const json& b = obj["backend"];
    if (b.contains("kind")) {
      cfg.backend.kind = backend_kind_from_string(b["kind"].get<std::string>());
    }
    if (b.contains("base_url")) cfg.backend.http.base_url = b["base_url"];
    if (b.contains("model")) cfg.backend.http.model = b["model"];
    if (b.contains("api_key_env")) cfg.backend.http.api_key_env = b["api_key_env"];
    if (b.contains("timeout_ms")) cfg.backend.http.timeout_ms = b["timeout_ms"];
    if (b.contains("max_retries")) cfg.backend.http.max_retries = b["max_retries"];
    if (b.contains("retry_base_ms")) cfg.backend.http.retry_base_ms = b["retry_base_ms"];
    if (b.contains("candidates_path")) cfg.backend.candidates_path = b["candidates_path"];
    if (b.contains("sim_config_path")) cfg.backend.sim_config_path = b["sim_config_path"];
  }
  if (obj.contains("sampling")) {
    const json& s = obj["sampling"];
    if (s.contains("temperature")) cfg.sampling.temperature = s["temperature"];
    if (s.contains("top_p")) cfg.sampling.top_p = s["top_p"];
    if (s.contains("n_per_prompt")) cfg.sampling.n_per_prompt = s["n_per_prompt"];
    if (s.contains("max_tokens")) cfg.sampling.max_tokens = s["max_tokens"];
    if (s.contains("seed") && !s["seed"].is_null()) {
      cfg.sampling.seed = s["seed"].get<uint64_t>();
    }
  }
  if (obj.contains("prompt_strategy")) {
    const json& p = obj["prompt_strategy"];
    if (p.contains("mode")) {
      cfg.prompt_strategy.mode = prompt_mode_from_string(p["mode"].get<std::string>());
      if (cfg.prompt_strategy.mode != PromptMode::sample) {
        cfg.prompt_strategy.p.reset();  // the p=0.6 default applies to sample mode only
      }
    }
    if (p.contains("p") && !p["p"].is_null()) {
      cfg.prompt_strategy.p = p["p"].get<double>();
    }
    if (p.contains("k")) cfg.prompt_strategy.k = p["k"].get<size_t>();
    if (p.contains("strategy")) {
      cfg.prompt_strategy.strategy =
          select_strategy_from_string(p["strategy"].get<std::string>());
    }
    if (p.contains("seed")) cfg.prompt_strategy.seed = p["seed"].get<uint64_t>();
  }
  if (obj.contains("selection")) {
    const json& s = obj["selection"];
    if (s.contains("method")) {
      cfg.selection.method =
          selection_method_from_string(s["method"].get<std::string>());
    }
    if (s.contains("utility_metric")) cfg.selection.utility_metric = s["utility_metric"];
    if (s.contains("rf_metric") && !s["rf_metric"].is_null()) {
      cfg.selection.rf_metric = s["rf_metric"].get<std::string>();
    }
    if (s.contains("m")) cfg.selection.m = s["m"].get<size_t>();
    if (s.contains("include_self")) cfg.selection.include_self = s["include_self"];
  }
  if (obj.contains("metrics")) {
    cfg.metrics.clear();
    for (const json& m : obj["metrics"]) cfg.metrics.push_back(parse_metric(m));
  }
  if (obj.contains("task")) {
    const json& t = obj["task"];
    if (t.contains("kind")) {
      cfg.task.kind = task_kind_from_string(t["kind"].get<std::string>());
    }
    if (t.contains("compile_hook") && !t["compile_hook"].is_null()) {
      cfg.task.compile_hook = t["compile_hook"].get<std::string>();
    }
    if (t.contains("answer_pattern") && !t["answer_pattern"].is_null()) {
      cfg.task.answer_pattern = t["answer_pattern"].get<std::string>();
    }
  }
  if (obj.contains("split")) {
    const json& s = obj["split"];
    if (s.contains("fraction")) cfg.split.fraction = s["fraction"];
    if (s.contains("seed")) cfg.split.seed = s["seed"].get<uint64_t>();
  }
  if (obj.contains("report")) {
    const json& r = obj["report"];
    if (r.contains("out_dir")) cfg.report.out_dir = r["out_dir"];
    if (r.contains("emit_svg")) cfg.report.emit_svg = r["emit_svg"];
  }
  if (obj.contains("remote")) {
    const json& r = obj["remote"];
    if (r.contains("batch_limit")) cfg.remote.batch_limit = r["batch_limit"].get<size_t>();
    if (r.contains("timeout_ms")) cfg.remote.timeout_ms = r["timeout_ms"];
    if (r.contains("max_retries")) cfg.remote.max_retries = r["max_retries"];
    if (r.contains("retry_base_ms")) cfg.remote.retry_base_ms = r["retry_base_ms"];
  }
  if (obj.contains("concurrency")) cfg.concurrency = obj["concurrency"];
  if (obj.contains("seed")) cfg.seed = obj["seed"].get<uint64_t>();
  if (obj.contains("paraphrase_template")) {
    cfg.paraphrase_template = obj["paraphrase_template"].get<std::string>();
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded()) throw ConfigError("invalid JSON in config " + path);
  return from_json(obj);
}

void RunConfig::validate() const {
  sampling.validate();
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (prompt_strategy.mode == PromptMode::sample) {
    if (!prompt_strategy.p) {
      throw ConfigError("prompt_strategy.p is required when mode=sample");
    }
  } else if (prompt_strategy.p) {
    throw ConfigError("prompt_strategy.p is only valid when mode=sample");
  }
  if (prompt_strategy.k == 0) throw ConfigError("prompt_strategy.k must be positive");
  if (selection.m == 0) throw ConfigError("selection.m must be positive");
  if (backend.kind == BackendKind::http && backend.http.base_url.empty()) {
    throw ConfigError("http backend requires base_url");
  }
  for (const MetricSpec& m : metrics) m.validate();
  if (task.answer_pattern) {
    AnswerExtractor check(*task.answer_pattern);  // validates the regex
  }
}

MetricSpec RunConfig::resolve_metric(const std::string& name,
                                     MetricMode wanted) const {
  for (const MetricSpec& m : metrics) {
    if (m.name == name) return m;
  }
  MetricSpec implicit;
  implicit.name = name;
  implicit.mode = wanted;
  implicit.validate();
  return implicit;
}

MetricSpec RunConfig::primary_eval_metric() const {
  for (const MetricSpec& m : metrics) {
    if (m.mode == MetricMode::reference_based_eval) return m;
  }
  throw ConfigError("no reference-based evaluation metric configured");
}

ScoringContext RunConfig::scoring_context() const {
  ScoringContext ctx;
  if (task.answer_pattern) {
    ctx.extractor = AnswerExtractor(*task.answer_pattern);
  }
  ctx.remote = remote;
  ctx.remote.concurrency = concurrency;
  return ctx;
}

Backend RunConfig::make_backend() const {
  switch (backend.kind) {
    case BackendKind::http: {
      HttpBackendConfig http = backend.http;
      http.concurrency = concurrency;
      return Backend::make_http(http);
    }
    case BackendKind::replay: {
      require_file(backend.candidates_path, "replay candidates");
      return Backend::make_replay(ReplayStore::load(backend.candidates_path));
    }
    case BackendKind::sim: {
      if (backend.sim_config_path.empty()) {
        return Backend::make_sim(SimConfig::make_symmetric(3, 4, 10, 1.5, seed));
      }
      require_file(backend.sim_config_path, "sim config");
      return Backend::make_sim(SimConfig::load(backend.sim_config_path));
    }
  }
  throw ConfigError("unknown backend kind");
}

}  // namespace mpmbr
