#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpmbr/backends.hpp"
#include "mpmbr/mbr.hpp"
#include "mpmbr/metrics.hpp"
#include "mpmbr/prompt_select.hpp"
#include "mpmbr/remote.hpp"
#include "mpmbr/scoring.hpp"

namespace mpmbr {

enum class PromptMode { single, sample, select };
const char* to_string(PromptMode m);
PromptMode prompt_mode_from_string(const std::string& s);

struct BackendSection {
  BackendKind kind = BackendKind::sim;
  HttpBackendConfig http;
  std::string candidates_path;  // replay
  std::string sim_config_path;  // sim; empty means a built-in default config
};

struct PromptStrategySection {
  PromptMode mode = PromptMode::sample;
  std::optional<double> p;  // present iff mode == sample
  size_t k = 10;            // sample: number of draws; select: subset size
  SelectStrategy strategy = SelectStrategy::random;
  uint64_t seed = 0;
};

struct SelectionSection {
  SelectionMethod method = SelectionMethod::mbr;
  std::string utility_metric = "bleu";
  std::optional<std::string> rf_metric;
  size_t m = 5;
  bool include_self = true;
};

struct TaskSection {
  TaskKind kind = TaskKind::text;
  std::optional<std::string> compile_hook;
  std::optional<std::string> answer_pattern;
};

struct SplitSection {
  double fraction = 0.2;
  uint64_t seed = 0;
};

struct ReportSection {
  std::string out_dir = "out";
  bool emit_svg = false;
};

// One JSON document drives a whole run; CLI flags override individual keys.
// Defaults follow the engine's reference setup: prompt-sampling p=0.6,
// nucleus temperature 0.9 / top_p 0.95, 10 prompt draws x 10 samples.
struct RunConfig {
  BackendSection backend;
  SamplingParams sampling;
  PromptStrategySection prompt_strategy;
  SelectionSection selection;
  std::vector<MetricSpec> metrics;
  TaskSection task;
  SplitSection split;
  ReportSection report;
  RemoteOptions remote;
  int concurrency = 4;
  uint64_t seed = 0;
  std::string paraphrase_template;

  static RunConfig defaults();
  static RunConfig from_json(const json& obj);
  static RunConfig load(const std::string& path);
  void validate() const;

  // Looks the name up in `metrics`, falling back to an implicit native spec
  // with the requested mode.
  MetricSpec resolve_metric(const std::string& name, MetricMode wanted) const;
  // First configured metric usable for reference-based evaluation.
  MetricSpec primary_eval_metric() const;

  ScoringContext scoring_context() const;
  Backend make_backend() const;  // loads replay/sim data, validates paths
};

}  // namespace mpmbr
