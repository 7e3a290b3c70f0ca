#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpmbr/config.hpp"
#include "mpmbr/experiments.hpp"

namespace mpmbr {

// Exit codes shared by every subcommand: 0 success, 2 partial failure,
// 1 configuration/data/domain errors (raised as exceptions and mapped by
// the CLI entry point).
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

// One line of selections.jsonl. Failed inputs produce rows carrying `error`
// instead of a selection.
struct SelectionRow {
  std::string input_id;
  std::string method;
  size_t winner_index = 0;  // index into the input's rows in candidates.jsonl
  std::string winner_text;
  std::vector<double> expected_utilities;
  bool tie_broken = false;
  std::optional<std::string> error;
};

json selection_row_to_json(const SelectionRow& row);
SelectionRow selection_row_from_json(const json& obj);

// Expands the configured prompt strategy (single / sample / select) into the
// prompt entry list used for generation.
std::vector<Prompt> resolve_prompt_entries(const RunConfig& cfg,
                                           const PromptBank& bank);

// Applies the configured selection method to one active hypothesis set.
SelectionResult run_selection(const RunConfig& cfg, const ScoringContext& ctx,
                              const HypothesisSet& active,
                              const std::string& source);

int cmd_generate(const RunConfig& cfg, const std::string& inputs_path,
                 const std::string& prompts_path, const std::string& out_path);

int cmd_decode(const RunConfig& cfg, const std::string& candidates_path,
               const std::string& out_path,
               const std::optional<std::string>& inputs_path = std::nullopt);

int cmd_report(const RunConfig& cfg, const std::string& selections_path,
               const std::string& inputs_path,
               const std::optional<std::string>& candidates_path = std::nullopt);

int cmd_usage(const RunConfig& cfg, const std::string& inputs_path,
              const std::string& prompts_path, const std::string& out_path,
              UsageMode mode);

int cmd_significance(const RunConfig& cfg, const std::string& selections_a,
                     const std::string& selections_b,
                     const std::string& inputs_path, int iterations,
                     const std::optional<std::string>& out_path);

int cmd_curve(const RunConfig& cfg, const std::string& candidates_path,
              const std::string& inputs_path, const std::vector<int>& sizes,
              int iterations);

struct SimulateArgs {
  size_t n_prompts = 10;
  size_t set_size = 50;
  std::vector<double> temperatures{0.1, 0.5};
  size_t n_seeds = 50;
};

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& args);

int cmd_paraphrase(const RunConfig& cfg, const std::string& prompts_path,
                   size_t count, const std::string& out_path,
                   const std::optional<std::string>& template_path);

enum class SelectPromptsOp { top_p, sample, select };
SelectPromptsOp select_prompts_op_from_string(const std::string& s);

int cmd_select_prompts(const RunConfig& cfg, const std::string& prompts_path,
                       SelectPromptsOp op, const std::string& out_path);

}  // namespace mpmbr
