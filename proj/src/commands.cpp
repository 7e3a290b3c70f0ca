#include "mpmbr/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <unordered_map>

#include "mpmbr/concurrency.hpp"
#include "mpmbr/errors.hpp"
#include "mpmbr/rng.hpp"

namespace mpmbr {

namespace {

uint64_t prompt_strategy_seed(const RunConfig& cfg) {
  return derive_seed(cfg.seed, "prompt_strategy", cfg.prompt_strategy.seed);
}

uint64_t generation_seed(const RunConfig& cfg) {
  return cfg.sampling.seed ? *cfg.sampling.seed
                           : derive_seed(cfg.seed, "generate");
}

void write_error_json(const std::string& type, const std::string& message,
                      json details = json()) {
  json err = json::object();
  err["type"] = type;
  err["message"] = message;
  if (!details.is_null()) err["details"] = std::move(details);
  std::cerr << json{{"error", std::move(err)}}.dump() << "\n";
}

std::string source_or_empty(
    const std::unordered_map<std::string, const TaskInput*>& by_id,
    const std::string& input_id) {
  auto it = by_id.find(input_id);
  return it == by_id.end() ? std::string() : it->second->source;
}

}  // namespace

json selection_row_to_json(const SelectionRow& row) {
  json obj = json::object();
  obj["input_id"] = row.input_id;
  obj["method"] = row.method;
  if (row.error) {
    obj["error"] = *row.error;
    return obj;
  }
  obj["winner_index"] = row.winner_index;
  obj["winner_text"] = row.winner_text;
  obj["expected_utilities"] = row.expected_utilities;
  obj["tie_broken"] = row.tie_broken;
  return obj;
}

SelectionRow selection_row_from_json(const json& obj) {
  SelectionRow row;
  row.input_id = obj.at("input_id").get<std::string>();
  row.method = obj.at("method").get<std::string>();
  if (obj.contains("error")) {
    row.error = obj["error"].get<std::string>();
    return row;
  }
  row.winner_index = obj.at("winner_index").get<size_t>();
  row.winner_text = obj.at("winner_text").get<std::string>();
  if (obj.contains("expected_utilities")) {
    row.expected_utilities =
        obj["expected_utilities"].get<std::vector<double>>();
  }
  row.tie_broken = obj.value("tie_broken", false);
  return row;
}

std::vector<Prompt> resolve_prompt_entries(const RunConfig& cfg,
                                           const PromptBank& bank) {
  if (bank.empty()) throw ConfigError("prompt bank is empty");
  const PromptStrategySection& strategy = cfg.prompt_strategy;
  switch (strategy.mode) {
    case PromptMode::single: {
      // Strongest available prompt: highest usage weight, else bank head.
      size_t best = 0;
      if (bank.has_weights()) {
        for (size_t i = 1; i < bank.size(); ++i) {
          if (*bank.prompts[i].weight > *bank.prompts[best].weight) best = i;
        }
      }
      return {bank.prompts[best]};
    }
    case PromptMode::sample: {
      PromptBank truncated = top_p_prompt_set(bank, *strategy.p);
      return sample_prompts(truncated, strategy.k, prompt_strategy_seed(cfg));
    }
    case PromptMode::select: {
      PromptBank selected = select_prompts(bank, strategy.k, strategy.strategy,
                                           prompt_strategy_seed(cfg));
      return selected.prompts;
    }
  }
  throw ConfigError("unknown prompt strategy mode");
}

SelectionResult run_selection(const RunConfig& cfg, const ScoringContext& ctx,
                              const HypothesisSet& active,
                              const std::string& source) {
  const SelectionSection& sel = cfg.selection;
  const size_t n = active.candidates.size();
  const size_t m = std::min(sel.m, n);
  switch (sel.method) {
    case SelectionMethod::mbr: {
      MetricSpec utility =
          cfg.resolve_metric(sel.utility_metric, MetricMode::pairwise_utility);
      UtilityMatrix matrix =
          utility_matrix(active, utility, source, ctx, sel.include_self);
      return mbr_select(matrix, active);
    }
    case SelectionMethod::self_consistency:
      return self_consistency(active, ctx.extractor);
    case SelectionMethod::rerank: {
      if (!sel.rf_metric) {
        throw ConfigError("selection method rerank requires rf_metric");
      }
      MetricSpec rf =
          cfg.resolve_metric(*sel.rf_metric, MetricMode::reference_free);
      std::vector<double> scores = reference_free_scores(rf, active, source, ctx);
      return rerank(active, scores, rf.direction);
    }
    case SelectionMethod::rerank_mbr: {
      if (!sel.rf_metric) {
        throw ConfigError("selection method rerank_mbr requires rf_metric");
      }
      MetricSpec rf =
          cfg.resolve_metric(*sel.rf_metric, MetricMode::reference_free);
      MetricSpec utility =
          cfg.resolve_metric(sel.utility_metric, MetricMode::pairwise_utility);
      std::vector<double> scores = reference_free_scores(rf, active, source, ctx);
      if (utility.source == MetricSource::remote) {
        // Keep the batched path for remote utilities: restrict by hand.
        std::vector<size_t> kept =
            rank_with_tie_rule(scores, rf.direction, active, m);
        std::sort(kept.begin(), kept.end());
        HypothesisSet sub;
        sub.input_id = active.input_id;
        for (size_t idx : kept) sub.candidates.push_back(active.candidates[idx]);
        UtilityMatrix matrix =
            utility_matrix(sub, utility, source, ctx, sel.include_self);
        SelectionResult inner = mbr_select(matrix, sub);
        SelectionResult result;
        result.method = SelectionMethod::rerank_mbr;
        result.winner_index = kept[inner.winner_index];
        result.tie_broken = inner.tie_broken;
        result.expected_utilities = scores;
        for (size_t s = 0; s < kept.size(); ++s) {
          result.expected_utilities[kept[s]] = inner.expected_utilities[s];
        }
        return result;
      }
      return rerank_then_mbr(active, scores, rf.direction,
                             make_pairwise_fn(utility, ctx), utility.name,
                             sel.include_self, m);
    }
    case SelectionMethod::multi_turn_mbr: {
      MetricSpec utility =
          cfg.resolve_metric(sel.utility_metric, MetricMode::pairwise_utility);
      UtilityMatrix matrix =
          utility_matrix(active, utility, source, ctx, sel.include_self);
      return multi_turn_mbr(matrix, active, m);
    }
  }
  throw ConfigError("unknown selection method");
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg, const std::string& inputs_path,
                 const std::string& prompts_path, const std::string& out_path) {
  std::vector<TaskInput> inputs = load_inputs(inputs_path);
  Backend backend = cfg.make_backend();
  PromptBank bank;
  if (!prompts_path.empty()) {
    bank = load_prompt_bank(prompts_path);
  } else if (backend.kind == BackendKind::sim) {
    bank = make_bank(backend.sim->prompt_bank());
    // A fresh sim bank carries uniform usage weights so that sampling-based
    // strategies work out of the box.
    double w = 1.0 / static_cast<double>(bank.size());
    for (Prompt& p : bank.prompts) p.weight = w;
  } else {
    throw ConfigError("generate: --prompts is required for this backend");
  }
  std::vector<Prompt> entries = resolve_prompt_entries(cfg, bank);

  SamplingParams params = cfg.sampling;
  params.seed = generation_seed(cfg);
  params.validate();
  const size_t samples = static_cast<size_t>(params.n_per_prompt);

  // Resume support: count rows already present per (input, prompt).
  std::unordered_map<std::string, size_t> existing;
  bool resuming = std::filesystem::exists(out_path);
  if (resuming) {
    for (const Candidate& c : load_candidates(out_path)) {
      ++existing[c.input_id + '\x1f' + c.prompt_id];
    }
  }

  JsonlWriter writer(out_path, /*append=*/resuming);
  json failed = json::array();
  size_t unwritten = 0;

  for (const TaskInput& input : inputs) {
    struct Slot {
      Candidate candidate;
      std::string error;
      bool skip = false;
      bool failed = false;
    };
    const size_t total = entries.size() * samples;
    std::vector<Slot> slots(total);

    std::unordered_map<std::string, size_t> consumed;
    for (size_t idx = 0; idx < total; ++idx) {
      const Prompt& prompt = entries[idx / samples];
      size_t& used = consumed[input.id + '\x1f' + prompt.id];
      auto have = existing.find(input.id + '\x1f' + prompt.id);
      if (have != existing.end() && used < have->second) {
        ++used;
        slots[idx].skip = true;
        if (backend.kind == BackendKind::replay) {
          backend.replay->take(input.id, prompt.id);  // keep the cursor aligned
        }
      }
    }

    auto produce = [&](size_t idx) {
      if (slots[idx].skip) return;
      size_t entry = idx / samples;
      size_t sample = idx % samples;
      try {
        slots[idx].candidate = generate_one(backend, input, entries[entry],
                                            entry, sample, params);
      } catch (const std::exception& e) {
        slots[idx].failed = true;
        slots[idx].error = e.what();
      }
    };
    if (backend.kind == BackendKind::http) {
      parallel_for(total, cfg.concurrency, produce);
    } else {
      for (size_t idx = 0; idx < total; ++idx) produce(idx);
    }

    // Only the failure-free prefix is written, so the per-(input, prompt)
    // row counts in the file always describe a plan prefix and resuming
    // stays sound.
    size_t first_failure = total;
    for (size_t idx = 0; idx < total; ++idx) {
      if (slots[idx].failed) {
        first_failure = idx;
        break;
      }
    }
    for (size_t idx = 0; idx < first_failure; ++idx) {
      if (!slots[idx].skip) {
        writer.write(candidate_to_json(slots[idx].candidate));
      }
    }
    for (size_t idx = first_failure; idx < total; ++idx) {
      if (slots[idx].skip) continue;
      if (slots[idx].failed) {
        failed.push_back(json{{"input_id", input.id},
                              {"prompt_id", entries[idx / samples].id},
                              {"entry", idx / samples},
                              {"sample", idx % samples},
                              {"reason", slots[idx].error}});
      } else {
        ++unwritten;
      }
    }
    writer.flush();
  }

  if (!failed.empty()) {
    write_error_json("partial",
                     std::to_string(failed.size()) +
                         " generation request(s) failed; " +
                         std::to_string(unwritten) +
                         " completed row(s) withheld to keep the output "
                         "resumable",
                     json{{"failed", failed}, {"unwritten_rows", unwritten}});
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

int cmd_decode(const RunConfig& cfg, const std::string& candidates_path,
               const std::string& out_path,
               const std::optional<std::string>& inputs_path) {
  std::vector<Candidate> all = load_candidates(candidates_path);
  std::vector<HypothesisSet> sets = group_by_input(all);

  std::vector<TaskInput> inputs;
  std::unordered_map<std::string, const TaskInput*> inputs_by_id;
  if (inputs_path) {
    inputs = load_inputs(*inputs_path);
    for (const TaskInput& input : inputs) inputs_by_id[input.id] = &input;
  }

  ScoringContext ctx = cfg.scoring_context();
  const std::string method = to_string(cfg.selection.method);

  JsonlWriter writer(out_path);
  json failures = json::array();
  for (const HypothesisSet& set : sets) {
    SelectionRow row;
    row.input_id = set.input_id;
    row.method = method;
    try {
      HypothesisSet filtered =
          filter_candidates(set, cfg.task.kind, cfg.task.compile_hook);
      std::vector<size_t> original = filtered.active_indices();
      HypothesisSet active = filtered.active_subset();
      SelectionResult result = run_selection(
          cfg, ctx, active, source_or_empty(inputs_by_id, set.input_id));
      row.winner_index = original[result.winner_index];
      row.winner_text = active.candidates[result.winner_index].text;
      row.expected_utilities = result.expected_utilities;
      row.tie_broken = result.tie_broken;
    } catch (const EmptyHypothesisError& e) {
      row.error = e.what();
      failures.push_back(json{{"input_id", set.input_id}, {"reason", e.what()}});
    }
    writer.write(selection_row_to_json(row));
  }
  writer.flush();

  if (!failures.empty()) {
    write_error_json("partial",
                     std::to_string(failures.size()) +
                         " input(s) had no selectable candidates",
                     json{{"failed", failures}});
    return kExitPartial;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// usage
// ---------------------------------------------------------------------------

int cmd_usage(const RunConfig& cfg, const std::string& inputs_path,
              const std::string& prompts_path, const std::string& out_path,
              UsageMode mode) {
  std::vector<TaskInput> dataset = load_inputs(inputs_path);
  PromptBank bank = load_prompt_bank(prompts_path);
  auto [train, test] = holdout_split(
      dataset, cfg.split.fraction, derive_seed(cfg.seed, "split", cfg.split.seed));

  Backend backend = cfg.make_backend();
  UsageEstimate estimate = estimate_usage(
      train, bank, backend, cfg.sampling, cfg.primary_eval_metric(), mode,
      cfg.task.kind, cfg.scoring_context(), derive_seed(cfg.seed, "usage"));

  save_prompt_bank(estimate.apply_weights(bank), out_path);

  json summary = estimate.to_json();
  summary["train_inputs"] = train.size();
  summary["test_inputs"] = test.size();
  summary["weights_written_to"] = out_path;
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// significance
// ---------------------------------------------------------------------------

namespace {

std::vector<SelectionRow> load_selection_rows(const std::string& path) {
  std::vector<SelectionRow> rows;
  for_each_jsonl(path, [&rows](const json& obj, size_t) {
    rows.push_back(selection_row_from_json(obj));
  });
  return rows;
}

}  // namespace

int cmd_significance(const RunConfig& cfg, const std::string& selections_a,
                     const std::string& selections_b,
                     const std::string& inputs_path, int iterations,
                     const std::optional<std::string>& out_path) {
  std::vector<TaskInput> inputs = load_inputs(inputs_path);
  std::unordered_map<std::string, std::string> winners_a;
  std::unordered_map<std::string, std::string> winners_b;
  for (const SelectionRow& row : load_selection_rows(selections_a)) {
    if (!row.error) winners_a[row.input_id] = row.winner_text;
  }
  for (const SelectionRow& row : load_selection_rows(selections_b)) {
    if (!row.error) winners_b[row.input_id] = row.winner_text;
  }

  MetricSpec metric = cfg.primary_eval_metric();
  ScoringContext ctx = cfg.scoring_context();
  std::vector<EvalItem> items_a;
  std::vector<EvalItem> items_b;
  for (const TaskInput& input : inputs) {
    auto a = winners_a.find(input.id);
    auto b = winners_b.find(input.id);
    if (a == winners_a.end() || b == winners_b.end()) continue;
    items_a.push_back(EvalItem{&input, a->second});
    items_b.push_back(EvalItem{&input, b->second});
  }
  if (items_a.size() < 2) {
    throw DataError("significance: fewer than 2 inputs present in both files");
  }
  std::vector<double> scores_a = eval_candidates(metric, items_a, ctx);
  std::vector<double> scores_b = eval_candidates(metric, items_b, ctx);
  SignificanceResult result = bootstrap_significance(
      scores_a, scores_b, iterations, derive_seed(cfg.seed, "significance"));

  json out = result.to_json();
  out["metric"] = metric.name;
  out["n_pairs"] = items_a.size();
  std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (out_path) {
    std::ofstream f(*out_path, std::ios::binary);
    if (!f) throw DataError("cannot open " + *out_path + " for writing");
    f << text;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& args) {
  if (cfg.backend.kind != BackendKind::sim) {
    throw ConfigError("simulate requires a sim backend");
  }
  Backend backend = cfg.make_backend();
  const SimConfig& sim = *backend.sim;
  if (args.n_prompts > sim.offsets.size()) {
    throw ConfigError("simulate: n_prompts exceeds the sim config's offsets");
  }
  std::vector<uint64_t> seeds;
  seeds.reserve(args.n_seeds);
  for (size_t i = 0; i < args.n_seeds; ++i) {
    seeds.push_back(derive_seed(cfg.seed, "sim_seed", static_cast<uint64_t>(i)));
  }
  SimStudyReport report = sim_study(sim, args.n_prompts, args.set_size,
                                    args.temperatures, seeds);

  std::filesystem::create_directories(cfg.report.out_dir);
  const std::string json_path = cfg.report.out_dir + "/sim_report.json";
  std::ofstream jf(json_path, std::ios::binary);
  if (!jf) throw DataError("cannot open " + json_path + " for writing");
  jf << report.to_json().dump(2) << "\n";

  const std::string csv_path = cfg.report.out_dir + "/sim_report.csv";
  std::ofstream cf(csv_path, std::ios::binary);
  if (!cf) throw DataError("cannot open " + csv_path + " for writing");
  cf << "temperature,mean_eval_single,mean_eval_multi,p_value,"
        "diversity_single,diversity_multi\n";
  char line[256];
  for (const SimStudyRow& row : report.rows) {
    std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  row.temperature, row.mean_eval_single, row.mean_eval_multi,
                  row.significance.p_value, row.diversity_single,
                  row.diversity_multi);
    cf << line;
  }
  std::cout << "wrote " << json_path << " and " << csv_path << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// paraphrase
// ---------------------------------------------------------------------------

int cmd_paraphrase(const RunConfig& cfg, const std::string& prompts_path,
                   size_t count, const std::string& out_path,
                   const std::optional<std::string>& template_path) {
  if (cfg.backend.kind != BackendKind::http) {
    throw ConfigError("paraphrase requires an http backend");
  }
  std::string tmpl = cfg.paraphrase_template;
  if (template_path) {
    std::ifstream f(*template_path, std::ios::binary);
    if (!f) throw DataError("cannot open template " + *template_path);
    tmpl.assign(std::istreambuf_iterator<char>(f),
                std::istreambuf_iterator<char>());
  }
  if (tmpl.empty()) {
    throw ConfigError(
        "paraphrase needs a template (config paraphrase_template or "
        "--template-file)");
  }
  PromptBank seeds = load_prompt_bank(prompts_path);
  HttpBackendConfig http = cfg.backend.http;
  http.concurrency = cfg.concurrency;

  ParaphraseReport report;
  std::vector<Prompt> produced =
      paraphrase_prompts(http, seeds.prompts, tmpl, count, cfg.sampling, &report);
  save_prompt_bank(make_bank(produced), out_path);

  std::cout << json{{"requested", report.requested},
                    {"produced", report.produced},
                    {"skipped_empty", report.skipped_empty},
                    {"skipped_duplicate", report.skipped_duplicate},
                    {"out", out_path}}
                   .dump(2)
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// select-prompts
// ---------------------------------------------------------------------------

SelectPromptsOp select_prompts_op_from_string(const std::string& s) {
  if (s == "top_p") return SelectPromptsOp::top_p;
  if (s == "sample") return SelectPromptsOp::sample;
  if (s == "select") return SelectPromptsOp::select;
  throw ConfigError("unknown select-prompts op: " + s);
}

int cmd_select_prompts(const RunConfig& cfg, const std::string& prompts_path,
                       SelectPromptsOp op, const std::string& out_path) {
  PromptBank bank = load_prompt_bank(prompts_path);
  const PromptStrategySection& strategy = cfg.prompt_strategy;
  switch (op) {
    case SelectPromptsOp::top_p: {
      if (!strategy.p) {
        throw ConfigError("select-prompts top_p requires prompt_strategy.p");
      }
      save_prompt_bank(top_p_prompt_set(bank, *strategy.p), out_path);
      break;
    }
    case SelectPromptsOp::sample: {
      // An entry list, not a bank: ids repeat across draws.
      std::vector<Prompt> draws =
          sample_prompts(bank, strategy.k, prompt_strategy_seed(cfg));
      JsonlWriter writer(out_path);
      for (const Prompt& p : draws) writer.write(prompt_to_json(p));
      writer.flush();
      break;
    }
    case SelectPromptsOp::select: {
      save_prompt_bank(select_prompts(bank, strategy.k, strategy.strategy,
                                      prompt_strategy_seed(cfg)),
                       out_path);
      break;
    }
  }
  return kExitOk;
}

}  // namespace mpmbr
