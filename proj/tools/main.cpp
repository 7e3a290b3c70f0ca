// mpmbr: multi-prompt MBR decoding engine.
//
// Subcommands: generate, decode, report, usage, significance, curve,
// simulate, paraphrase, select-prompts. One JSON config drives a run;
// --seed / --concurrency / --out override individual keys.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpmbr/commands.hpp"
#include "mpmbr/errors.hpp"

namespace {

using mpmbr::json;

void print_error(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump()
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-prompt MBR decoding engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<uint64_t> seed_flag;
  std::optional<int> concurrency_flag;
  std::optional<std::string> out_dir_flag;
  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--seed", seed_flag, "override the top-level seed");
  app.add_option("--concurrency", concurrency_flag,
                 "override the request fan-out limit");
  app.add_option("--out", out_dir_flag, "override report.out_dir");

  // generate
  auto* generate = app.add_subcommand("generate", "sample candidates");
  std::string gen_inputs, gen_prompts, gen_out = "candidates.jsonl";
  generate->add_option("--inputs", gen_inputs, "inputs.jsonl")->required();
  generate->add_option("--prompts", gen_prompts,
                       "prompts.jsonl (optional for the sim backend)");
  generate->add_option("--out-file", gen_out, "candidates.jsonl to write");

  // decode
  auto* decode = app.add_subcommand("decode", "select outputs from candidates");
  std::string dec_candidates, dec_out = "selections.jsonl";
  std::optional<std::string> dec_inputs;
  decode->add_option("--candidates", dec_candidates, "candidates.jsonl")->required();
  decode->add_option("--out-file", dec_out, "selections.jsonl to write");
  decode->add_option("--inputs", dec_inputs,
                     "inputs.jsonl (source strings for remote metrics)");

  // report
  auto* report = app.add_subcommand("report", "evaluate selections");
  std::string rep_selections, rep_inputs;
  std::optional<std::string> rep_candidates;
  report->add_option("--selections", rep_selections, "selections.jsonl")->required();
  report->add_option("--inputs", rep_inputs, "inputs.jsonl")->required();
  report->add_option("--candidates", rep_candidates,
                     "candidates.jsonl (enables oracle/usage/diversity)");

  // usage
  auto* usage = app.add_subcommand("usage", "estimate prompt usage weights");
  std::string use_inputs, use_prompts, use_out = "prompts_weighted.jsonl";
  std::string use_mode = "reference_scored";
  usage->add_option("--inputs", use_inputs, "inputs.jsonl")->required();
  usage->add_option("--prompts", use_prompts, "prompts.jsonl")->required();
  usage->add_option("--out-file", use_out, "weighted prompts.jsonl to write");
  usage->add_option("--mode", use_mode, "reference_scored | mbr_selected");

  // significance
  auto* significance =
      app.add_subcommand("significance", "paired bootstrap test");
  std::string sig_a, sig_b, sig_inputs;
  int sig_iterations = 1000;
  std::optional<std::string> sig_out;
  significance->add_option("--a", sig_a, "selections.jsonl (system A)")->required();
  significance->add_option("--b", sig_b, "selections.jsonl (system B)")->required();
  significance->add_option("--inputs", sig_inputs, "inputs.jsonl")->required();
  significance->add_option("--iterations", sig_iterations, "bootstrap iterations");
  significance->add_option("--out-file", sig_out, "also write the result here");

  // curve
  auto* curve = app.add_subcommand("curve", "candidate-set-size curve");
  std::string cur_candidates, cur_inputs;
  std::vector<int> cur_sizes;
  int cur_iterations = 5;
  curve->add_option("--candidates", cur_candidates, "candidates.jsonl")->required();
  curve->add_option("--inputs", cur_inputs, "inputs.jsonl")->required();
  curve->add_option("--sizes", cur_sizes, "candidate set sizes")
      ->required()
      ->delimiter(',');
  curve->add_option("--iterations", cur_iterations, "bootstrap iterations");

  // simulate
  auto* simulate =
      app.add_subcommand("simulate", "synthetic multi- vs single-prompt study");
  mpmbr::SimulateArgs sim_args;
  simulate->add_option("--prompts", sim_args.n_prompts, "number of prompt modes");
  simulate->add_option("--set-size", sim_args.set_size, "candidates per arm");
  simulate->add_option("--temperatures", sim_args.temperatures, "temperatures")
      ->delimiter(',');
  simulate->add_option("--seeds", sim_args.n_seeds, "number of seeded repeats");

  // paraphrase
  auto* paraphrase =
      app.add_subcommand("paraphrase", "write new prompts with an LLM");
  std::string par_prompts, par_out = "prompts_generated.jsonl";
  size_t par_count = 10;
  std::optional<std::string> par_template;
  paraphrase->add_option("--prompts", par_prompts, "seed prompts.jsonl")->required();
  paraphrase->add_option("--count", par_count, "prompts to write");
  paraphrase->add_option("--out-file", par_out, "prompts.jsonl to write");
  paraphrase->add_option("--template-file", par_template,
                         "instruction template containing {example_prompt}");

  // select-prompts
  auto* select =
      app.add_subcommand("select-prompts", "top-p / sample / select a bank");
  std::string sp_prompts, sp_out = "prompts_selected.jsonl", sp_op = "select";
  select->add_option("--prompts", sp_prompts, "prompts.jsonl")->required();
  select->add_option("--op", sp_op, "top_p | sample | select");
  select->add_option("--out-file", sp_out, "prompts.jsonl to write");

  CLI11_PARSE(app, argc, argv);

  try {
    mpmbr::RunConfig cfg = config_path.empty()
                               ? mpmbr::RunConfig::defaults()
                               : mpmbr::RunConfig::load(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (concurrency_flag) cfg.concurrency = *concurrency_flag;
    if (out_dir_flag) cfg.report.out_dir = *out_dir_flag;
    cfg.validate();

    if (generate->parsed()) {
      return mpmbr::cmd_generate(cfg, gen_inputs, gen_prompts, gen_out);
    }
    if (decode->parsed()) {
      return mpmbr::cmd_decode(cfg, dec_candidates, dec_out, dec_inputs);
    }
    if (report->parsed()) {
      return mpmbr::cmd_report(cfg, rep_selections, rep_inputs, rep_candidates);
    }
    if (usage->parsed()) {
      return mpmbr::cmd_usage(cfg, use_inputs, use_prompts, use_out,
                              mpmbr::usage_mode_from_string(use_mode));
    }
    if (significance->parsed()) {
      return mpmbr::cmd_significance(cfg, sig_a, sig_b, sig_inputs,
                                     sig_iterations, sig_out);
    }
    if (curve->parsed()) {
      return mpmbr::cmd_curve(cfg, cur_candidates, cur_inputs, cur_sizes,
                              cur_iterations);
    }
    if (simulate->parsed()) {
      return mpmbr::cmd_simulate(cfg, sim_args);
    }
    if (paraphrase->parsed()) {
      return mpmbr::cmd_paraphrase(cfg, par_prompts, par_count, par_out,
                                   par_template);
    }
    if (select->parsed()) {
      return mpmbr::cmd_select_prompts(
          cfg, sp_prompts, mpmbr::select_prompts_op_from_string(sp_op), sp_out);
    }
    print_error("config", "no subcommand dispatched");
    return mpmbr::kExitError;
  } catch (const mpmbr::ConfigError& e) {
    print_error("config", e.what());
  } catch (const mpmbr::EmptyHypothesisError& e) {
    print_error("data", e.what());
  } catch (const mpmbr::DataError& e) {
    print_error("data", e.what());
  } catch (const mpmbr::DomainError& e) {
    print_error("domain", e.what());
  } catch (const mpmbr::TransportError& e) {
    print_error("transport", e.what());
  } catch (const mpmbr::ProtocolError& e) {
    print_error("protocol", e.what());
  } catch (const std::exception& e) {
    print_error("internal", e.what());
  }
  return mpmbr::kExitError;
}
