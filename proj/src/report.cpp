#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "mpmbr/commands.hpp"
#include "mpmbr/errors.hpp"
#include "mpmbr/rng.hpp"
#include "mpmbr/svg.hpp"

namespace mpmbr {

namespace {

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  bool needs = s.find_first_of(",\"\n") != std::string::npos;
  if (!needs) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for writing");
  return f;
}

std::vector<SelectionRow> read_selection_rows(const std::string& path) {
  std::vector<SelectionRow> rows;
  for_each_jsonl(path, [&rows](const json& obj, size_t) {
    rows.push_back(selection_row_from_json(obj));
  });
  return rows;
}

struct MeanAccumulator {
  double sum = 0.0;
  size_t count = 0;
  void add(double v) {
    sum += v;
    ++count;
  }
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
};

}  // namespace

int cmd_report(const RunConfig& cfg, const std::string& selections_path,
               const std::string& inputs_path,
               const std::optional<std::string>& candidates_path) {
  std::vector<SelectionRow> all_rows = read_selection_rows(selections_path);
  std::vector<TaskInput> inputs = load_inputs(inputs_path);
  std::unordered_map<std::string, const TaskInput*> inputs_by_id;
  for (const TaskInput& input : inputs) inputs_by_id[input.id] = &input;

  std::vector<SelectionRow> rows;
  size_t failed_rows = 0;
  for (SelectionRow& row : all_rows) {
    if (row.error) {
      ++failed_rows;
      continue;
    }
    if (!inputs_by_id.count(row.input_id)) {
      throw DataError("report: selection references unknown input '" +
                      row.input_id + "'");
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> methods;
  for (const SelectionRow& row : rows) {
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) {
      methods.push_back(row.method);
    }
  }

  ScoringContext ctx = cfg.scoring_context();

  // Decide which configured metrics are usable on this data.
  std::vector<MetricSpec> eval_metrics;
  json skipped_metrics = json::array();
  for (const MetricSpec& metric : cfg.metrics) {
    if (metric.mode == MetricMode::pairwise_utility) {
      skipped_metrics.push_back(
          {{"name", metric.name}, {"reason", "pairwise utility, not an eval metric"}});
      continue;
    }
    if (metric.mode == MetricMode::reference_based_eval) {
      bool missing = false;
      for (const SelectionRow& row : rows) {
        if (inputs_by_id.at(row.input_id)->references.empty()) {
          missing = true;
          break;
        }
      }
      if (missing) {
        std::cerr << "[mpmbr] warning: skipping metric '" << metric.name
                  << "': some inputs have no references\n";
        skipped_metrics.push_back(
            {{"name", metric.name}, {"reason", "missing references"}});
        continue;
      }
    }
    eval_metrics.push_back(metric);
  }

  // Score every selection row under every usable metric.
  // scores[m][r] belongs to (metric m, row r).
  std::vector<std::vector<double>> scores(eval_metrics.size());
  for (size_t m = 0; m < eval_metrics.size(); ++m) {
    const MetricSpec& metric = eval_metrics[m];
    if (metric.mode == MetricMode::reference_based_eval) {
      std::vector<EvalItem> items;
      items.reserve(rows.size());
      for (const SelectionRow& row : rows) {
        items.push_back(EvalItem{inputs_by_id.at(row.input_id), row.winner_text});
      }
      scores[m] = eval_candidates(metric, items, ctx);
    } else {  // reference_free over the winner text
      scores[m].reserve(rows.size());
      for (const SelectionRow& row : rows) {
        HypothesisSet one;
        one.input_id = row.input_id;
        Candidate c;
        c.input_id = row.input_id;
        c.text = row.winner_text;
        one.candidates.push_back(std::move(c));
        scores[m].push_back(
            reference_free_scores(metric, one,
                                  inputs_by_id.at(row.input_id)->source, ctx)
                .front());
      }
    }
  }

  // Optional candidate-level views: oracle, usage, diversity.
  bool have_candidates = candidates_path.has_value();
  std::vector<HypothesisSet> candidate_sets;
  std::unordered_map<std::string, size_t> set_by_input;
  if (have_candidates) {
    candidate_sets = group_by_input(load_candidates(*candidates_path));
    for (size_t i = 0; i < candidate_sets.size(); ++i) {
      set_by_input[candidate_sets[i].input_id] = i;
    }
  }

  std::filesystem::create_directories(cfg.report.out_dir);

  // scores.csv: one row per input x method x metric.
  {
    std::ofstream f = open_out(cfg.report.out_dir + "/scores.csv");
    f << "input_id,method,metric,value\n";
    for (size_t r = 0; r < rows.size(); ++r) {
      for (size_t m = 0; m < eval_metrics.size(); ++m) {
        f << csv_quote(rows[r].input_id) << "," << rows[r].method << ","
          << eval_metrics[m].name << "," << csv_number(scores[m][r]) << "\n";
      }
    }
  }

  json report = json::object();
  report["n_selection_rows"] = rows.size();
  report["n_failed_rows"] = failed_rows;
  report["methods"] = methods;
  report["skipped_metrics"] = skipped_metrics;
  {
    json jscores = json::array();
    for (size_t r = 0; r < rows.size(); ++r) {
      for (size_t m = 0; m < eval_metrics.size(); ++m) {
        jscores.push_back({{"input_id", rows[r].input_id},
                           {"method", rows[r].method},
                           {"metric", eval_metrics[m].name},
                           {"value", scores[m][r]}});
      }
    }
    report["scores"] = std::move(jscores);

    json aggregates = json::array();
    for (const std::string& method : methods) {
      for (size_t m = 0; m < eval_metrics.size(); ++m) {
        MeanAccumulator acc;
        for (size_t r = 0; r < rows.size(); ++r) {
          if (rows[r].method == method) acc.add(scores[m][r]);
        }
        aggregates.push_back({{"method", method},
                              {"metric", eval_metrics[m].name},
                              {"mean", acc.mean()},
                              {"count", acc.count}});
      }
    }
    report["aggregates"] = std::move(aggregates);
  }

  if (have_candidates) {
    // Oracle: best achievable per input for each reference-based metric,
    // over the same filtered pool decode selects from.
    json oracle_rows = json::array();
    json oracle_means = json::array();
    std::ofstream of = open_out(cfg.report.out_dir + "/oracle.csv");
    of << "input_id,metric,value\n";
    for (size_t m = 0; m < eval_metrics.size(); ++m) {
      const MetricSpec& metric = eval_metrics[m];
      if (metric.mode != MetricMode::reference_based_eval) continue;
      MeanAccumulator acc;
      for (const TaskInput& input : inputs) {
        auto it = set_by_input.find(input.id);
        if (it == set_by_input.end()) continue;
        HypothesisSet filtered = filter_candidates(
            candidate_sets[it->second], cfg.task.kind, cfg.task.compile_hook);
        double best = oracle_score(filtered, input, metric, ctx);
        acc.add(best);
        oracle_rows.push_back({{"input_id", input.id},
                               {"metric", metric.name},
                               {"value", best}});
        of << csv_quote(input.id) << "," << metric.name << ","
           << csv_number(best) << "\n";
      }
      oracle_means.push_back({{"metric", metric.name}, {"mean", acc.mean()}});
    }
    report["oracle"] = std::move(oracle_rows);
    report["oracle_mean"] = std::move(oracle_means);

    // Usage distribution: which prompt produced the winning candidate.
    json usage = json::array();
    std::ofstream uf = open_out(cfg.report.out_dir + "/usage.csv");
    uf << "method,prompt_id,wins,weight\n";
    for (const std::string& method : methods) {
      std::vector<std::string> prompt_order;
      std::unordered_map<std::string, double> wins;
      double total = 0.0;
      for (const SelectionRow& row : rows) {
        if (row.method != method) continue;
        auto it = set_by_input.find(row.input_id);
        if (it == set_by_input.end()) continue;
        const HypothesisSet& set = candidate_sets[it->second];
        if (row.winner_index >= set.candidates.size()) {
          throw DataError("report: winner index out of range for input '" +
                          row.input_id + "'");
        }
        const std::string& pid = set.candidates[row.winner_index].prompt_id;
        if (!wins.count(pid)) prompt_order.push_back(pid);
        wins[pid] += 1.0;
        total += 1.0;
      }
      json prompts = json::array();
      std::vector<std::string> labels;
      std::vector<double> weights;
      for (const std::string& pid : prompt_order) {
        double weight = total == 0.0 ? 0.0 : wins[pid] / total;
        prompts.push_back(
            {{"prompt_id", pid}, {"wins", wins[pid]}, {"weight", weight}});
        uf << method << "," << csv_quote(pid) << "," << csv_number(wins[pid])
           << "," << csv_number(weight) << "\n";
        labels.push_back(pid);
        weights.push_back(weight);
      }
      usage.push_back({{"method", method}, {"prompts", std::move(prompts)}});
      if (cfg.report.emit_svg && !weights.empty()) {
        std::ofstream sf =
            open_out(cfg.report.out_dir + "/usage_" + method + ".svg");
        sf << svg_bar_chart("prompt usage (" + method + ")", labels, weights);
      }
    }
    report["usage"] = std::move(usage);

    // Candidate-set diversity.
    json diversity = json::array();
    std::ofstream df = open_out(cfg.report.out_dir + "/diversity.csv");
    df << "input_id,distinct2\n";
    MeanAccumulator dacc;
    for (const TaskInput& input : inputs) {
      auto it = set_by_input.find(input.id);
      if (it == set_by_input.end()) continue;
      HypothesisSet filtered = filter_candidates(
          candidate_sets[it->second], cfg.task.kind, cfg.task.compile_hook);
      double ratio = distinct_bigram_ratio(filtered.active_subset());
      dacc.add(ratio);
      diversity.push_back({{"input_id", input.id}, {"value", ratio}});
      df << csv_quote(input.id) << "," << csv_number(ratio) << "\n";
    }
    report["diversity"] = std::move(diversity);
    report["diversity_mean"] = dacc.mean();
  }

  std::ofstream rf = open_out(cfg.report.out_dir + "/report.json");
  rf << report.dump(2) << "\n";
  std::cout << "wrote " << cfg.report.out_dir << "/report.json ("
            << rows.size() << " selection rows, " << failed_rows
            << " failed)\n";
  return kExitOk;
}

int cmd_curve(const RunConfig& cfg, const std::string& candidates_path,
              const std::string& inputs_path, const std::vector<int>& sizes,
              int iterations) {
  if (sizes.empty()) throw ConfigError("curve: need at least one size");
  std::vector<TaskInput> inputs = load_inputs(inputs_path);
  std::vector<HypothesisSet> sets = group_by_input(load_candidates(candidates_path));
  std::unordered_map<std::string, size_t> set_by_input;
  for (size_t i = 0; i < sets.size(); ++i) set_by_input[sets[i].input_id] = i;

  std::vector<TaskInput> joined_inputs;
  std::vector<HypothesisSet> joined_sets;
  for (const TaskInput& input : inputs) {
    auto it = set_by_input.find(input.id);
    if (it == set_by_input.end()) {
      throw DataError("curve: no candidates for input '" + input.id + "'");
    }
    HypothesisSet filtered = filter_candidates(
        sets[it->second], cfg.task.kind, cfg.task.compile_hook);
    joined_inputs.push_back(input);
    joined_sets.push_back(filtered.active_subset());
  }

  ScoringContext ctx = cfg.scoring_context();
  MetricSpec eval_metric = cfg.primary_eval_metric();

  SizeCurveOptions options;
  options.iterations = iterations;
  options.rng_seed = derive_seed(cfg.seed, "curve");

  std::vector<CurvePoint> points = size_curve(
      joined_inputs, joined_sets, sizes,
      [&](const HypothesisSet& sub) {
        const TaskInput* input = nullptr;
        for (size_t i = 0; i < joined_inputs.size(); ++i) {
          if (joined_inputs[i].id == sub.input_id) {
            input = &joined_inputs[i];
            break;
          }
        }
        return run_selection(cfg, ctx, sub, input ? input->source : "");
      },
      [&](const TaskInput& input, const Candidate& winner) {
        return eval_candidate(eval_metric, input, winner.text, ctx);
      },
      options);

  std::filesystem::create_directories(cfg.report.out_dir);
  const std::string csv_path = cfg.report.out_dir + "/curve.csv";
  std::ofstream f = open_out(csv_path);
  f << "size,mean,ci_low,ci_high\n";
  for (const CurvePoint& p : points) {
    f << p.set_size << "," << csv_number(p.mean_score) << ","
      << csv_number(p.ci_low) << "," << csv_number(p.ci_high) << "\n";
  }
  if (cfg.report.emit_svg) {
    std::vector<SvgSeriesPoint> series;
    for (const CurvePoint& p : points) {
      series.push_back(SvgSeriesPoint{static_cast<double>(p.set_size),
                                      p.mean_score, p.ci_low, p.ci_high});
    }
    std::ofstream sf = open_out(cfg.report.out_dir + "/curve.svg");
    sf << svg_line_chart("score vs candidate set size (" + eval_metric.name + ")",
                         "candidate set size", eval_metric.name, series);
  }
  std::cout << "wrote " << csv_path << "\n";
  return kExitOk;
}

}  // namespace mpmbr
