#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpmbr/jsonl.hpp"

namespace mpmbr {

enum class PromptKind { instruction, fewshot };

const char* to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

// One prompt in the bank: an instruction or a serialized few-shot block,
// optionally carrying an embedding, a usage weight and a dataset-level
// performance score.
struct Prompt {
  std::string id;
  std::string text;
  PromptKind kind = PromptKind::instruction;
  std::optional<std::vector<double>> embedding;
  std::optional<double> weight;  // usage probability, in [0, 1]
  std::optional<double> perf;
  json extra = json::object();  // unknown jsonl keys, preserved on round-trip
};

Prompt prompt_from_json(const json& obj);
json prompt_to_json(const Prompt& prompt);

// Ordered collection of prompts. File order is the canonical tie-break
// order for every selection operation.
struct PromptBank {
  std::vector<Prompt> prompts;
  std::optional<size_t> embedding_dim;

  size_t size() const { return prompts.size(); }
  bool empty() const { return prompts.empty(); }
  bool has_weights() const;
  bool has_embeddings() const;
  bool has_perf() const;

  // Enforces: non-empty unique ids; consistent finite embeddings; weights
  // all-or-none, each in [0,1], summing to 1 within 1e-9.
  void validate() const;
};

PromptBank make_bank(std::vector<Prompt> prompts);
PromptBank load_prompt_bank(const std::string& path);
void save_prompt_bank(const PromptBank& bank, const std::string& path);

}  // namespace mpmbr
