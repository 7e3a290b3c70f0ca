#include "mpmbr/prompt.hpp"

#include <cmath>
#include <unordered_set>

#include "mpmbr/errors.hpp"

namespace mpmbr {

const char* to_string(PromptKind kind) {
  return kind == PromptKind::fewshot ? "fewshot" : "instruction";
}

PromptKind prompt_kind_from_string(const std::string& s) {
  if (s == "instruction") return PromptKind::instruction;
  if (s == "fewshot") return PromptKind::fewshot;
  throw DataError("unknown prompt kind: " + s);
}

Prompt prompt_from_json(const json& obj) {
  if (!obj.is_object()) throw DataError("prompt record must be an object");
  Prompt p;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string& key = it.key();
    const json& value = it.value();
    if (key == "id") {
      p.id = value.get<std::string>();
    } else if (key == "text") {
      p.text = value.get<std::string>();
    } else if (key == "kind") {
      p.kind = prompt_kind_from_string(value.get<std::string>());
    } else if (key == "embedding") {
      if (!value.is_null()) p.embedding = value.get<std::vector<double>>();
    } else if (key == "weight") {
      if (!value.is_null()) p.weight = value.get<double>();
    } else if (key == "perf") {
      if (!value.is_null()) p.perf = value.get<double>();
    } else {
      p.extra[key] = value;
    }
  }
  if (p.id.empty()) throw DataError("prompt record missing non-empty id");
  return p;
}

json prompt_to_json(const Prompt& prompt) {
  json obj = json::object();
  obj["id"] = prompt.id;
  obj["text"] = prompt.text;
  obj["kind"] = to_string(prompt.kind);
  if (prompt.embedding) obj["embedding"] = *prompt.embedding;
  if (prompt.weight) obj["weight"] = *prompt.weight;
  if (prompt.perf) obj["perf"] = *prompt.perf;
  for (auto it = prompt.extra.begin(); it != prompt.extra.end(); ++it) {
    obj[it.key()] = it.value();
  }
  return obj;
}

bool PromptBank::has_weights() const {
  if (prompts.empty()) return false;
  for (const Prompt& p : prompts) {
    if (!p.weight) return false;
  }
  return true;
}

bool PromptBank::has_embeddings() const {
  if (prompts.empty()) return false;
  for (const Prompt& p : prompts) {
    if (!p.embedding) return false;
  }
  return true;
}

bool PromptBank::has_perf() const {
  if (prompts.empty()) return false;
  for (const Prompt& p : prompts) {
    if (!p.perf) return false;
  }
  return true;
}

void PromptBank::validate() const {
  std::unordered_set<std::string> ids;
  size_t n_weighted = 0;
  double weight_sum = 0.0;
  std::optional<size_t> dim = embedding_dim;
  for (const Prompt& p : prompts) {
    if (p.id.empty()) throw DataError("prompt with empty id");
    if (!ids.insert(p.id).second) {
      throw DataError("duplicate prompt id: " + p.id);
    }
    if (p.embedding) {
      if (!dim) dim = p.embedding->size();
      if (p.embedding->size() != *dim) {
        throw DataError("prompt " + p.id + ": embedding dimension " +
                        std::to_string(p.embedding->size()) +
                        " != bank dimension " + std::to_string(*dim));
      }
      for (double v : *p.embedding) {
        if (!std::isfinite(v)) {
          throw DataError("prompt " + p.id + ": non-finite embedding entry");
        }
      }
    }
    if (p.weight) {
      if (!std::isfinite(*p.weight) || *p.weight < 0.0 || *p.weight > 1.0) {
        throw DataError("prompt " + p.id + ": weight outside [0,1]");
      }
      ++n_weighted;
      weight_sum += *p.weight;
    }
  }
  if (n_weighted != 0 && n_weighted != prompts.size()) {
    throw DataError("weights must be present on all prompts or none");
  }
  if (n_weighted == prompts.size() && !prompts.empty() &&
      std::abs(weight_sum - 1.0) > 1e-9) {
    throw DataError("prompt weights sum to " + std::to_string(weight_sum) +
                    ", expected 1");
  }
}

PromptBank make_bank(std::vector<Prompt> prompts) {
  PromptBank bank;
  bank.prompts = std::move(prompts);
  for (const Prompt& p : bank.prompts) {
    if (p.embedding) {
      bank.embedding_dim = p.embedding->size();
      break;
    }
  }
  bank.validate();
  return bank;
}

PromptBank load_prompt_bank(const std::string& path) {
  std::vector<Prompt> prompts;
  for_each_jsonl(path, [&prompts, &path](const json& obj, size_t line) {
    try {
      prompts.push_back(prompt_from_json(obj));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return make_bank(std::move(prompts));
}

void save_prompt_bank(const PromptBank& bank, const std::string& path) {
  JsonlWriter writer(path);
  for (const Prompt& p : bank.prompts) writer.write(prompt_to_json(p));
  writer.flush();
}

}  // namespace mpmbr
