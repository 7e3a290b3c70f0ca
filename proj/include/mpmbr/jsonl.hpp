#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mpmbr {

using json = nlohmann::json;

// Reads a whole JSONL file; blank lines are skipped. Parse failures raise
// DataError with the file name and 1-based line number.
std::vector<json> read_jsonl(const std::string& path);

// Streaming variant for large files.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, size_t line)>& fn);

// Append-capable line writer. Lines are dumped compactly (no spaces) with
// keys in sorted order, one object per line, LF-terminated.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path, bool append = false);
  void write(const json& obj);
  void flush();

 private:
  std::ofstream out_;
  std::string path_;
};

void write_jsonl(const std::string& path, const std::vector<json>& rows);

std::string dump_jsonl_line(const json& obj);

}  // namespace mpmbr
