#include "mpmbr/jsonl.hpp"

#include "mpmbr/errors.hpp"
#include "mpmbr/text.hpp"

namespace mpmbr {

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> rows;
  for_each_jsonl(path, [&rows](const json& obj, size_t) { rows.push_back(obj); });
  return rows;
}

void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": invalid JSON");
    }
    fn(obj, lineno);
  }
}

JsonlWriter::JsonlWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::binary | std::ios::app
                        : std::ios::binary | std::ios::trunc),
      path_(path) {
  if (!out_) throw DataError("cannot open " + path + " for writing");
}

void JsonlWriter::write(const json& obj) {
  out_ << dump_jsonl_line(obj) << '\n';
  if (!out_) throw DataError("write failed on " + path_);
}

void JsonlWriter::flush() { out_.flush(); }

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  JsonlWriter writer(path);
  for (const json& row : rows) writer.write(row);
  writer.flush();
}

std::string dump_jsonl_line(const json& obj) { return obj.dump(); }

}  // namespace mpmbr
