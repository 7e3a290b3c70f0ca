#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mpmbr/task.hpp"

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("mpmbr_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline mpmbr::Candidate make_candidate(const std::string& text,
                                       std::optional<double> logprob = {},
                                       const std::string& prompt_id = "p0",
                                       const std::string& input_id = "x0") {
  mpmbr::Candidate c;
  c.input_id = input_id;
  c.prompt_id = prompt_id;
  c.text = text;
  c.logprob = logprob;
  return c;
}

inline mpmbr::HypothesisSet make_hset(const std::vector<std::string>& texts,
                                      const std::string& input_id = "x0") {
  mpmbr::HypothesisSet hset;
  hset.input_id = input_id;
  for (const std::string& t : texts) {
    hset.candidates.push_back(make_candidate(t, {}, "p0", input_id));
  }
  return hset;
}
