#include "mpmbr/remote.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "mpmbr/concurrency.hpp"
#include "mpmbr/errors.hpp"
#include "mpmbr/jsonl.hpp"

namespace mpmbr {

namespace {

struct SplitUrl {
  std::string host;  // scheme://host:port
  std::string path;  // leading path, may be empty
};

SplitUrl split_url(const std::string& url) {
  size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("remote endpoint must include a scheme: " + url);
  }
  size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

}  // namespace

std::vector<double> remote_score(const std::string& endpoint,
                                 const std::string& metric,
                                 const std::vector<RemoteScoreItem>& items,
                                 const RemoteOptions& options) {
  if (items.empty()) return {};
  if (options.batch_limit == 0) {
    throw ConfigError("remote_score: batch_limit must be positive");
  }
  SplitUrl url = split_url(endpoint);
  const std::string score_path = url.path + "/score";
  const size_t n_batches =
      (items.size() + options.batch_limit - 1) / options.batch_limit;

  std::vector<double> scores(items.size());
  parallel_for(n_batches, options.concurrency, [&](size_t batch) {
    const size_t begin = batch * options.batch_limit;
    const size_t end = std::min(items.size(), begin + options.batch_limit);

    json body = json::object();
    body["metric"] = metric;
    json jitems = json::array();
    for (size_t i = begin; i < end; ++i) {
      jitems.push_back({{"source", items[i].source},
                        {"candidate", items[i].candidate},
                        {"references", items[i].references}});
    }
    body["items"] = std::move(jitems);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            options.retry_base_ms * (1 << (attempt - 1))));
      }
      httplib::Client client(url.host);
      client.set_connection_timeout(0, options.timeout_ms * 1000);
      client.set_read_timeout(options.timeout_ms / 1000,
                              (options.timeout_ms % 1000) * 1000);
      auto res = client.Post(score_path, payload, "application/json");
      if (!res) {
        last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("scores") ||
          !parsed["scores"].is_array()) {
        last_error = "malformed response body";
        continue;
      }
      const json& got = parsed["scores"];
      if (got.size() != end - begin) {
        throw ProtocolError("remote_score: endpoint returned " +
                            std::to_string(got.size()) + " scores for " +
                            std::to_string(end - begin) + " items");
      }
      for (size_t i = begin; i < end; ++i) {
        double v = got[i - begin].get<double>();
        if (!std::isfinite(v)) {
          throw ProtocolError("remote_score: non-finite score at item " +
                              std::to_string(i));
        }
        scores[i] = v;
      }
      return;
    }
    throw TransportError("remote_score: batch " + std::to_string(batch) +
                         " [" + std::to_string(begin) + "," +
                         std::to_string(end) + ") against " + endpoint +
                         " failed after " +
                         std::to_string(options.max_retries + 1) +
                         " attempts: " + last_error);
  });
  return scores;
}

}  // namespace mpmbr
