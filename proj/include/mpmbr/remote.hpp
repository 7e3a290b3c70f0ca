#pragma once

#include <string>
#include <vector>

namespace mpmbr {

struct RemoteScoreItem {
  std::string source;
  std::string candidate;
  std::vector<std::string> references;
};

struct RemoteOptions {
  size_t batch_limit = 100;
  int timeout_ms = 30000;
  int max_retries = 3;
  int retry_base_ms = 100;
  int concurrency = 1;
};

// Remote scoring protocol: POST {endpoint}/score with
//   {"metric": str, "items": [{"source", "candidate", "references"}]}
// expecting {"scores": [number]}. Items are split into batches of at most
// batch_limit; scores come back order-preserving. Transport failures and
// malformed responses are retried with exponential backoff and surface as
// TransportError once retries are exhausted; a scores/items count mismatch
// is a ProtocolError.
std::vector<double> remote_score(const std::string& endpoint,
                                 const std::string& metric,
                                 const std::vector<RemoteScoreItem>& items,
                                 const RemoteOptions& options = {});

}  // namespace mpmbr
