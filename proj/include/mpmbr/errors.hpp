#pragma once

#include <stdexcept>
#include <string>

namespace mpmbr {

// Error taxonomy shared across the engine. The CLI maps these onto exit
// codes: configuration, data and domain errors exit 1; partial pipeline
// failures exit 2.

// Bad or missing configuration (weights absent, wrong metric mode, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad JSONL, replay miss, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the operation's domain (p out of range, zero vector, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transport failure talking to an HTTP backend, thrown once retries are
// exhausted. Message carries per-request context.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote endpoint answered but violated the scoring protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every candidate for an input was rejected; selection is undefined.
class EmptyHypothesisError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace mpmbr
