// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace relann {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (bad JSON, missing required field, wrong type).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The endpoint could not be reached or kept failing after all retries.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts, int last_status)
      : Error(what), attempts_(attempts), last_status_(last_status) {}

  int attempts() const noexcept { return attempts_; }
  // HTTP status of the final attempt, 0 when no response was received.
  int last_status() const noexcept { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

// The endpoint does not provide a feature the configured mode needs
// (token log-probabilities for Tok calibration).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// An LLM response did not follow the requested answer format.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Token-level confidence could not be located in a response.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// A metric is mathematically undefined for the given input
// (single-class AUROC, no positives for AP, every query excluded).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// A record from the test split reached the training-data exporter.
class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace relann
