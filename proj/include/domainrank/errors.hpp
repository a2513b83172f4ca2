#pragma once

#include <stdexcept>
#include <string>

namespace domainrank {

// Error taxonomy maps onto CLI exit codes: DomainError/ConfigError/IngestError
// exit 1, IoError exit 2.

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched fingerprint lengths.
struct DimensionError : DomainError {
  explicit DimensionError(const std::string& what) : DomainError(what) {}
};

// Bad configuration: schema violation, missing stage artifact, missing field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input row; message names the offending file/row.
struct IngestError : std::runtime_error {
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace domainrank
