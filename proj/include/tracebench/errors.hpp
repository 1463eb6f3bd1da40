// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: 2026 The tracebench Authors
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tracebench {

// Malformed input document. `byte_offset` points at the offending byte when
// the underlying reader can report one.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t byte_offset = 0)
      : std::runtime_error(std::move(message)), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Structurally valid document that violates the schema. `field_path` is the
// dotted path of the offending field.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(std::string field_path, std::string detail = "")
      : std::runtime_error("schema violation at '" + field_path + "'" +
                           (detail.empty() ? "" : ": " + detail)),
        field_path_(std::move(field_path)) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

// Trace document contained no device kernel activity.
class EmptyTraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input files mix trace dialects.
class DialectMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric tool could not produce a value for the given inputs. The reason
// string is short and stable (e.g. "NoStepWindows") so suites can report it.
class ToolError : public std::runtime_error {
 public:
  explicit ToolError(std::string reason, std::string detail = "")
      : std::runtime_error(detail.empty() ? reason : reason + ": " + detail),
        reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

// Graph construction / replay failures.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tracebench
