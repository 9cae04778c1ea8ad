// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace treeseek {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
  Usage,     // bad flags or arguments
  Data,      // malformed input, missing data, format violations
  Internal,  // broken invariant or contract inside the library
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class UnsupportedLanguage : public Error {
public:
  explicit UnsupportedLanguage(const std::string& language)
      : Error(ErrorKind::Data, "unsupported language: '" + language + "'"),
        language_(language) {}
  const std::string& language() const noexcept { return language_; }

private:
  std::string language_;
};

class EncodingError : public Error {
public:
  EncodingError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::Data, what + " at byte " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// Binary or textual file does not match the expected layout.
class FormatError : public Error {
public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::Data, what + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

class MissingEmbedding : public Error {
public:
  explicit MissingEmbedding(const std::string& key)
      : Error(ErrorKind::Data, "no stored embedding for key '" + key + "'"), key_(key) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Embedding a node's content failed; carries the refined node id.
class EmbeddingError : public Error {
public:
  EmbeddingError(int node_id, const std::string& cause)
      : Error(ErrorKind::Data,
              "embedding failed for node " + std::to_string(node_id) + ": " + cause),
        node_id_(node_id) {}
  int node_id() const noexcept { return node_id_; }

private:
  int node_id_;
};

class DuplicateId : public Error {
public:
  explicit DuplicateId(const std::string& id)
      : Error(ErrorKind::Data, "duplicate id '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

private:
  std::string id_;
};

class FingerprintMismatch : public Error {
public:
  explicit FingerprintMismatch(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

class ContractViolation : public Error {
public:
  explicit ContractViolation(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

}  // namespace treeseek
