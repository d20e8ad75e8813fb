#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egoexo {

enum class ErrorKind {
  MissingFile,
  SchemaError,
  AlignmentError,
  InvalidScript,
  DegenerateCamera,
  SizeMismatch,
  NegativeSigma,
  ShapeError,
  NumericalError,
  CheckpointIncompatible,
  DataEmpty,
  DimensionMismatch,
  TruthMissing,
  EmptyInput,
  DegenerateClassifier,
  MixedGallerySizes,
  UntrainedModel,
  MissingLabels,
  InvalidArgument,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::InvalidScript: return "InvalidScript";
    case ErrorKind::DegenerateCamera: return "DegenerateCamera";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::NegativeSigma: return "NegativeSigma";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::CheckpointIncompatible: return "CheckpointIncompatible";
    case ErrorKind::DataEmpty: return "DataEmpty";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TruthMissing: return "TruthMissing";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateClassifier: return "DegenerateClassifier";
    case ErrorKind::MixedGallerySizes: return "MixedGallerySizes";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::MissingLabels: return "MissingLabels";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Domain error raised by every egoexo module. The CLI maps it to exit code 1
/// and prints `name()`.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace egoexo
