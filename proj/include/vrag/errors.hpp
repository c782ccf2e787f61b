#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrag {

enum class ErrorCode {
  // trajectory-core
  AppendToFinished,
  EmptyBatch,
  // visual-perception
  ZeroDimension,
  OutOfRange,
  OutOfBounds,
  DegenerateRegion,
  NoImageInContext,
  ImageDecode,
  // retrieval-env
  EmptyCorpus,
  Timeout,
  MalformedResponse,
  // reward-engine
  InvalidWeights,
  JudgeUnreachable,
  // rollout-engine
  PolicyUnreachable,
  // grpo-trainer
  GroupTooSmall,
  EmptyMask,
  ShapeMismatch,
  Checkpoint,
  // expert-pipeline
  GuideUnparseable,
  GroundingDegenerate,
  InvalidTarget,
  BudgetExhausted,
  // cli-config / io
  Config,
  Io,
  Parse,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Environment-side failures the caller may retry (network, service).
  bool retriable() const noexcept {
    return code_ == ErrorCode::Timeout || code_ == ErrorCode::MalformedResponse ||
           code_ == ErrorCode::JudgeUnreachable || code_ == ErrorCode::PolicyUnreachable;
  }

 private:
  ErrorCode code_;
};

}  // namespace vrag
