#include "vrag/errors.hpp"

namespace vrag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AppendToFinished: return "AppendToFinished";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DegenerateRegion: return "DegenerateRegion";
    case ErrorCode::NoImageInContext: return "NoImageInContext";
    case ErrorCode::ImageDecode: return "ImageDecode";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::JudgeUnreachable: return "JudgeUnreachable";
    case ErrorCode::PolicyUnreachable: return "PolicyUnreachable";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Checkpoint: return "Checkpoint";
    case ErrorCode::GuideUnparseable: return "GuideUnparseable";
    case ErrorCode::GroundingDegenerate: return "GroundingDegenerate";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace vrag
