#include "masuq/error.hpp"

namespace masuq {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonDistribution: return "NonDistribution";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::EmptySummary: return "EmptySummary";
    case Errc::Transport: return "Transport";
    case Errc::Protocol: return "Protocol";
    case Errc::ServerRefused: return "ServerRefused";
    case Errc::NoMatchingRule: return "NoMatchingRule";
    case Errc::HistoryIncomplete: return "HistoryIncomplete";
    case Errc::GatewayFailure: return "GatewayFailure";
    case Errc::PromptRenderError: return "PromptRenderError";
    case Errc::MissingBaseTrace: return "MissingBaseTrace";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::EmptyCandidates: return "EmptyCandidates";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NegativeEntropy: return "NegativeEntropy";
    case Errc::UnpairedSample: return "UnpairedSample";
    case Errc::TooFewNonzero: return "TooFewNonzero";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::Degenerate: return "Degenerate";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace masuq
