#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chronoscope {

enum class Errc {
  // validation
  InvalidArgument,
  IoError,
  ParseError,
  DuplicateId,
  IdMismatch,
  DimensionMismatch,
  NonFiniteValue,
  InvalidValue,
  UnknownStyleLabel,
  InvalidSpec,
  KTooLarge,
  UnknownStyle,
  TooFewPaintings,
  MissingYears,
  // numerical
  NotSymmetric,
  NotPositiveSemidefinite,
  DidNotConverge,
  DegenerateData,
  RankDeficient,
  DisconnectedGraph,
  SolverFailure,
  ConstantSeries,
  TooFewSamples,
  DegenerateEmbedding,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::UnknownStyleLabel: return "UnknownStyleLabel";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::UnknownStyle: return "UnknownStyle";
    case Errc::TooFewPaintings: return "TooFewPaintings";
    case Errc::MissingYears: return "MissingYears";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::DidNotConverge: return "DidNotConverge";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::DisconnectedGraph: return "DisconnectedGraph";
    case Errc::SolverFailure: return "SolverFailure";
    case Errc::ConstantSeries: return "ConstantSeries";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateEmbedding: return "DegenerateEmbedding";
  }
  return "Unknown";
}

/// Numerical failures map to CLI exit status 2, everything else to 1.
constexpr bool is_numerical(Errc code) { return code >= Errc::NotSymmetric; }

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  bool numerical() const noexcept { return is_numerical(code_); }

 private:
  Errc code_;
};

}  // namespace chronoscope
