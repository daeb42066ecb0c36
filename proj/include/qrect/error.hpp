#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qrect {

enum class Errc {
  InvalidInput,
  DimensionMismatch,
  PlaneMissesBall,
  DegenerateNeighborhood,
  EigengapTooSmall,
  EmptyBall,
  CodimensionNotOne,
  OrientationFailure,
  NotSymmetric,
  NoConvergence,
  DeltaTooLarge,
  SplitViolation,
  NoWitness,
  PreconditionViolation,
  NotInSpan,
  IllConditioned,
  EmptyRegion,
  SnapFailed,
  DegeneratePair,
  Disconnected,
  IsolatedVertex,
  InvalidPath,
  ZeroGradientNonconstant,
  BadSpec,
  Io,
};

inline std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::PlaneMissesBall: return "PlaneMissesBall";
    case Errc::DegenerateNeighborhood: return "DegenerateNeighborhood";
    case Errc::EigengapTooSmall: return "EigengapTooSmall";
    case Errc::EmptyBall: return "EmptyBall";
    case Errc::CodimensionNotOne: return "CodimensionNotOne";
    case Errc::OrientationFailure: return "OrientationFailure";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DeltaTooLarge: return "DeltaTooLarge";
    case Errc::SplitViolation: return "SplitViolation";
    case Errc::NoWitness: return "NoWitness";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::NotInSpan: return "NotInSpan";
    case Errc::IllConditioned: return "IllConditioned";
    case Errc::EmptyRegion: return "EmptyRegion";
    case Errc::SnapFailed: return "SnapFailed";
    case Errc::DegeneratePair: return "DegeneratePair";
    case Errc::Disconnected: return "Disconnected";
    case Errc::IsolatedVertex: return "IsolatedVertex";
    case Errc::InvalidPath: return "InvalidPath";
    case Errc::ZeroGradientNonconstant: return "ZeroGradientNonconstant";
    case Errc::BadSpec: return "BadSpec";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the declared error kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qrect
