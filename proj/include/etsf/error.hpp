#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etsf {

/// Error categories raised by the library. Validation problems are not
/// errors: they are reported as findings (see validate.hpp).
enum class Errc {
  // container codec
  BadMagic,
  Hdf5Container,
  UnsupportedVariant,
  TruncatedFile,
  MalformedHeader,
  OffsetOverflow,
  NameClash,
  InvalidDataset,
  NoSuchVariable,
  OutOfBounds,
  RankMismatch,
  Io,
  // vocabulary
  MalformedFlag,
  MissingUnits,
  MissingScaleFactor,
  NonPositiveScale,
  InconsistentSpinDimensions,
  // numerics
  ShapeMismatch,
  MissingOrigin,
  PairPresentTwice,
  NonGammaUse,
  GridIncompatibleWithSymmetry,
  UnnormalizedInput,
  UnsupportedSpinorSymmetrization,
  OrderOutOfRange,
  ZeroVectorDirection,
  IndexOutOfRange,
  SingularCell,
  // manifest
  ManifestSyntax,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::Hdf5Container: return "Hdf5Container";
    case Errc::UnsupportedVariant: return "UnsupportedVariant";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::OffsetOverflow: return "OffsetOverflow";
    case Errc::NameClash: return "NameClash";
    case Errc::InvalidDataset: return "InvalidDataset";
    case Errc::NoSuchVariable: return "NoSuchVariable";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::RankMismatch: return "RankMismatch";
    case Errc::Io: return "Io";
    case Errc::MalformedFlag: return "MalformedFlag";
    case Errc::MissingUnits: return "MissingUnits";
    case Errc::MissingScaleFactor: return "MissingScaleFactor";
    case Errc::NonPositiveScale: return "NonPositiveScale";
    case Errc::InconsistentSpinDimensions: return "InconsistentSpinDimensions";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MissingOrigin: return "MissingOrigin";
    case Errc::PairPresentTwice: return "PairPresentTwice";
    case Errc::NonGammaUse: return "NonGammaUse";
    case Errc::GridIncompatibleWithSymmetry: return "GridIncompatibleWithSymmetry";
    case Errc::UnnormalizedInput: return "UnnormalizedInput";
    case Errc::UnsupportedSpinorSymmetrization: return "UnsupportedSpinorSymmetrization";
    case Errc::OrderOutOfRange: return "OrderOutOfRange";
    case Errc::ZeroVectorDirection: return "ZeroVectorDirection";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SingularCell: return "SingularCell";
    case Errc::ManifestSyntax: return "ManifestSyntax";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace etsf
