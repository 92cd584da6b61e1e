#include "poserec/error.hpp"

namespace poserec {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::CorruptImage: return "CorruptImage";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptIndex: return "CorruptIndex";
    case ErrorKind::CorruptModel: return "CorruptModel";
    case ErrorKind::GridTooFine: return "GridTooFine";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidBinCount: return "InvalidBinCount";
    case ErrorKind::InvalidFeature: return "InvalidFeature";
    case ErrorKind::IncompatibleFeatures: return "IncompatibleFeatures";
    case ErrorKind::MixedMetrics: return "MixedMetrics";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::WrongCardinality: return "WrongCardinality";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    }
    return "Unknown";
}

} // namespace poserec
