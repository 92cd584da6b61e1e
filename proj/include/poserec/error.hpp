#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poserec {

enum class ErrorKind {
    FileNotFound,
    UnsupportedFormat,
    CorruptImage,
    IoError,
    VersionMismatch,
    CorruptIndex,
    CorruptModel,
    GridTooFine,
    InvalidArgument,
    InvalidBinCount,
    InvalidFeature,
    IncompatibleFeatures,
    MixedMetrics,
    EmptyDataset,
    WrongCardinality,
    LengthMismatch,
    DimensionMismatch,
    ShapeMismatch,
    NonFiniteLoss,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library is an Error carrying a kind, so callers
// (the CLI in particular) can branch on the category without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace poserec
