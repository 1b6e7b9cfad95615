#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dissect {

enum class ErrorKind {
    // tensor-io
    MalformedHeader,
    UnsupportedElementType,
    TruncatedPayload,
    InvariantViolation,
    BadMagic,
    UnsupportedDatatype,
    NonInvertibleOrientation,
    SchemaViolation,
    DuplicateSampleId,
    IoFailure,
    // volume-prep
    DegenerateCentroids,
    LabelNotFound,
    // dissection-core
    EmptyDataset,
    ShapeMismatch,
    DimensionMismatch,
    NoPositiveSamples,
    MissingPredictions,
    SingleClassDataset,
    // concept-report
    SampleMismatch,
    MixedDimensions,
    UnknownSample,
    // serve-api
    MissingArtifact,
    NotFound,
    BadQueryParameter,
    // synth-bench
    InvalidSpec,
    TooLarge,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace dissect
