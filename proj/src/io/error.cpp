#include "dissect/error.hpp"

namespace dissect {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedHeader: return "MalformedHeader";
        case ErrorKind::UnsupportedElementType: return "UnsupportedElementType";
        case ErrorKind::TruncatedPayload: return "TruncatedPayload";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::UnsupportedDatatype: return "UnsupportedDatatype";
        case ErrorKind::NonInvertibleOrientation: return "NonInvertibleOrientation";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::DuplicateSampleId: return "DuplicateSampleId";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::DegenerateCentroids: return "DegenerateCentroids";
        case ErrorKind::LabelNotFound: return "LabelNotFound";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NoPositiveSamples: return "NoPositiveSamples";
        case ErrorKind::MissingPredictions: return "MissingPredictions";
        case ErrorKind::SingleClassDataset: return "SingleClassDataset";
        case ErrorKind::SampleMismatch: return "SampleMismatch";
        case ErrorKind::MixedDimensions: return "MixedDimensions";
        case ErrorKind::UnknownSample: return "UnknownSample";
        case ErrorKind::MissingArtifact: return "MissingArtifact";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::BadQueryParameter: return "BadQueryParameter";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::TooLarge: return "TooLarge";
    }
    return "Unknown";
}

}  // namespace dissect
