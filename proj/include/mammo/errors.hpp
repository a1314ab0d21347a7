#pragma once

#include <stdexcept>
#include <string>

namespace mammo {

// Base for all typed errors in the library. `kind()` carries a stable
// machine-readable name so callers and tests can dispatch without string
// matching on the human message.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class DicomError : public Error {
public:
    enum class Kind {
        MissingMagic,
        MissingRequiredTag,
        UnsupportedVR,
        UnsupportedTransferSyntax,
        UnsupportedValue,
        TruncatedElement,
        MalformedEncapsulation,
        PayloadSizeMismatch,
    };

    DicomError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::MissingMagic: return "MissingMagic";
        case Kind::MissingRequiredTag: return "MissingRequiredTag";
        case Kind::UnsupportedVR: return "UnsupportedVR";
        case Kind::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
        case Kind::UnsupportedValue: return "UnsupportedValue";
        case Kind::TruncatedElement: return "TruncatedElement";
        case Kind::MalformedEncapsulation: return "MalformedEncapsulation";
        case Kind::PayloadSizeMismatch: return "PayloadSizeMismatch";
        }
        return "DicomError";
    }

private:
    Kind k_;
};

class ImageError : public Error {
public:
    enum class Kind {
        ZeroTargetDimension,
        EmptyImage,
        MalformedPgm,
    };

    ImageError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::ZeroTargetDimension: return "ZeroTargetDimension";
        case Kind::EmptyImage: return "EmptyImage";
        case Kind::MalformedPgm: return "MalformedPgm";
        }
        return "ImageError";
    }

private:
    Kind k_;
};

class DatasetError : public Error {
public:
    enum class Kind {
        MissingColumn,
        BadValue,
        WidthMismatch,
        DuplicateImageId,
        UnmatchedImageId,
        TooFewPatients,
        SingleClassDataset,
        TooFewMinority,
        BadRatio,
        MalformedFeatureFile,
    };

    DatasetError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::MissingColumn: return "MissingColumn";
        case Kind::BadValue: return "BadValue";
        case Kind::WidthMismatch: return "WidthMismatch";
        case Kind::DuplicateImageId: return "DuplicateImageId";
        case Kind::UnmatchedImageId: return "UnmatchedImageId";
        case Kind::TooFewPatients: return "TooFewPatients";
        case Kind::SingleClassDataset: return "SingleClassDataset";
        case Kind::TooFewMinority: return "TooFewMinority";
        case Kind::BadRatio: return "BadRatio";
        case Kind::MalformedFeatureFile: return "MalformedFeatureFile";
        }
        return "DatasetError";
    }

private:
    Kind k_;
};

class NumError : public Error {
public:
    enum class Kind {
        DimensionMismatch,
        LengthMismatch,
        ShapeMismatch,
        StaleCache,
    };

    NumError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::DimensionMismatch: return "DimensionMismatch";
        case Kind::LengthMismatch: return "LengthMismatch";
        case Kind::ShapeMismatch: return "ShapeMismatch";
        case Kind::StaleCache: return "StaleCache";
        }
        return "NumError";
    }

private:
    Kind k_;
};

class ModelError : public Error {
public:
    enum class Kind {
        SingleClassDataset,
        WidthMismatch,
        BadDegree,
        ArtifactVersionMismatch,
        MalformedArtifact,
    };

    ModelError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::SingleClassDataset: return "SingleClassDataset";
        case Kind::WidthMismatch: return "WidthMismatch";
        case Kind::BadDegree: return "BadDegree";
        case Kind::ArtifactVersionMismatch: return "ArtifactVersionMismatch";
        case Kind::MalformedArtifact: return "MalformedArtifact";
        }
        return "ModelError";
    }

private:
    Kind k_;
};

class MetricError : public Error {
public:
    enum class Kind {
        LengthMismatch,
        EmptyInput,
        SingleClassInput,
    };

    MetricError(Kind kind, const std::string& message)
        : Error(kind_name(kind), message), k_(kind) {}

    Kind code() const noexcept { return k_; }

    static const char* kind_name(Kind k) {
        switch (k) {
        case Kind::LengthMismatch: return "LengthMismatch";
        case Kind::EmptyInput: return "EmptyInput";
        case Kind::SingleClassInput: return "SingleClassInput";
        }
        return "MetricError";
    }

private:
    Kind k_;
};

// Configuration / usage problems surfaced by the CLI (exit code 2).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

} // namespace mammo
