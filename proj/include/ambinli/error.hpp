#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ambinli {

enum class ErrorKind {
    ZeroCounts,
    NotSimplex,
    NonpositivePrediction,
    EmptyInput,
    MalformedLine,
    CountMismatch,
    OutOfRangeScore,
    MissingColumn,
    MissingCounts,
    OutOfRange,
    NoMajorityGold,
    EmptyText,
    DimensionMismatch,
    EmptyCorpus,
    TargetModeMismatch,
    UidMismatch,
    BadEdges,
    TooSmall,
    EmptyData,
    LabelTypeMismatch,
    DegenerateVariance,
    InvalidConfig,
    BadModelFile,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ZeroCounts: return "ZeroCounts";
    case ErrorKind::NotSimplex: return "NotSimplex";
    case ErrorKind::NonpositivePrediction: return "NonpositivePrediction";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::OutOfRangeScore: return "OutOfRangeScore";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::MissingCounts: return "MissingCounts";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NoMajorityGold: return "NoMajorityGold";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::TargetModeMismatch: return "TargetModeMismatch";
    case ErrorKind::UidMismatch: return "UidMismatch";
    case ErrorKind::BadEdges: return "BadEdges";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::LabelTypeMismatch: return "LabelTypeMismatch";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::BadModelFile: return "BadModelFile";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace ambinli
