#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace robustadapt {

// Every failure carries a stable machine-readable code alongside the human
// message. The CLI prints "<code>: <message>" on a single line and exits
// nonzero, so scripts can dispatch on the code.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define RA_ERROR_CLASS(Name, Code)                                        \
    struct Name : Error {                                                 \
        explicit Name(const std::string& m) : Error(Code, m) {}           \
    }

RA_ERROR_CLASS(NonFiniteError, "NonFinite");
RA_ERROR_CLASS(ShapeMismatchError, "ShapeMismatch");
RA_ERROR_CLASS(FormatError, "FormatError");
RA_ERROR_CLASS(VersionMismatchError, "VersionMismatch");
RA_ERROR_CLASS(InvalidSpecError, "InvalidSpec");
RA_ERROR_CLASS(TooFewSamplesError, "TooFewSamples");
RA_ERROR_CLASS(MissingGroupPromptsError, "MissingGroupPrompts");
RA_ERROR_CLASS(DegenerateClusteringError, "DegenerateClustering");
RA_ERROR_CLASS(BatchTooSmallError, "BatchTooSmall");
RA_ERROR_CLASS(EmptyPositivesError, "EmptyPositives");
RA_ERROR_CLASS(NoPositivesError, "NoPositives");
RA_ERROR_CLASS(EmptyGroupError, "EmptyGroup");
RA_ERROR_CLASS(InsufficientGroupsError, "InsufficientGroups");
RA_ERROR_CLASS(EmptyCacheError, "EmptyCache");
RA_ERROR_CLASS(AlphaOutOfRangeError, "AlphaOutOfRange");
RA_ERROR_CLASS(DegenerateGroupsError, "DegenerateGroups");
RA_ERROR_CLASS(DivergedError, "Diverged");
RA_ERROR_CLASS(ConfigError, "ConfigError");
RA_ERROR_CLASS(IoError, "IoError");

#undef RA_ERROR_CLASS

}  // namespace robustadapt
