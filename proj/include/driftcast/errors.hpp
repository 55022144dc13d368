#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace driftcast {

// Exceptions carry a typed code so callers can branch without string matching.
template <typename Code>
class CodedError : public std::runtime_error {
public:
    CodedError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

enum class ParseErrc { MalformedLine, NonMonotoneTimestamps, NonFiniteValue, MissingHeader, Empty };

class ParseError : public CodedError<ParseErrc> {
public:
    ParseError(ParseErrc code, std::size_t line, const std::string& what)
        : CodedError(code, "line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class FeatureErrc { ConstantWindow, DegenerateRecursion, WindowTooShort };
using FeatureError = CodedError<FeatureErrc>;

enum class DetectorErrc { ZeroNormFeatures, DegenerateReference, SeedTooShort, InvalidConfig };
using DetectorError = CodedError<DetectorErrc>;

enum class FitErrc { Underdetermined, TooFewSamples, InvalidHParams, EmptyGrid, AllCandidatesFailed };
using FitError = CodedError<FitErrc>;

enum class MetricErrc { ZeroScale, ZeroBaseline, DegeneratePairs, LengthMismatch, TooFewPoints };
using MetricError = CodedError<MetricErrc>;

enum class SimulationErrc { SeriesTooShort, InvalidConfig, UnknownSeries };
using SimulationError = CodedError<SimulationErrc>;

enum class ConfigErrc { Syntax, UnknownKey, BadValue, Unreadable };
using ConfigError = CodedError<ConfigErrc>;

}  // namespace driftcast
