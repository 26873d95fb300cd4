#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace absde {

/// Base of every typed failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ABSDE_ERROR(Name)                     \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

ABSDE_ERROR(InvalidArgument);
ABSDE_ERROR(ConfigError);
ABSDE_ERROR(NonCommensurateHorizon);
ABSDE_ERROR(HorizonViolation);
ABSDE_ERROR(DegenerateDelay);
ABSDE_ERROR(ScopeError);
ABSDE_ERROR(MissingExpectation);
ABSDE_ERROR(DomainError);
ABSDE_ERROR(OddAntitheticCount);
ABSDE_ERROR(SingularDesign);
ABSDE_ERROR(InnerDivergence);
ABSDE_ERROR(NoBracket);
ABSDE_ERROR(BarrierViolation);
ABSDE_ERROR(QuadratureFailure);
ABSDE_ERROR(NonMonotone);
ABSDE_ERROR(NoAdmissibleEps);

#undef ABSDE_ERROR

/// Parse failure with the byte offset into the source and the tokens that would have been accepted.
class ParseError : public Error {
public:
    ParseError(std::size_t position, const std::string& message, std::vector<std::string> expected = {})
        : Error("parse error at offset " + std::to_string(position) + ": " + message),
          position_(position), expected_(std::move(expected)) {}

    std::size_t position() const noexcept { return position_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

/// Raised when extended-precision constants leave the representable range.
/// The log of the offending quantity is kept so callers can still report it.
class OverflowRegime : public Error {
public:
    OverflowRegime(const std::string& what, long double log_value)
        : Error(what), log_value_(log_value) {}
    long double log_value() const noexcept { return log_value_; }

private:
    long double log_value_;
};

/// Outer fixed-point loop failed. Carries the history so a caller can still inspect it.
class OuterDivergence : public Error {
public:
    OuterDivergence(const std::string& what, std::vector<double> diffs, std::vector<std::string> warnings)
        : Error(what), diffs_(std::move(diffs)), warnings_(std::move(warnings)) {}
    const std::vector<double>& diffs() const noexcept { return diffs_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    std::vector<double> diffs_;
    std::vector<std::string> warnings_;
};

}  // namespace absde
