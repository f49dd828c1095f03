#pragma once

#include <stdexcept>
#include <string>

namespace rsopf {

/// Base class of every error raised by the toolkit. `code()` is a stable
/// identifier used by the command line front end and in reports.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define RSOPF_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    }

// network
RSOPF_DEFINE_ERROR(ParseError);
RSOPF_DEFINE_ERROR(StructureError);
RSOPF_DEFINE_ERROR(DomainError);
RSOPF_DEFINE_ERROR(UnknownBus);

// scenario
RSOPF_DEFINE_ERROR(InvalidWindow);
RSOPF_DEFINE_ERROR(ProfileLengthMismatch);

// program
RSOPF_DEFINE_ERROR(InconsistentInstance);
RSOPF_DEFINE_ERROR(LengthMismatch);

// conic
RSOPF_DEFINE_ERROR(DimensionError);
RSOPF_DEFINE_ERROR(BackendUnavailable);

// sweep
RSOPF_DEFINE_ERROR(NonpositiveVoltage);
RSOPF_DEFINE_ERROR(NotFeasibleInput);
RSOPF_DEFINE_ERROR(MonotonicityViolation);
RSOPF_DEFINE_ERROR(NoConvergence);

// certify
RSOPF_DEFINE_ERROR(InfeasibleLP);

// oracle
RSOPF_DEFINE_ERROR(ShapeMismatch);

// io
RSOPF_DEFINE_ERROR(IoError);

#undef RSOPF_DEFINE_ERROR

}  // namespace rsopf
