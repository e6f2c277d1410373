#pragma once

#include <stdexcept>
#include <string>

namespace pitchcast {

/// Base of every error raised by the library. The CLI maps subclasses of
/// InputError to exit status 2 and everything else to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

/// Problems with user-supplied data or configuration.
class InputError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "InputError"; }
};

#define PITCHCAST_DEFINE_ERROR(Name, Base)                                   \
    class Name : public Base {                                               \
    public:                                                                  \
        using Base::Base;                                                    \
        const char* kind() const noexcept override { return #Name; }         \
    };

// ingest
PITCHCAST_DEFINE_ERROR(SchemaError, InputError)
PITCHCAST_DEFINE_ERROR(RowError, InputError)
PITCHCAST_DEFINE_ERROR(ConsistencyError, InputError)
PITCHCAST_DEFINE_ERROR(OrderError, InputError)
// ratings
PITCHCAST_DEFINE_ERROR(UnplayedMatch, InputError)
PITCHCAST_DEFINE_ERROR(EmptyWindow, InputError)
// features
PITCHCAST_DEFINE_ERROR(ColdStart, InputError)
PITCHCAST_DEFINE_ERROR(StaleSnapshot, Error)
PITCHCAST_DEFINE_ERROR(UnknownFeature, InputError)
// selection / gbt
PITCHCAST_DEFINE_ERROR(DegenerateTarget, InputError)
PITCHCAST_DEFINE_ERROR(TooFewInstances, InputError)
PITCHCAST_DEFINE_ERROR(NonFiniteFeature, InputError)
PITCHCAST_DEFINE_ERROR(SchemaMismatch, InputError)
// eval
PITCHCAST_DEFINE_ERROR(InvalidSimplex, InputError)
PITCHCAST_DEFINE_ERROR(EmptyInput, InputError)
PITCHCAST_DEFINE_ERROR(InsufficientHistory, InputError)
// config
PITCHCAST_DEFINE_ERROR(ConfigError, InputError)

#undef PITCHCAST_DEFINE_ERROR

}  // namespace pitchcast
