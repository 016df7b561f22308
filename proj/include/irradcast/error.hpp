#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irradcast {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    const char* kind() const noexcept override { return "ParseError"; }

private:
    std::size_t line_;
};

#define IRRADCAST_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                           \
    public:                                                               \
        using Error::Error;                                               \
        const char* kind() const noexcept override { return #Name; }      \
    }

IRRADCAST_DEFINE_ERROR(StationMismatch);
IRRADCAST_DEFINE_ERROR(EmptyInput);
IRRADCAST_DEFINE_ERROR(DateError);
IRRADCAST_DEFINE_ERROR(ChannelUnusable);
IRRADCAST_DEFINE_ERROR(DegenerateFeature);
IRRADCAST_DEFINE_ERROR(InsufficientData);
IRRADCAST_DEFINE_ERROR(MissingYear);
IRRADCAST_DEFINE_ERROR(ShapeError);
IRRADCAST_DEFINE_ERROR(CacheError);
IRRADCAST_DEFINE_ERROR(NonFiniteGradient);
IRRADCAST_DEFINE_ERROR(DivergedError);
IRRADCAST_DEFINE_ERROR(SchemaError);
IRRADCAST_DEFINE_ERROR(ChecksumError);
IRRADCAST_DEFINE_ERROR(VersionError);
IRRADCAST_DEFINE_ERROR(ReportError);
IRRADCAST_DEFINE_ERROR(ConfigError);
IRRADCAST_DEFINE_ERROR(IoError);

#undef IRRADCAST_DEFINE_ERROR

}  // namespace irradcast
