#pragma once

#include <stdexcept>
#include <string>

namespace mnmimo {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MNMIMO_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                \
    public:                                                                    \
        using Error::Error;                                                    \
    }

MNMIMO_DEFINE_ERROR(NumerologyError);
MNMIMO_DEFINE_ERROR(AlignmentError);
MNMIMO_DEFINE_ERROR(RateError);
MNMIMO_DEFINE_ERROR(CountError);
MNMIMO_DEFINE_ERROR(GeometryError);
MNMIMO_DEFINE_ERROR(ProfileError);
MNMIMO_DEFINE_ERROR(BandError);
MNMIMO_DEFINE_ERROR(FactorError);
MNMIMO_DEFINE_ERROR(GridError);
MNMIMO_DEFINE_ERROR(ZeroChannelError);
MNMIMO_DEFINE_ERROR(DimensionError);
MNMIMO_DEFINE_ERROR(LengthError);
MNMIMO_DEFINE_ERROR(DelayError);
MNMIMO_DEFINE_ERROR(EmptyError);

#undef MNMIMO_DEFINE_ERROR

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = -1, int column = -1)
        : Error(line >= 0 ? "line " + std::to_string(line + 1) + ", column " +
                                std::to_string(column + 1) + ": " + what
                          : what),
          line_(line), column_(column) {}

    // Zero-based; -1 when the error has no source position.
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace mnmimo
