#pragma once

#include <stdexcept>
#include <string>

namespace rse {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix shapes that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (files, schedules, bounds).
class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// A mode-matched filter step that cannot be carried out.
class FilterError : public Error {
public:
    enum class Kind {
        NotStronglyDetectable,  // C2*G2 lost column rank
        IllConditioned,         // an inverted matrix exceeded the condition bound
    };

    FilterError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace rse
