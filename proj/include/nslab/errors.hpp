#pragma once

#include <stdexcept>
#include <string>

namespace nslab {

/// Tensor or layer geometry does not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN/Inf where finite values are required, or a degenerate statistic.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary or text file. Carries the byte offset when known.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, long long offset = -1)
        : std::runtime_error(offset >= 0 ? what + " (at offset " + std::to_string(offset) + ")" : what),
          offset_(offset) {}
    long long offset() const noexcept { return offset_; }

private:
    long long offset_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace nslab
