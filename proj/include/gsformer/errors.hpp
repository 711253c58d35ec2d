#pragma once

#include <stdexcept>
#include <string>

namespace gsf {

enum class ErrorKind {
    Dimension,  // shape contract violated
    Config,     // invalid or mismatched configuration
    Data,       // malformed input data or file
    Numeric,    // NaN / Inf produced
    Usage,      // bad command-line usage
};

// Single exception type carrying a category; the CLI maps categories to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error dimension_error(const std::string& msg) { return {ErrorKind::Dimension, msg}; }
inline Error config_error(const std::string& msg) { return {ErrorKind::Config, msg}; }
inline Error data_error(const std::string& msg) { return {ErrorKind::Data, msg}; }
inline Error numeric_error(const std::string& msg) { return {ErrorKind::Numeric, msg}; }
inline Error usage_error(const std::string& msg) { return {ErrorKind::Usage, msg}; }

}  // namespace gsf
