#ifndef CDC_ERROR_HPP
#define CDC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cdc {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller violated an operation precondition (bad shape, out-of-range value, ...).
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& msg) : Error("invalid input: " + msg) {}
};

/// Input is structurally valid but degenerate (e.g. all feature rows identical).
class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& msg) : Error("degenerate input: " + msg) {}
};

/// Malformed or truncated file content.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error("format error: " + msg) {}
};

/// Metric is undefined for the given input (e.g. AUROC with a single class).
class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& msg) : Error("undefined metric: " + msg) {}
};

/// Broken internal invariant; indicates a bug upstream, not a user error.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& msg) : Error("internal error: " + msg) {}
};

}  // namespace cdc

#endif  // CDC_ERROR_HPP
