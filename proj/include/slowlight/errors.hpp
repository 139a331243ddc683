#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace slowlight {

// Base for every error thrown by the library. The CLI maps the subclasses
// onto its exit codes: parameter/parse/data errors are usage errors (2),
// numerical and fit failures are computation errors (3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
    ParameterError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& message)
        : Error(source + ":" + std::to_string(line) + ": " + message),
          source_(std::move(source)), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::string source_;
    std::size_t line_;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Raised when an iterative fit stops without meeting its tolerance. Carries
// the best parameters seen and the cost after every accepted iteration.
class FitError : public NumericalError {
public:
    FitError(const std::string& message, std::vector<double> best_params,
             std::vector<double> cost_history)
        : NumericalError(message), best_params_(std::move(best_params)),
          cost_history_(std::move(cost_history)) {}
    const std::vector<double>& best_params() const noexcept { return best_params_; }
    const std::vector<double>& cost_history() const noexcept { return cost_history_; }

private:
    std::vector<double> best_params_;
    std::vector<double> cost_history_;
};

}  // namespace slowlight
