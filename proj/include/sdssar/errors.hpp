#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdssar {

enum class ErrorKind {
    invalid_argument,
    degenerate_input,
    corrupted_stack,
    numeric_overflow,
    training_diverged,
    version_mismatch,
    io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The kind is what the CLI
/// reports in its error JSON.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& m) : Error(ErrorKind::invalid_argument, m) {}
};

class DegenerateInput : public Error {
public:
    explicit DegenerateInput(const std::string& m) : Error(ErrorKind::degenerate_input, m) {}
};

class CorruptedStack : public Error {
public:
    explicit CorruptedStack(const std::string& m) : Error(ErrorKind::corrupted_stack, m) {}
};

class NumericOverflow : public Error {
public:
    explicit NumericOverflow(const std::string& m) : Error(ErrorKind::numeric_overflow, m) {}
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& m)
        : Error(ErrorKind::training_diverged, m), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class VersionMismatch : public Error {
public:
    explicit VersionMismatch(const std::string& m) : Error(ErrorKind::version_mismatch, m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

}  // namespace sdssar
