#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ranklab {

/// Rejected input: bad parameters, mismatched sizes, malformed config.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical failure tied to a location in an ensemble (a path and a grid index).
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what,
                 std::optional<std::size_t> path = std::nullopt,
                 std::optional<std::size_t> time_index = std::nullopt);

    std::optional<std::size_t> path() const noexcept { return path_; }
    std::optional<std::size_t> time_index() const noexcept { return time_index_; }

    /// Same failure, annotated with the path it occurred on.
    NumericError on_path(std::size_t path) const;

private:
    std::string message_;
    std::optional<std::size_t> path_;
    std::optional<std::size_t> time_index_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& what, std::string file)
        : std::runtime_error(what + ": " + file), file_(std::move(file)) {}
    const std::string& file() const noexcept { return file_; }

private:
    std::string file_;
};

}  // namespace ranklab
