#pragma once

#include <stdexcept>
#include <string>

namespace kdist {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { usage = 1, data = 2, remote = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class RemoteError : public Error {
public:
    explicit RemoteError(const std::string& what, int status = 0)
        : Error(ErrorKind::remote, what), status_(status) {}

    // HTTP status when one was received, 0 for transport failures.
    int status() const noexcept { return status_; }

private:
    int status_;
};

}  // namespace kdist
