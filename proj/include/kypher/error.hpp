#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kypher {

// Process exit codes; every thrown Error maps onto one of these.
enum class ErrorCode : int {
    Usage = 1,       // bad command line
    Query = 2,       // lexical, syntactic or semantic query/data errors
    Io = 3,          // filesystem and stream failures, stale sources
    Corruption = 4,  // unusable graph cache
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }
    int exit_code() const { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

// Malformed query text or cell literal. Carries a character offset into the
// text being parsed when one is known.
class ParseError : public Error {
public:
    explicit ParseError(std::string message, std::int64_t offset = -1)
        : Error(ErrorCode::Query, std::move(message)), offset_(offset) {}

    std::int64_t offset() const { return offset_; }

private:
    std::int64_t offset_;
};

// Structurally valid but meaningless: unbound variables, duplicate aliases,
// unknown graphs or columns.
class SemanticError : public Error {
public:
    explicit SemanticError(std::string message)
        : Error(ErrorCode::Query, std::move(message)) {}
};

class IoError : public Error {
public:
    explicit IoError(std::string message)
        : Error(ErrorCode::Io, std::move(message)) {}
};

class CorruptionError : public Error {
public:
    explicit CorruptionError(std::string message)
        : Error(ErrorCode::Corruption, std::move(message)) {}
};

class UsageError : public Error {
public:
    explicit UsageError(std::string message)
        : Error(ErrorCode::Usage, std::move(message)) {}
};

} // namespace kypher
