#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bct {

// Input-side failures (bad source text, unknown symbols, malformed specs).
struct SyntaxError : std::runtime_error {
    std::size_t offset;
    SyntaxError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
};

struct UnknownIdentifier : std::runtime_error {
    std::string name;
    std::size_t offset;
    UnknownIdentifier(const std::string& ident, std::size_t byte_offset)
        : std::runtime_error("unknown identifier '" + ident + "' (at byte " +
                             std::to_string(byte_offset) + ")"),
          name(ident),
          offset(byte_offset) {}
};

// Evaluation-time domain failures: x/0, ln(x<=0), sqrt(x<0), non-finite result.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A mathematical precondition failed on the data (reported with a worst point).
struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotContact : CheckFailure {
    using CheckFailure::CheckFailure;
};

struct SingularSystem : CheckFailure {
    using CheckFailure::CheckFailure;
};

struct BracketFailure : CheckFailure {
    using CheckFailure::CheckFailure;
};

struct HypothesisViolated : CheckFailure {
    using CheckFailure::CheckFailure;
};

struct BoundViolated : CheckFailure {
    using CheckFailure::CheckFailure;
};

}  // namespace bct
