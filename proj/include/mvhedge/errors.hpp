#pragma once

#include <stdexcept>
#include <string>

namespace mvhedge {

/// Invalid value fed to a pure math routine (non-finite input, out-of-range delta, ...).
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File could not be opened, read or written.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// CSV header or row structure does not match the documented schema.
struct schema_error : std::runtime_error {
    explicit schema_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Checkpoint file is corrupt. Carries the byte offset where parsing failed.
struct format_error : std::runtime_error {
    format_error(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

/// An API precondition was broken by the caller (mismatched shapes, stale cache, ...).
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& msg) : std::logic_error(msg) {}
};

/// Run setup is unusable (empty dataset after filtering, empty split side, ...).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numeric computation produced a non-finite value (diverged training, ...).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Least-squares design matrix is numerically rank deficient.
struct singular_error : std::runtime_error {
    singular_error(const std::string& msg, double condition_estimate)
        : std::runtime_error(msg + " (condition estimate " +
                             std::to_string(condition_estimate) + ")"),
          condition(condition_estimate) {}
    double condition;
};

}  // namespace mvhedge
