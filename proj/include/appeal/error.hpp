// Copyright 2026 The appeal authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace appeal {

/// Malformed or unreadable configuration. `line` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ", column " +
                                            std::to_string(column) + ")"
                                      : msg),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// A value violates a documented invariant. `field()` names the offending field.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& msg)
        : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Failure inside a model backend. Retryable failures may succeed on a second call.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& msg, bool retryable)
        : std::runtime_error(msg), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

/// A pipeline stage could not complete (missing upstream, too many failures, ...).
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& msg)
        : std::runtime_error(stage + ": " + msg), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Training diverged or could not start.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace appeal
