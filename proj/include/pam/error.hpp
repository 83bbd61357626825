// SPDX-License-Identifier: Apache-2.0
//! \file pam/error.hpp
//! Exception types shared by every module.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pam {

//! Precondition violated by the caller (bad dimension, radius, time...).
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

//! Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error("config error in '" + key + "': " + what), key_(std::move(key))
    {
    }

    [[nodiscard]] const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

//! A configured cap (memory budget, record count, path budget) or a count
//! type would be exceeded.
class ResourceCapError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! Integration failed: step-size underflow, non-finite state, or a closed
//! form check that did not hold.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

//! A sparse exceedance field does not certify the requested statistic: the
//! threshold is too high (or too few records for the requested rank).
class GuardFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace pam
