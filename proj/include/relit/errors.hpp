// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace relit {

// Bad inputs: dimension mismatches, out-of-range parameters, malformed data.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

// Filesystem and codec failures. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace relit
