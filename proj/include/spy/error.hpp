// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace spy {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration (bad key, bad value, missing referenced file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Annotation or detection record that cannot describe a valid box.
class MalformedAnnotation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// A replayed detector has no record for a requested image.
class MissingDetections : public Error {
 public:
  using Error::Error;
};

}  // namespace spy
