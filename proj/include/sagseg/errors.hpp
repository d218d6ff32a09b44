#pragma once

#include <stdexcept>
#include <string>

namespace sagseg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
  using Error::Error;
};

// File opened fine but its layout is not what we expect (missing PLY
// property, unsupported bit depth, malformed header).
class FormatError : public Error {
public:
  using Error::Error;
};

// Well-formed file carrying unusable values (NaN, Inf).
class DataError : public Error {
public:
  using Error::Error;
};

// Caller broke a precondition (length mismatch, out-of-range index).
class ContractError : public Error {
public:
  using Error::Error;
};

// Invalid configuration: cameras, synth specs, config overrides.
class ConfigError : public Error {
public:
  using Error::Error;
};

namespace detail {

template <typename E>
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace detail

}  // namespace sagseg
