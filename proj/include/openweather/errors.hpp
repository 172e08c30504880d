#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace owp {

// Every failure raised by the library derives from Error so callers can catch
// one type at the coordinator boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// encode() refused a message that violates a type invariant.
class EncodeError : public Error {
 public:
  EncodeError(std::string field, const std::string& what)
      : Error("encode rejected: " + field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DecodeError : public Error {
 public:
  enum class Kind {
    kParse,        // malformed JSON
    kSchema,       // structurally valid JSON that is not an OpenWeather message
    kUnknownCode,  // "Type" outside the code registry
  };

  DecodeError(Kind kind, const std::string& what, std::size_t offset = 0)
      : Error(what), kind_(kind), offset_(offset) {}

  Kind kind() const { return kind_; }
  // Byte offset of a JSON syntax error; 0 for the other kinds.
  std::size_t offset() const { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

// Raw sensor line has no record tag, or contains non-printable bytes.
class VendorFormatError : public Error {
 public:
  using Error::Error;
};

// A recognised vendor key carried a value that is not a usable number.
class VendorValueError : public Error {
 public:
  VendorValueError(std::string key, const std::string& what)
      : Error("vendor value error for key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// to_data_block() was handed a sample with no populated group.
class EmptySampleError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class UriEncodingError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class FramingError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace owp
