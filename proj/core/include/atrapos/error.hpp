#pragma once

#include <stdexcept>
#include <string>

namespace atrapos {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A 64-bit instance count would wrap.
class OverflowError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// A FETCH_CACHED plan node could not be served.
class FetchError : public Error {
 public:
  using Error::Error;
};

}  // namespace atrapos
