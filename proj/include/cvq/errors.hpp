#ifndef CVQ_ERRORS_HPP
#define CVQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cvq {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the operation's domain.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// Matrix/grid dimensions are incompatible or too small.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// An iterative method failed; the message carries diagnostics.
class NumericalError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

namespace detail {

template <typename E = InvalidInput>
inline void require(bool cond, const std::string &what) {
  if (!cond) throw E(what);
}

} // namespace detail
} // namespace cvq

#endif // CVQ_ERRORS_HPP
