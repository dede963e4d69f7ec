#pragma once

#include <stdexcept>
#include <string>

namespace stcrf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedLine : Error {
  using Error::Error;
};
struct DuplicateObservation : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct ChainTooLong : Error {
  using Error::Error;
};
struct EmptyDataset : Error {
  using Error::Error;
};
struct NonFiniteLoss : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace stcrf
