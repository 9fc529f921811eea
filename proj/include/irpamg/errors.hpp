#pragma once

#include <stdexcept>
#include <string>

namespace irpamg {

/// Malformed or unsupported input data (image files, RLE payloads, manifests).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry was requested for a mask with no foreground pixels.
class EmptyMask : public DataError {
 public:
  EmptyMask() : DataError("mask is empty") {}
};

/// The growth trace never produced a finite energy, so no prefix can be selected.
class NoEnergyPeak : public std::runtime_error {
 public:
  NoEnergyPeak() : std::runtime_error("no finite energy along the growth trace") {}
};

}  // namespace irpamg
