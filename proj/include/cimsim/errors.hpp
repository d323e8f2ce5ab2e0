#pragma once

#include <stdexcept>

namespace cimsim {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };      // vector/matrix dimension mismatch
struct IndexError : Error { using Error::Error; };      // row/column out of range
struct RangeError : Error { using Error::Error; };      // parameter outside its domain
struct ConfigError : Error { using Error::Error; };     // invalid run or ADC configuration
struct BubbleError : Error { using Error::Error; };     // non-monotone thermometer word
struct StructureError : Error { using Error::Error; };  // malformed search tree or trace
struct TopologyError : Error { using Error::Error; };   // fabric cannot host the coupling plan
struct CapacityError : Error { using Error::Error; };   // layer does not fit the array fabric
struct IngestionError : Error { using Error::Error; };  // malformed dataset or model file
struct IoError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };

}  // namespace cimsim
