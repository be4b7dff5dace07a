#pragma once

#include <stdexcept>
#include <string>

namespace ea {

// Base error. ValidationError maps to CLI exit code 2, IoError to exit code 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct DimensionMismatch : ValidationError {
  DimensionMismatch(int h1, int w1, int h2, int w2)
      : ValidationError("DimensionMismatch: " + std::to_string(h1) + "x" + std::to_string(w1) +
                        " vs " + std::to_string(h2) + "x" + std::to_string(w2)) {}
  explicit DimensionMismatch(const std::string& what) : ValidationError("DimensionMismatch: " + what) {}
};

struct EmptyMask : ValidationError {
  EmptyMask() : ValidationError("EmptyMask: mask has no foreground pixels") {}
};

struct WidthMismatch : ValidationError {
  WidthMismatch(int got, int expected)
      : ValidationError("WidthMismatch: curve width " + std::to_string(got) + ", raster width " +
                        std::to_string(expected)) {}
};

struct RowOutOfRange : ValidationError {
  int column;
  RowOutOfRange(int col, double value)
      : ValidationError("RowOutOfRange: row " + std::to_string(value) + " at column " +
                        std::to_string(col)),
        column(col) {}
};

struct CurveCrossing : ValidationError {
  int column;
  CurveCrossing(int col, double ilm_row, double bm_row)
      : ValidationError("CurveCrossing: ilm " + std::to_string(ilm_row) + " below bm " +
                        std::to_string(bm_row) + " at column " + std::to_string(col)),
        column(col) {}
};

struct BoundsError : ValidationError {
  explicit BoundsError(const std::string& what) : ValidationError("BoundsError: " + what) {}
};

struct EmptyPrediction : ValidationError {
  EmptyPrediction() : ValidationError("EmptyPrediction: coarse mask has no foreground") {}
};

struct IncompleteCorners : ValidationError {
  IncompleteCorners() : ValidationError("IncompleteCorners: all four corner points are required") {}
};

struct SpecInfeasible : ValidationError {
  explicit SpecInfeasible(const std::string& what) : ValidationError("SpecInfeasible: " + what) {}
};

struct EmptyCohort : ValidationError {
  EmptyCohort() : ValidationError("EmptyCohort: exclusion removed every frame") {}
};

}  // namespace ea
