#pragma once

#include <stdexcept>
#include <string>

namespace selreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

//! Every kernel weight at the query point is zero (bounded-support kernels only).
class DegenerateNeighborhood : public Error {
 public:
  DegenerateNeighborhood() : Error("kernel weights vanish at the query point") {}
};

}  // namespace selreg
