#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "selreg/error.hpp"

namespace selreg {

using Point = std::span<const double>;

//! Covariates stored row-major (n x d) plus an optional response vector.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t dim, std::vector<double> x, std::vector<double> y = {})
      : d_(dim), x_(std::move(x)), y_(std::move(y)) {
    validate();
  }

  std::size_t size() const noexcept { return d_ == 0 ? 0 : x_.size() / d_; }
  std::size_t dim() const noexcept { return d_; }
  bool has_response() const noexcept { return !y_.empty(); }

  Point row(std::size_t i) const noexcept { return {x_.data() + i * d_, d_}; }
  double x(std::size_t i, std::size_t j) const noexcept { return x_[i * d_ + j]; }
  double y(std::size_t i) const noexcept { return y_[i]; }

  const std::vector<double>& covariates() const noexcept { return x_; }
  const std::vector<double>& responses() const noexcept { return y_; }

  //! Rows in the given order (duplicates allowed).
  Dataset subset(std::span<const std::size_t> rows) const {
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(rows.size() * d_);
    if (has_response()) y.reserve(rows.size());
    for (auto r : rows) {
      const auto p = row(r);
      x.insert(x.end(), p.begin(), p.end());
      if (has_response()) y.push_back(y_[r]);
    }
    return Dataset(d_, std::move(x), std::move(y));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  void validate() const {
    if (d_ == 0) throw Error("dataset dimension must be positive");
    if (x_.empty() || x_.size() % d_ != 0)
      throw Error("covariate buffer of size " + std::to_string(x_.size()) +
                  " is not a nonempty multiple of d = " + std::to_string(d_));
    for (std::size_t k = 0; k < x_.size(); ++k)
      if (!std::isfinite(x_[k]))
        throw Error("non-finite covariate at row " + std::to_string(k / d_) + ", column " +
                    std::to_string(k % d_));
    if (!y_.empty()) {
      if (y_.size() != size())
        throw Error("response length " + std::to_string(y_.size()) + " does not match n = " +
                    std::to_string(size()));
      for (std::size_t i = 0; i < y_.size(); ++i)
        if (!std::isfinite(y_[i])) throw Error("non-finite response at row " + std::to_string(i));
    }
  }

  std::size_t d_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
};

}  // namespace selreg
