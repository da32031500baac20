#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chainflow {

// Absolute tolerance for units and currency comparisons.
inline constexpr double kTolerance = 1e-6;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownEntity : public Error {
 public:
  using Error::Error;
};

class InvalidNetwork : public Error {
 public:
  using Error::Error;
};

enum class EntityKind { Customer, Distributor, OEM, TierSupplier };

inline std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Customer: return "Customer";
    case EntityKind::Distributor: return "Distributor";
    case EntityKind::OEM: return "OEM";
    case EntityKind::TierSupplier: return "TierSupplier";
  }
  return "?";
}

inline EntityKind parse_entity_kind(std::string_view text) {
  if (text == "Customer") return EntityKind::Customer;
  if (text == "Distributor") return EntityKind::Distributor;
  if (text == "OEM") return EntityKind::OEM;
  if (text == "TierSupplier") return EntityKind::TierSupplier;
  throw InvalidNetwork("unknown entity kind '" + std::string(text) + "'");
}

// Dense row-major table, used for every (vertex, product) and (edge, product)
// indexed quantity.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const T> values() const { return data_; }

  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

inline bool nearly_equal(double a, double b, double tol = kTolerance) {
  return std::abs(a - b) <= tol;
}

}  // namespace chainflow
