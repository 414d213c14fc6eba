#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace dsk {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<double>;
using CSpMat = Eigen::SparseMatrix<cplx>;

// Errors carry a stable name so the CLI can report them verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }
  virtual bool is_validation() const noexcept { return false; }

 private:
  std::string name_;
};

// Bad input: shapes, parameters, configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return true; }
};

// Something went wrong in the numerics themselves.
class NumericalError : public Error {
 public:
  using Error::Error;
};

inline void require_dims(Eigen::Index a, Eigen::Index b, const char* where) {
  if (a != b)
    throw ValidationError("DimensionMismatch",
                          std::string(where) + ": " + std::to_string(a) +
                              " vs " + std::to_string(b));
}

}  // namespace dsk
