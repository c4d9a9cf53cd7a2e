#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hfce {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown inside an algorithm (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparsity label of a dictionary atom: inactive, angular (far-field) or polar (near-field).
enum class Domain { kNone, kAngular, kPolar };

inline char domain_label(Domain d) {
  switch (d) {
    case Domain::kAngular: return 'A';
    case Domain::kPolar: return 'P';
    default: return '0';
  }
}

}  // namespace hfce
