#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace tvflow {

using Signal = Eigen::VectorXd;
using Image = Eigen::MatrixXd;

// A negative TV subgradient: -p lies in the subdifferential of the total
// variation at the signal it was computed for.  Zero mean, piecewise constant
// on the plateau partition.
using NegSubgradient = Signal;

// Thrown when an iterative solve fails to converge, an internal invariant is
// violated, or an input leaves the numerically meaningful domain.  The CLI
// maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Maximum number of worker threads for parallel kernels.  Reads the
// TVFLOW_THREADS environment variable once; defaults to 1.
int thread_cap();

}  // namespace tvflow
