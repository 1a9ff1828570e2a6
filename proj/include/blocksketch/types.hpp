#pragma once

// Shared dense-matrix aliases, the contiguous row-block partition, and the
// error taxonomy used across the library.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace blocksketch {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Input-shape or argument mismatch (bad dimensions, unknown names, ...).
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A required mathematical precondition does not hold (e.g. non-orthonormal
// basis handed to an operation that assumes one).
struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerically rank-deficient input where full column rank is required.
struct rank_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative routine hit its iteration cap; carries the last estimate.
struct convergence_error : std::runtime_error {
  double last_estimate;
  convergence_error(const std::string& what, double estimate)
      : std::runtime_error(what), last_estimate(estimate) {}
};

// An exhaustive enumeration would exceed its configured cap.
struct capacity_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A product of group elements (or a ciphertext) left the finite group.
struct closure_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contiguous partition of N rows into K equal blocks of tau rows each.
// Block i (0-based) covers rows [i*tau, (i+1)*tau).
struct Partition {
  Index rows = 0;    // N
  Index blocks = 0;  // K

  static Partition contiguous(Index n, Index k) {
    if (n <= 0 || k <= 0) throw dimension_error("partition: N and K must be positive");
    if (n % k != 0) throw dimension_error("partition: K must divide N");
    return Partition{n, k};
  }

  Index block_rows() const { return rows / blocks; }  // tau

  // Half-open row range [first, first + tau) of block i.
  std::pair<Index, Index> block_range(Index i) const {
    if (i < 0 || i >= blocks) throw dimension_error("partition: block index out of range");
    const Index tau = block_rows();
    return {i * tau, (i + 1) * tau};
  }
};

// A regression instance: features A (N x d), labels b (N), and the row-block
// partition used to shard it across workers.
struct Dataset {
  Matrix A;
  Vector b;
  Partition part;

  void validate() const {
    if (A.rows() == 0 || A.cols() == 0) throw dimension_error("dataset: empty feature matrix");
    if (b.size() != A.rows()) throw dimension_error("dataset: label length must equal row count");
    if (part.rows != A.rows()) throw dimension_error("dataset: partition rows must match A");
    if (!A.allFinite() || !b.allFinite()) throw precondition_error("dataset: entries must be finite");
  }
};

}  // namespace blocksketch
