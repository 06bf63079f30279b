#pragma once

#include <stdexcept>
#include <string>

namespace ictree {

/// File missing or unwritable.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed cell or header while reading tabular data. Message carries the
/// 1-based row and column location.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File contains a header but no data rows.
struct EmptyData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Covariance of a data block is rank deficient (relative eigenvalue below
/// threshold); whitening is not possible.
struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All samples coincide; a continuous quantile distribution cannot represent
/// a point mass.
struct DegenerateSupport : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A symbolic value outside the category list frozen at load time.
struct UnknownCategory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evidence removes all probability mass from every leaf.
struct InconsistentEvidence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few samples survived evidence rejection to form an estimate.
struct InsufficientAcceptance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ictree
