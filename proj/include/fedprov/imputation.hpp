#pragma once

#include <cstdint>
#include <vector>

#include "fedprov/schema.hpp"

namespace fedprov {

struct MiceConfig {
  std::size_t n_iterations = 10;
  /// Add Gaussian residual noise to each prediction. Off gives deterministic
  /// regression imputation.
  bool noise = false;
  std::uint64_t seed = 0;
};

struct MiceResult {
  LabeledMatrix data;
  /// Frobenius norm of the change in imputed cells, one entry per iteration.
  std::vector<double> iteration_deltas;
  /// Conditional fits that fell back to ridge because the design was rank deficient.
  std::size_t ridge_fallbacks = 0;
};

inline constexpr double kMiceRidgeLambda = 1e-6;

/// Replaces each missing cell by its column's observed mean. Throws
/// ValidationError if a column has no observed value.
LabeledMatrix initial_fill(const PartialMatrix& m);
LabeledMatrix initial_fill(const Dataset& ds);

/// Chained-equations imputation. Starting from initial_fill, incomplete columns
/// are visited in ascending order of missing count (ties by column index); each
/// visit regresses the column's observed entries on the current values of the
/// other 13 columns (least squares with intercept) and overwrites its missing
/// entries with the predictions. Observed cells and labels are never modified.
MiceResult mice_impute_detailed(const PartialMatrix& m, const MiceConfig& cfg);

LabeledMatrix mice_impute(const Dataset& ds, const MiceConfig& cfg);

}  // namespace fedprov
