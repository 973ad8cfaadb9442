#pragma once

#include <string>

#include "tid/rng.hpp"
#include "tid/tensor.hpp"

namespace tid {

struct ErrorReport {
    double absoluteError = 0.0;
    double relativeError = 0.0;
    std::string method;                // "exact" or "sketched(m=..,seed=..)"
    std::vector<double> perModeErrors; // optional diagnostics
};

/// Exact Frobenius reconstruction error. Materializes and subtracts when the
/// tensor fits the cap; otherwise evaluates the expansion
/// ||T||^2 - 2<T, That> + ||That||^2 with structured inner products.
ErrorReport exact_rel_error(const DenseTensor& t, const TuckerApprox& approx,
                            Index cap = kDenseCapDefault);
ErrorReport exact_rel_error(const SparseTensorCoo& t, const TuckerApprox& approx,
                            Index cap = kDenseCapDefault);
ErrorReport exact_rel_error(const CpTensor& t, const TuckerApprox& approx,
                            Index cap = kDenseCapDefault);

/// Structured-expansion path, exposed for oracle comparison in tests.
ErrorReport exact_rel_error_structured(const SparseTensorCoo& t, const TuckerApprox& approx,
                                       Index cap = kDenseCapDefault);

/// Randomized estimate: one shared KFJLT pipeline applied to both the sparse
/// tensor and the Tucker reconstruction (satellites sketched, then the core
/// contracted); returns ||s(T) - s(That)|| / ||s(T)||. Unbiased for the
/// squared distance.
ErrorReport sketched_rel_error(const SparseTensorCoo& t, const TuckerApprox& approx, Index m,
                               std::uint64_t seed);

/// Sequentially truncated HOSVD reference baseline.
TuckerApprox hosvd_baseline(const DenseTensor& t, const std::vector<Index>& ranks,
                            Index cap = kDenseCapDefault);

}  // namespace tid
