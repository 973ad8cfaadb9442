#pragma once

#include "tid/rng.hpp"
#include "tid/tensor.hpp"

namespace tid {

struct SyntheticCpConfig {
    Index n = 32;             // per-mode extent
    Index p = 200;            // rank-one terms
    Index r = 8;              // mixture components
    double sigma = 0.2;       // component standard deviation
    double zeroRowFrac = 0.25;
    Index d = 4;              // tensor order
    double noiseFrac = 1.0 / 11.0;  // fraction of terms drawn as pure noise
    std::uint64_t seed = 0;
};

/// Gaussian-mixture CP generator: r mixture means standard normal in R^{dn},
/// component covariance sigma^2 I, mixture weights uniform on [1,10]
/// normalized; each sample is chopped into d length-n factor columns; the
/// remaining noiseFrac * p columns are standard normal; per factor,
/// ceil(zeroRowFrac * n) random rows are zeroed.
CpTensor gen_synthetic_cp(const SyntheticCpConfig& cfg);

/// The explicit matrix with ones on the first row and column, zeros on the
/// diagonal from (1,1) on, and M elsewhere. Independent rank-1 selection on
/// rows and columns of this matrix reconstructs arbitrarily badly.
Eigen::MatrixXd gen_counterexample_matrix(Index n, double m);

/// Random dense tensor of exact multilinear rank r: random core contracted
/// with random satellites.
DenseTensor gen_low_rank_dense(const Shape& shape, const std::vector<Index>& ranks, Rng& rng);

/// Random sparse tensor with the given fill fraction; values uniform in
/// [-1, 1).
SparseTensorCoo gen_random_sparse(const Shape& shape, double fill, Rng& rng);

}  // namespace tid
