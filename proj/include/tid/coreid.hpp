#pragma once

#include "tid/matrix_id.hpp"
#include "tid/sketch.hpp"
#include "tid/tensor.hpp"

namespace tid {

/// Core interpolative decomposition output. indexSets, satellites, and
/// lFactors are indexed by mode (not by processing step). Satellites use the
/// coefficient convention: X_i is k_i x n_i with
/// mat_{.,i} T ~ (mat_{.,i} T)[:, J_i] X_i, and the reconstruction is
/// tucker(T_{J_1..J_d}, X_1^T, ..., X_d^T).
struct CoreIdResult {
    std::vector<std::vector<Index>> indexSets;  // J_i
    std::vector<Eigen::MatrixXd> satellites;    // X_i, k_i x n_i
    std::vector<Eigen::MatrixXd> lFactors;      // L_i from the row-wise QR X_i = L_i Q_i
    std::vector<Index> modeOrder;               // processing order actually used

    std::vector<Index> realized_ranks() const;
};

/// Row-wise QR of a short-wide matrix: X = L Q with L lower triangular and
/// Q having orthonormal rows.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lq_factor(const Eigen::MatrixXd& x);

/// Adaptive sequential CoreID for a dense tensor. Each mode's selection runs
/// on the reconstruction produced by previously processed modes, carried in
/// L-merged form. An empty modeOrder means ascending.
CoreIdResult coreid_dense(const DenseTensor& t, const std::vector<Index>& ranks,
                          const MethodChoice& method,
                          const SketchConfig& sketch = SketchConfig::none(),
                          std::vector<Index> modeOrder = {});

enum class CpSketchFamily { Kfjlt, TensorSketch };

/// CoreID for CP tensors. The stage tensor stays in CP form: after each mode
/// the factor is replaced by L_i^T (H_i)_{J_i,:}. sketchDim 0 runs the exact
/// path (Gram-based nuclear scores, or materialized flattening for the norm
/// methods, cap-guarded).
CoreIdResult coreid_cp(const CpTensor& t, const std::vector<Index>& ranks,
                       const MethodChoice& method, Index sketchDim,
                       CpSketchFamily family = CpSketchFamily::Kfjlt,
                       std::vector<Index> modeOrder = {}, Index cap = kDenseCapDefault);

/// CoreID for sparse tensors via the composed sketch network.
CoreIdResult coreid_sparse(const SparseTensorCoo& t, const std::vector<Index>& ranks,
                           const MethodChoice& method, const SparseNetDims& dims,
                           std::vector<Index> modeOrder = {});

/// Assemble the Tucker approximation: core is the selected subtensor of the
/// source (dense extraction, sparse extraction, or CP row restriction) and
/// satellite i is X_i^T.
TuckerApprox coreid_reconstruct(const DenseTensor& source, const CoreIdResult& r);
TuckerApprox coreid_reconstruct(const SparseTensorCoo& source, const CoreIdResult& r);
TuckerApprox coreid_reconstruct(const CpTensor& source, const CoreIdResult& r);

}  // namespace tid
