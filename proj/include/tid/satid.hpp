#pragma once

#include <optional>
#include <set>

#include "tid/matrix_id.hpp"
#include "tid/tensor.hpp"

namespace tid {

/// Satellite interpolative decomposition output. J_i holds k_i multi-indices
/// over the complementary modes (ascending mode order, matching the flatten
/// convention); satellite T_i stacks the corresponding fibers verbatim.
struct SatIdResult {
    std::vector<std::vector<MultiIndex>> indexSets;
    std::vector<Eigen::MatrixXd> satellites;  // T_i, n_i x k_i
    std::variant<DenseTensor, CpTensor> core;
};

/// Optimal core for fixed satellites: T contracted with pinv(T_i) mode by
/// mode (sparse ttm densifies progressively; pseudo-inverse truncation at
/// maxdim * ulp * sigma_max).
DenseTensor solve_core(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& satellites,
                       Index cap = kDenseCapDefault);
DenseTensor solve_core(const SparseTensorCoo& t, const std::vector<Eigen::MatrixXd>& satellites,
                       Index cap = kDenseCapDefault);

/// Independent matrix ID on each mode flattening, then the optimal core.
SatIdResult satid_generic(const DenseTensor& t, const std::vector<Index>& ranks,
                          const MethodChoice& method);

/// Exact or sketched conditional scores for the marginalized CP sampler:
/// column norms of S mat_{.,1} cp(w, A_1..A_l). sketchDim 0 computes exact
/// scores through the CP Gram.
Eigen::VectorXd cp_conditional_scores(const Eigen::VectorXd& w,
                                      const std::vector<const Eigen::MatrixXd*>& factors,
                                      Index sketchDim, SketchSeed seed);

/// One autoregressive index draw of the marginalized sampler. Returns
/// nullopt when every score is zero (degenerate remaining mass); banned
/// indices are masked before sampling.
std::optional<Index> cp_sample_index(const Eigen::VectorXd& w,
                                     const std::vector<const Eigen::MatrixXd*>& factors,
                                     Index sketchDim, SketchSeed seed, Rng& rng,
                                     const std::set<Index>* banned = nullptr);

/// Marginalized norm sampling of k fibers for one mode of a CP tensor.
/// Maintains a deflated copy of the mode factor so scores are residual
/// norms; may return fewer than k columns if the mass degenerates.
std::pair<std::vector<MultiIndex>, Eigen::MatrixXd> cp_sample_mode(const CpTensor& t, Index mode,
                                                                   Index k, Index sketchDim,
                                                                   Rng& rng);

/// SatID for CP tensors: cp_sample_mode per mode, CP core
/// cp(w, pinv(T_1) H_1, ..., pinv(T_d) H_d).
SatIdResult satid_cp(const CpTensor& t, const std::vector<Index>& ranks, Index sketchDim,
                     std::uint64_t seed);

/// Direct column selection on a sparse flattening with `mode` as rows.
/// All-zero columns never appear; scores are downdated in one O(nnz) pass
/// per selection. Returns the selected multi-indices and the score of each
/// pick.
std::pair<std::vector<MultiIndex>, std::vector<double>> sparse_select_direct(
    const SparseTensorCoo& t, Index mode, Index k, Method method, double tol, Rng& rng);

/// Switch policy for the sketched-marginalized sampler: a level uses the
/// count sketch only when it shrinks the data it scores.
struct MarginSketchPolicy {
    enum class Mode { Auto, Always, Never } mode = Mode::Auto;
    double costMultiplier = 1.0;  // sketch when nnz(slice) > multiplier * m * n_s * n_target
};

/// Norm sampling of k multi-indices for one mode using count-sketch
/// marginalization, falling back to direct joint sampling at the level where
/// the sketch stops paying off. sketchDim values at least the merged extent
/// (or 0) select the exact identity sketch.
std::vector<MultiIndex> sparse_select_sketched(const SparseTensorCoo& t, Index mode, Index k,
                                               Index sketchDim, Rng& rng,
                                               const MarginSketchPolicy& policy = {});

/// Per-mode selection assembled for sparse tensors: direct (NormMax/NormSample)
/// or sketched-marginalized (sketchDim > 0, norm sampling) selection, fibers
/// as satellites, dense optimal core.
SatIdResult satid_sparse(const SparseTensorCoo& t, const std::vector<Index>& ranks,
                         const MethodChoice& method, Index sketchDim = 0,
                         const MarginSketchPolicy& policy = {}, Index cap = kDenseCapDefault);

/// Fiber of a sparse tensor along `mode` at the given complementary
/// multi-index (ascending mode order).
Eigen::VectorXd sparse_fiber(const SparseTensorCoo& t, Index mode, const MultiIndex& b);

/// Decode a flattening column index into the complementary multi-index.
MultiIndex decode_column_index(const Shape& shape, Index mode, Index col);

}  // namespace tid
