#pragma once

#include <Eigen/Dense>

#include "tid/rng.hpp"
#include "tid/tensor.hpp"

namespace tid {

// ---------------------------------------------------------------------------
// Count sketch
// ---------------------------------------------------------------------------

/// Hashing-and-signs sketch. The bucket and sign maps are evaluated lazily
/// from the keyed generator, so the operator is O(1) memory regardless of
/// input dimension.
class CountSketchOp {
  public:
    CountSketchOp(Index m, Index inputDim, SketchSeed seed);

    Index m() const { return m_; }
    Index input_dim() const { return inputDim_; }

    Index bucket(Index i) const;
    double sign(Index i) const;

    /// Materialize as a dense m x inputDim matrix (test oracles only).
    Eigen::MatrixXd materialize() const;

  private:
    Index m_;
    Index inputDim_;
    SketchSeed seed_;
};

/// S * A via row bucket accumulation with signs; cost O(rows x cols).
Eigen::MatrixXd count_sketch_apply_matrix(const CountSketchOp& s, const Eigen::MatrixXd& a);

/// Joint count-sketch hash of a coordinate tuple (the merged-mode hash used
/// when several tensor modes are sketched into one).
Index joint_bucket(SketchSeed seed, const Index* coords, std::size_t n, Index m);
double joint_sign(SketchSeed seed, const Index* coords, std::size_t n);

/// Bucket and sign in one pass over the tuple.
std::pair<Index, double> joint_bucket_sign(SketchSeed seed, const Index* coords, std::size_t n,
                                           Index m);

/// Merge the listed modes into a single sketched mode of extent m (placed at
/// the position of the first listed mode); other modes are untouched.
/// One pass over nonzeros; collisions accumulate.
SparseTensorCoo count_sketch_apply_modes(const SparseTensorCoo& t, const std::vector<Index>& modes,
                                         Index m, SketchSeed seed);

// ---------------------------------------------------------------------------
// Subsampled randomized Hadamard transform (the FJLT realization used here)
// ---------------------------------------------------------------------------

/// Rademacher diagonal + fast Walsh-Hadamard transform + row subsample
/// (without replacement), zero-padded to a power of two. Squared norms are
/// preserved in expectation; exactly when m == padDim.
class SrhtOp {
  public:
    SrhtOp(Index m, Index inputDim, SketchSeed seed);

    Index m() const { return static_cast<Index>(rows_.size()); }
    Index input_dim() const { return inputDim_; }
    Index pad_dim() const { return padDim_; }
    const std::vector<Index>& rows() const { return rows_; }

    double sign(Index i) const;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd materialize() const;

  private:
    Index inputDim_;
    Index padDim_;
    SketchSeed seed_;
    std::vector<Index> rows_;  // sorted ascending
    double scale_;
};

inline Eigen::MatrixXd srht_apply(const SrhtOp& s, const Eigen::MatrixXd& x) { return s.apply(x); }

/// In-place unnormalized fast Walsh-Hadamard transform of each column;
/// x.rows() must be a power of two.
void fwht_columns(Eigen::MatrixXd& x);

Index pad_to_pow2(Index n);

// ---------------------------------------------------------------------------
// Kronecker FJLT
// ---------------------------------------------------------------------------

/// Per-factor SRHT components combined by sampling m row multi-indices of the
/// Kronecker product with replacement; scale sqrt(prod padDim_j / m) on the
/// per-factor-normalized transforms.
class KfjltOp {
  public:
    KfjltOp(Index m, const std::vector<Index>& factorDims, SketchSeed seed);

    Index m() const { return m_; }
    const std::vector<Index>& factor_dims() const { return factorDims_; }
    Index sampled_row(Index t, std::size_t factor) const {
        return sampledRows_[static_cast<std::size_t>(t) * factorDims_.size() + factor];
    }
    double scale() const { return scale_; }

    /// Sign-flipped, padded, normalized Hadamard transform of one factor:
    /// padDim_j x cols. Row r of the result is the r-th transform row applied
    /// to the factor's columns.
    Eigen::MatrixXd transform_factor(std::size_t factor, const Eigen::MatrixXd& h) const;

    /// Single entry of the normalized per-factor transform (row `row`,
    /// input coordinate i); lets sparse data be sketched pointwise.
    double transform_entry(std::size_t factor, Index row, Index i) const;

    /// Apply to the Khatri-Rao columns of a CP flattening: factor j
    /// contributes rows, output column k is the KFJLT image of
    /// w_k * kron_j h_j[:, k]; returns m x p.
    Eigen::MatrixXd apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                             const Eigen::VectorXd& weights) const;

    /// Materialize as m x prod(factorDims) (test oracles only).
    Eigen::MatrixXd materialize() const;

  private:
    Index m_;
    std::vector<Index> factorDims_;
    std::vector<Index> padDims_;
    SketchSeed seed_;
    std::vector<Index> sampledRows_;  // m x nfactors, row-major
    double scale_;
};

/// Convenience wrapper: KFJLT of the mode-i flattening columns of a CP tensor
/// given the factors excluding mode i (in ascending mode order).
Eigen::MatrixXd kfjlt_apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                               const Eigen::VectorXd& weights, Index m, SketchSeed seed);

// ---------------------------------------------------------------------------
// Tensor sketch
// ---------------------------------------------------------------------------

/// Per-factor count sketches combined by circular convolution; the output
/// dimension m is independent of the number of factors.
class TensorSketchOp {
  public:
    TensorSketchOp(Index m, const std::vector<Index>& factorDims, SketchSeed seed);

    Index m() const { return m_; }

    Eigen::MatrixXd apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                             const Eigen::VectorXd& weights) const;

    Eigen::MatrixXd materialize() const;

  private:
    Index m_;
    std::vector<Index> factorDims_;
    std::vector<CountSketchOp> components_;
};

Eigen::MatrixXd tensor_sketch_apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                                       const Eigen::VectorXd& weights, Index m, SketchSeed seed);

// ---------------------------------------------------------------------------
// Composed sketch network for sparse CoreID
// ---------------------------------------------------------------------------

struct SparseNetDims {
    Index m1 = 400;   // outer sketch (optional)
    Index m2 = 400;   // KFJLT over processed modes
    Index m3 = 2000;  // count sketch over trailing modes
    enum class Outer { Srht, CountSketch } outer = Outer::Srht;
};

/// Sketch of the columns of mat_{.,target}(T_{J_1..J_s,...} x_i carry_i),
/// computed as S_1 (S_2 (x) S_3) without materializing the flattening:
/// count sketch on the unprocessed non-target modes (one pass over
/// nonzeros), contraction with the m2 rank-one rows of the KFJLT over the
/// processed modes, then the optional outer sketch. S_2 is omitted when no
/// modes are processed, S_3 when every non-target mode is processed, and
/// S_1 when the stacked row count is already <= m1.
Eigen::MatrixXd sparse_sketch_network(const SparseTensorCoo& t,
                                      const std::vector<Index>& processedModes,
                                      const std::vector<std::vector<Index>>& selected,
                                      const std::vector<Eigen::MatrixXd>& carry, Index targetMode,
                                      const SparseNetDims& dims, SketchSeed seed);

/// Seed of the network's component operator (1 = outer, 2 = KFJLT,
/// 3 = count sketch); lets oracles rebuild the exact operators.
SketchSeed sparse_net_component_seed(SketchSeed seed, int component);

// ---------------------------------------------------------------------------
// Empirical subspace-embedding distortion
// ---------------------------------------------------------------------------

/// Tightest delta for which the (already applied) sketch is a delta-SE of A:
/// max |sigma^2 - 1| over singular values of S U, U an orthonormal basis of
/// col(A). sa must be the sketch applied to A itself; rank-deficient A is
/// handled by basis truncation at relative tolerance rankTol.
double empirical_se_distortion(const Eigen::MatrixXd& sa, const Eigen::MatrixXd& a,
                               double rankTol = -1.0);

}  // namespace tid
