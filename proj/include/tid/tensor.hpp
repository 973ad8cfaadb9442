#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tid {

using Index = std::int64_t;
using Shape = std::vector<Index>;

/// Column index of a mode flattening: one 0-based entry per participating mode.
using MultiIndex = std::vector<Index>;

/// Thrown when a dense materialization would exceed the configured entry cap.
class ResourceLimitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Default cap on dense materializations (number of entries).
inline constexpr Index kDenseCapDefault = 100'000'000;

Index shape_product(const Shape& shape);
void check_dense_cap(Index total, Index cap, const char* what);

// ---------------------------------------------------------------------------
// Dense tensor, row-major (last index fastest)
// ---------------------------------------------------------------------------

struct DenseTensor {
    Shape shape;
    Eigen::VectorXd values;

    DenseTensor() = default;
    DenseTensor(Shape s, Eigen::VectorXd v);
    static DenseTensor zeros(Shape s);

    Index order() const { return static_cast<Index>(shape.size()); }
    Index size() const { return values.size(); }

    Index linear_index(const MultiIndex& idx) const;
    double at(const MultiIndex& idx) const { return values[linear_index(idx)]; }
    double& at(const MultiIndex& idx) { return values[linear_index(idx)]; }

    double frob_norm() const { return values.norm(); }
};

// ---------------------------------------------------------------------------
// Sparse tensor in coordinate format
// ---------------------------------------------------------------------------

/// Coordinates are stored flattened (nnz x d, row-major), strictly
/// lexicographically sorted with no duplicates; stored values are nonzero.
struct SparseTensorCoo {
    Shape shape;
    std::vector<Index> coords;
    Eigen::VectorXd values;

    SparseTensorCoo() = default;

    /// Canonicalize arbitrary entries: sort, sum duplicates, drop zeros.
    static SparseTensorCoo from_entries(Shape s, std::vector<MultiIndex> coordinates,
                                        std::vector<double> vals);

    Index order() const { return static_cast<Index>(shape.size()); }
    Index nnz() const { return values.size(); }
    Index coord(Index entry, Index mode) const { return coords[entry * order() + mode]; }

    double frob_norm() const { return values.norm(); }
};

// ---------------------------------------------------------------------------
// CP tensor: sum of rank-one terms
// ---------------------------------------------------------------------------

struct CpTensor {
    std::vector<Eigen::MatrixXd> factors;  // H_i, shape n_i x p
    Eigen::VectorXd weights;               // length p; defaults to all ones

    CpTensor() = default;
    explicit CpTensor(std::vector<Eigen::MatrixXd> f);
    CpTensor(std::vector<Eigen::MatrixXd> f, Eigen::VectorXd w);

    Index order() const { return static_cast<Index>(factors.size()); }
    Index rank_terms() const { return weights.size(); }
    Index mode_dim(Index i) const { return factors[static_cast<std::size_t>(i)].rows(); }
    Shape dims() const;
};

// ---------------------------------------------------------------------------
// Tucker approximation: core (dense, sparse, or CP) + satellite matrices
// ---------------------------------------------------------------------------

struct TuckerApprox {
    std::variant<DenseTensor, SparseTensorCoo, CpTensor> core;
    std::vector<Eigen::MatrixXd> satellites;  // U_i, shape n_i x k_i

    Shape core_shape() const;
    Shape full_shape() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Matrix flattening. Rows are indexed by rowModes (in the listed order,
/// row-major); columns by the complementary modes in ascending order,
/// row-major. The linearization convention is fixed here and selected
/// multi-indices elsewhere in the library depend on it.
Eigen::MatrixXd flatten(const DenseTensor& t, const std::vector<Index>& rowModes);

/// Inverse of flatten for the same rowModes.
DenseTensor unflatten(const Eigen::MatrixXd& m, const Shape& shape,
                      const std::vector<Index>& rowModes);

/// Mode-j contraction: replaces extent n_j with M.rows(); M is k x n_j.
DenseTensor mode_contract(const DenseTensor& t, Index mode, const Eigen::MatrixXd& m);

/// Materialize a Tucker contraction. Intermediates are checked against cap.
DenseTensor tucker_reconstruct(const TuckerApprox& a, Index cap = kDenseCapDefault);

/// Materialize a CP tensor.
DenseTensor cp_materialize(const CpTensor& t, Index cap = kDenseCapDefault);

/// Exact Gram of the columns of the mode-i flattening of a CP tensor:
/// H_i (w w^T .* prod_{j != i} H_j^T H_j) H_i^T, computed without
/// materialization.
Eigen::MatrixXd cp_flatten_gram(const CpTensor& t, Index mode);

/// Order-(d-1) slice of a sparse tensor at the given mode/index.
SparseTensorCoo sparse_slice(const SparseTensorCoo& t, Index mode, Index index);

/// Row of the Khatri-Rao product: elementwise product over factors of the
/// idx-selected rows. One index per factor; returns a length-p vector.
Eigen::VectorXd khatri_rao_row(const std::vector<const Eigen::MatrixXd*>& factors,
                               const MultiIndex& idx);

// Helpers shared by the algorithm modules.

/// Restrict a mode to an ordered index list; output extent j maps to keep[j].
SparseTensorCoo sparse_restrict(const SparseTensorCoo& t, Index mode,
                                const std::vector<Index>& keep);

DenseTensor sparse_to_dense(const SparseTensorCoo& t, Index cap = kDenseCapDefault);

/// Sparse tensor-times-matrix producing a dense result with mode extent M.rows().
DenseTensor sparse_ttm(const SparseTensorCoo& t, Index mode, const Eigen::MatrixXd& m,
                       Index cap = kDenseCapDefault);

/// Materialize whichever representation the Tucker core uses.
DenseTensor materialize_core(const TuckerApprox& a, Index cap = kDenseCapDefault);

/// Row strides of a row-major layout for the given shape.
std::vector<Index> row_major_strides(const Shape& shape);

}  // namespace tid
