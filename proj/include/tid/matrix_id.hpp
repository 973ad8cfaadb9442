#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "tid/rng.hpp"
#include "tid/tensor.hpp"

namespace tid {

enum class Method { NormMax, NormSample, NuclearMax, Uniform };

struct MethodChoice {
    Method method = Method::NormMax;
    double tolerance = 1e-12;     // relative stopping threshold
    std::uint64_t rngSeed = 0;
};

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/// Output of a matrix ID: ordered selected column indices J (|J| <= k) plus
/// interpolation coefficients X with A ~ A[:,J] X.
struct SelectionResult {
    std::vector<Index> indices;
    Eigen::MatrixXd coeffs;           // |J| x n, may be empty if not solved
    std::vector<double> scoresTrace;  // selected score per step
};

/// Greedy column-pivoted QR: repeatedly pick the column with the largest
/// squared residual norm, orthonormalize it into the basis (CGS2), and
/// downdate every score. Stops early once the best score falls to
/// tol * ||B||_F^2. Ties break to the lowest index.
SelectionResult norm_max_select(const Eigen::MatrixXd& b, Index k, double tol = 1e-12);

/// Randomly pivoted QR: same deflation, but the pick is sampled with
/// probability proportional to the residual scores.
SelectionResult norm_sample_select(const Eigen::MatrixXd& b, Index k, double tol, Rng& rng);

/// Greedy nuclear maximization on the Gram matrix K = B^T B: pick
/// argmax_j ||K_{:,j}||^2 / K_jj, then deflate K by the selected column.
/// The score equals the one-step reduction in posterior reconstruction error.
SelectionResult nuclear_max_select(const Eigen::MatrixXd& b, Index k, double tol = 1e-12);

/// Gram-only variant; coefficients are solved from the Gram matrix so CP
/// inputs never materialize the flattening.
SelectionResult nuclear_max_select_gram(Eigen::MatrixXd k_gram, Index k, double tol = 1e-12);

/// k distinct indices uniformly without replacement.
SelectionResult uniform_select(Index n, Index k, Rng& rng);

/// Least-squares interpolation coefficients X = argmin ||A[:,J] X - A||_F.
/// Rank-deficient A[:,J] yields the minimum-norm solution with singular
/// values below maxdim * ulp * sigma_max truncated.
Eigen::MatrixXd interpolation_coeffs(const Eigen::MatrixXd& a, const std::vector<Index>& j);

/// Run the chosen selection on an already-formed (possibly sketched) matrix
/// and solve coefficients on it.
SelectionResult select_columns(const Eigen::MatrixXd& b, const MethodChoice& method, Index k,
                               Rng& rng, bool solveCoeffs = true);

struct SketchConfig {
    enum class Kind { None, Gaussian, Srht } kind = Kind::None;
    Index m = 0;  // 0 picks max(4k, 64)

    static SketchConfig none() { return {}; }
    static SketchConfig gaussian(Index m = 0) { return {Kind::Gaussian, m}; }
    static SketchConfig srht(Index m = 0) { return {Kind::Srht, m}; }
};

Index default_sketch_dim(Index k);

/// Sketched QR-based matrix ID on a dense matrix: generate one sketch up
/// front, compute B = S A once, select on B, and return the sketched
/// least-squares coefficients. exactRefit re-solves X on A for the chosen J.
SelectionResult sketched_matrix_id(const Eigen::MatrixXd& a, Index k, const MethodChoice& method,
                                   const SketchConfig& sketch, bool exactRefit = false);

/// Sample an index proportionally to nonnegative scores; -1 when the total
/// mass is not positive. Entries below floor are treated as zero.
Index sample_proportional(Rng& rng, const Eigen::VectorXd& scores, double floor = 0.0);

/// Append one vector to an orthonormal basis using classical Gram-Schmidt
/// with one reorthogonalization pass. Returns false when the vector is
/// numerically inside the span.
bool cgs2_append(Eigen::MatrixXd& q, Index used, const Eigen::VectorXd& v, Eigen::VectorXd& out);

/// Moore-Penrose pseudoinverse with relative singular value truncation.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rankTol = -1.0);

}  // namespace tid
