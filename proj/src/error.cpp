#include "tid/error.hpp"

#include "tid/sketch.hpp"

#include <algorithm>
#include <numeric>

namespace tid {

namespace {

double safe_relative(double absErr, double norm) {
    if (norm > 0.0) return absErr / norm;
    return absErr == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

ErrorReport subtract_report(const DenseTensor& dense, const TuckerApprox& approx, Index cap) {
    DenseTensor rec = tucker_reconstruct(approx, cap);
    if (rec.shape != dense.shape) throw std::invalid_argument("approximation shape mismatch");
    const double abs = (dense.values - rec.values).norm();
    return ErrorReport{abs, safe_relative(abs, dense.frob_norm()), "exact", {}};
}

/// <core x_i G_i, core> with G_i = U_i^T U_i, i.e. ||tucker(core, U)||^2.
double tucker_norm_sq(const TuckerApprox& approx, Index cap) {
    DenseTensor core = materialize_core(approx, cap);
    DenseTensor cur = core;
    for (std::size_t i = 0; i < approx.satellites.size(); ++i) {
        const Eigen::MatrixXd g = approx.satellites[i].transpose() * approx.satellites[i];
        cur = mode_contract(cur, static_cast<Index>(i), g);
    }
    return cur.values.dot(core.values);
}

}  // namespace

ErrorReport exact_rel_error(const DenseTensor& t, const TuckerApprox& approx, Index cap) {
    return subtract_report(t, approx, cap);
}

ErrorReport exact_rel_error_structured(const SparseTensorCoo& t, const TuckerApprox& approx,
                                       Index cap) {
    const Shape full = approx.full_shape();
    if (full != t.shape) throw std::invalid_argument("approximation shape mismatch");
    const double normSqT = t.values.squaredNorm();

    // <T, That> = <T projected through the satellites, core>
    const Index d = t.order();
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return t.shape[static_cast<std::size_t>(a)] - approx.satellites[static_cast<std::size_t>(a)].cols() >
               t.shape[static_cast<std::size_t>(b)] - approx.satellites[static_cast<std::size_t>(b)].cols();
    });
    DenseTensor proj = sparse_ttm(
        t, order[0], approx.satellites[static_cast<std::size_t>(order[0])].transpose(), cap);
    for (std::size_t i = 1; i < order.size(); ++i)
        proj = mode_contract(proj, order[i],
                             approx.satellites[static_cast<std::size_t>(order[i])].transpose());
    DenseTensor core = materialize_core(approx, cap);
    const double cross = proj.values.dot(core.values);

    const double normSqHat = tucker_norm_sq(approx, cap);
    const double errSq = std::max(0.0, normSqT - 2.0 * cross + normSqHat);
    const double abs = std::sqrt(errSq);
    return ErrorReport{abs, safe_relative(abs, std::sqrt(normSqT)), "exact", {}};
}

ErrorReport exact_rel_error(const SparseTensorCoo& t, const TuckerApprox& approx, Index cap) {
    if (shape_product(t.shape) <= cap)
        return subtract_report(sparse_to_dense(t, cap), approx, cap);
    return exact_rel_error_structured(t, approx, cap);
}

ErrorReport exact_rel_error(const CpTensor& t, const TuckerApprox& approx, Index cap) {
    const Index total = shape_product(t.dims());
    if (total <= cap) return subtract_report(cp_materialize(t, cap), approx, cap);

    // structured expansion for CP sources
    Eigen::MatrixXd g = t.weights * t.weights.transpose();
    for (const auto& h : t.factors) g = g.cwiseProduct((h.transpose() * h).eval());
    const double normSqT = std::max(0.0, g.sum());

    std::vector<Eigen::MatrixXd> projFactors(t.factors.size());
    for (std::size_t i = 0; i < t.factors.size(); ++i)
        projFactors[i] = approx.satellites[i].transpose() * t.factors[i];
    DenseTensor proj = cp_materialize(CpTensor(std::move(projFactors), t.weights), cap);
    DenseTensor core = materialize_core(approx, cap);
    const double cross = proj.values.dot(core.values);

    const double normSqHat = tucker_norm_sq(approx, cap);
    const double errSq = std::max(0.0, normSqT - 2.0 * cross + normSqHat);
    const double abs = std::sqrt(errSq);
    return ErrorReport{abs, safe_relative(abs, std::sqrt(normSqT)), "exact", {}};
}

// ---------------------------------------------------------------------------
// Randomized error estimation
// ---------------------------------------------------------------------------

ErrorReport sketched_rel_error(const SparseTensorCoo& t, const TuckerApprox& approx, Index m,
                               std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sketch dimension must be positive");
    if (approx.full_shape() != t.shape) throw std::invalid_argument("approximation shape mismatch");
    const Index d = t.order();
    KfjltOp op(m, t.shape, SketchSeed{seed, 0x657272ULL});

    // sparse side, pointwise
    Eigen::VectorXd sT = Eigen::VectorXd::Zero(m);
    for (Index e = 0; e < t.nnz(); ++e) {
        const double v = t.values[e];
        for (Index s = 0; s < m; ++s) {
            double w = v;
            for (Index j = 0; j < d; ++j)
                w *= op.transform_entry(static_cast<std::size_t>(j),
                                        op.sampled_row(s, static_cast<std::size_t>(j)),
                                        t.coord(e, j));
            sT[s] += w;
        }
    }
    sT *= op.scale();

    // Tucker side: sketch the satellites, then contract the core
    DenseTensor core = materialize_core(approx);
    std::vector<Eigen::MatrixXd> g(approx.satellites.size());
    for (std::size_t i = 0; i < approx.satellites.size(); ++i)
        g[i] = op.transform_factor(i, approx.satellites[i]);  // pad_i x k_i
    Eigen::VectorXd sHat(m);
    for (Index s = 0; s < m; ++s) {
        DenseTensor cur = core;
        for (Index j = 0; j < d; ++j) {
            Eigen::MatrixXd row = g[static_cast<std::size_t>(j)]
                                      .row(op.sampled_row(s, static_cast<std::size_t>(j)));
            cur = mode_contract(cur, j, row);
        }
        sHat[s] = cur.values[0];
    }
    sHat *= op.scale();

    const double abs = (sT - sHat).norm();
    const double base = sT.norm();
    ErrorReport rep;
    rep.absoluteError = abs;
    rep.relativeError = safe_relative(abs, base);
    rep.method = "sketched(m=" + std::to_string(m) + ",seed=" + std::to_string(seed) + ")";
    return rep;
}

// ---------------------------------------------------------------------------
// ST-HOSVD baseline
// ---------------------------------------------------------------------------

TuckerApprox hosvd_baseline(const DenseTensor& t, const std::vector<Index>& ranks, Index cap) {
    const Index d = t.order();
    if (static_cast<Index>(ranks.size()) != d)
        throw std::invalid_argument("rank vector length must equal tensor order");
    check_dense_cap(t.size(), cap, "hosvd_baseline");
    TuckerApprox out;
    out.satellites.resize(static_cast<std::size_t>(d));
    DenseTensor cur = t;
    for (Index mode = 0; mode < d; ++mode) {
        const Index k = ranks[static_cast<std::size_t>(mode)];
        if (k < 1 || k > t.shape[static_cast<std::size_t>(mode)])
            throw std::invalid_argument("rank out of range");
        Eigen::MatrixXd m = flatten(cur, {mode});
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
        Eigen::MatrixXd u = svd.matrixU().leftCols(std::min(k, svd.matrixU().cols()));
        if (u.cols() < k) {
            // pad with zero directions when the flattening rank is deficient
            Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(u.rows(), k);
            padded.leftCols(u.cols()) = u;
            u = padded;
        }
        out.satellites[static_cast<std::size_t>(mode)] = u;
        cur = mode_contract(cur, mode, u.transpose());
    }
    out.core = cur;
    return out;
}

}  // namespace tid
