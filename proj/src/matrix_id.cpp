#include "tid/matrix_id.hpp"

#include "tid/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tid {

const char* method_name(Method m) {
    switch (m) {
        case Method::NormMax: return "normmax";
        case Method::NormSample: return "normsample";
        case Method::NuclearMax: return "nuclear";
        case Method::Uniform: return "uniform";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "normmax") return Method::NormMax;
    if (name == "normsample") return Method::NormSample;
    if (name == "nuclear") return Method::NuclearMax;
    if (name == "uniform") return Method::Uniform;
    return std::nullopt;
}

Index sample_proportional(Rng& rng, const Eigen::VectorXd& scores, double floor) {
    double total = 0.0;
    for (Index i = 0; i < scores.size(); ++i)
        if (scores[i] > floor) total += scores[i];
    if (total <= 0.0) return -1;
    double u = rng.uniform01() * total;
    double acc = 0.0;
    Index last = -1;
    for (Index i = 0; i < scores.size(); ++i) {
        if (scores[i] <= floor) continue;
        acc += scores[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

bool cgs2_append(Eigen::MatrixXd& q, Index used, const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    const double vnorm = v.norm();
    if (vnorm == 0.0) return false;
    Eigen::VectorXd w = v;
    for (int pass = 0; pass < 2; ++pass)
        if (used > 0) w -= q.leftCols(used) * (q.leftCols(used).transpose() * w).eval();
    const double wnorm = w.norm();
    if (wnorm <= 1e-12 * vnorm) return false;
    out = w / wnorm;
    return true;
}

namespace {

/// Shared driver for norm maximization / norm sampling (eq. of squared
/// residual column norms with Gram-Schmidt downdating).
SelectionResult norm_select_impl(const Eigen::MatrixXd& b, Index k, double tol, Rng* rng) {
    const Index n = b.cols();
    if (k > n) throw std::invalid_argument("selection rank exceeds column count");
    SelectionResult res;
    if (k == 0 || b.size() == 0) return res;

    Eigen::VectorXd scores = b.colwise().squaredNorm();
    const double froSq = scores.sum();
    const double stop = tol * froSq;

    Eigen::MatrixXd q(b.rows(), k);
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd qcol;
    for (Index step = 0; step < k; ++step) {
        Index pick = -1;
        if (rng == nullptr) {
            double best = stop;
            for (Index i = 0; i < n; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                if (scores[i] > best) {
                    best = scores[i];
                    pick = i;
                }
            }
        } else {
            Eigen::VectorXd masked = scores;
            for (Index i = 0; i < n; ++i)
                if (taken[static_cast<std::size_t>(i)] || masked[i] <= stop) masked[i] = 0.0;
            pick = sample_proportional(*rng, masked);
        }
        if (pick < 0) break;  // residual exhausted

        if (!cgs2_append(q, step, b.col(pick), qcol)) break;
        q.col(step) = qcol;
        res.indices.push_back(pick);
        res.scoresTrace.push_back(scores[pick]);
        taken[static_cast<std::size_t>(pick)] = 1;

        const Eigen::VectorXd proj = b.transpose() * qcol;
        scores -= proj.cwiseProduct(proj);
    }
    return res;
}

SelectionResult nuclear_select_impl(Eigen::MatrixXd k_gram, Index k, double tol,
                                    bool checkPsd) {
    const Index n = k_gram.cols();
    if (k_gram.rows() != n) throw std::invalid_argument("Gram matrix must be square");
    if (k > n) throw std::invalid_argument("selection rank exceeds column count");
    const double trace = k_gram.trace();
    if (checkPsd) {
        const double scale = std::max(trace, 1.0);
        if ((k_gram - k_gram.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
            throw std::invalid_argument("Gram matrix must be symmetric");
        if (k_gram.diagonal().minCoeff() < -1e-10 * scale)
            throw std::invalid_argument("Gram matrix must be positive semidefinite");
    }

    SelectionResult res;
    if (k == 0 || n == 0) return res;
    const double diagFloor = tol * trace;
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd scores(n);
    for (Index step = 0; step < k; ++step) {
        double best = 0.0;
        double curTrace = 0.0;
        for (Index j = 0; j < n; ++j) {
            scores[j] = 0.0;
            if (taken[static_cast<std::size_t>(j)]) continue;
            const double dj = k_gram(j, j);
            if (dj <= diagFloor || dj <= 0.0) continue;
            curTrace += dj;
            scores[j] = k_gram.col(j).squaredNorm() / dj;
            best = std::max(best, scores[j]);
        }
        // Once the deflated Gram collapses to rank one, every remaining
        // score equals the trace and the candidates tie mathematically
        // (any of them removes all remaining energy); the floating-point
        // noise among them is meaningless, so break the tie toward the
        // largest residual diagonal to keep the selected columns well
        // conditioned. Outside the collapse, ties break to the lowest index.
        const bool rankOneCollapse = best >= curTrace * (1.0 - 1e-4);
        const double band = best * (rankOneCollapse ? 1e-4 : 1e-12);
        Index pick = -1;
        double pickDiag = -1.0;
        for (Index j = 0; j < n; ++j) {
            if (scores[j] <= 0.0 || scores[j] < best - band) continue;
            if (k_gram(j, j) > pickDiag * (1.0 + 1e-12)) {
                pick = j;
                pickDiag = k_gram(j, j);
            }
        }
        if (pick < 0) break;
        res.indices.push_back(pick);
        res.scoresTrace.push_back(scores[pick]);
        taken[static_cast<std::size_t>(pick)] = 1;
        const Eigen::VectorXd col = k_gram.col(pick);
        k_gram -= (col / k_gram(pick, pick)) * col.transpose();
    }
    return res;
}

/// Coefficients from a Gram matrix: X = pinv(K[J,J]) K[J,:], the
/// minimum-norm solution of the normal equations.
Eigen::MatrixXd coeffs_from_gram(const Eigen::MatrixXd& k_gram, const std::vector<Index>& j) {
    const Index q = static_cast<Index>(j.size());
    Eigen::MatrixXd kjj(q, q);
    Eigen::MatrixXd kjn(q, k_gram.cols());
    for (Index a = 0; a < q; ++a) {
        kjn.row(a) = k_gram.row(j[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < q; ++b)
            kjj(a, b) = k_gram(j[static_cast<std::size_t>(a)], j[static_cast<std::size_t>(b)]);
    }
    return pinv(kjj) * kjn;
}

}  // namespace

SelectionResult norm_max_select(const Eigen::MatrixXd& b, Index k, double tol) {
    SelectionResult res = norm_select_impl(b, k, tol, nullptr);
    if (!res.indices.empty()) res.coeffs = interpolation_coeffs(b, res.indices);
    return res;
}

SelectionResult norm_sample_select(const Eigen::MatrixXd& b, Index k, double tol, Rng& rng) {
    SelectionResult res = norm_select_impl(b, k, tol, &rng);
    if (!res.indices.empty()) res.coeffs = interpolation_coeffs(b, res.indices);
    return res;
}

SelectionResult nuclear_max_select(const Eigen::MatrixXd& b, Index k, double tol) {
    Eigen::MatrixXd gram = b.transpose() * b;
    SelectionResult res = nuclear_select_impl(gram, k, tol, false);
    if (!res.indices.empty()) res.coeffs = interpolation_coeffs(b, res.indices);
    return res;
}

SelectionResult nuclear_max_select_gram(Eigen::MatrixXd k_gram, Index k, double tol) {
    Eigen::MatrixXd original = k_gram;
    SelectionResult res = nuclear_select_impl(std::move(k_gram), k, tol, true);
    if (!res.indices.empty()) res.coeffs = coeffs_from_gram(original, res.indices);
    return res;
}

SelectionResult uniform_select(Index n, Index k, Rng& rng) {
    if (k > n) throw std::invalid_argument("selection rank exceeds column count");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    SelectionResult res;
    for (Index step = 0; step < k; ++step) {
        const Index r = step + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - step)));
        std::swap(pool[static_cast<std::size_t>(step)], pool[static_cast<std::size_t>(r)]);
        res.indices.push_back(pool[static_cast<std::size_t>(step)]);
        res.scoresTrace.push_back(1.0);
    }
    return res;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& a, double rankTol) {
    if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (rankTol < 0.0)
        rankTol = static_cast<double>(std::max(a.rows(), a.cols())) *
                  std::numeric_limits<double>::epsilon();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rankTol * sv(0)) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd interpolation_coeffs(const Eigen::MatrixXd& a, const std::vector<Index>& j) {
    if (j.empty()) throw std::invalid_argument("interpolation_coeffs: empty index set");
    Eigen::MatrixXd sub(a.rows(), static_cast<Index>(j.size()));
    for (std::size_t c = 0; c < j.size(); ++c) {
        if (j[c] < 0 || j[c] >= a.cols())
            throw std::invalid_argument("interpolation_coeffs: index out of range");
        sub.col(static_cast<Index>(c)) = a.col(j[c]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(static_cast<double>(std::max(a.rows(), sub.cols())) *
                     std::numeric_limits<double>::epsilon());
    return svd.solve(a);
}

SelectionResult select_columns(const Eigen::MatrixXd& b, const MethodChoice& method, Index k,
                               Rng& rng, bool solveCoeffs) {
    SelectionResult res;
    switch (method.method) {
        case Method::NormMax:
            res = norm_select_impl(b, k, method.tolerance, nullptr);
            break;
        case Method::NormSample:
            res = norm_select_impl(b, k, method.tolerance, &rng);
            break;
        case Method::NuclearMax: {
            Eigen::MatrixXd gram = b.transpose() * b;
            res = nuclear_select_impl(std::move(gram), k, method.tolerance, false);
            break;
        }
        case Method::Uniform:
            res = uniform_select(b.cols(), k, rng);
            break;
    }
    if (solveCoeffs && !res.indices.empty()) res.coeffs = interpolation_coeffs(b, res.indices);
    return res;
}

Index default_sketch_dim(Index k) { return std::max<Index>(4 * k, 64); }

SelectionResult sketched_matrix_id(const Eigen::MatrixXd& a, Index k, const MethodChoice& method,
                                   const SketchConfig& sketch, bool exactRefit) {
    Rng rng{SketchSeed{method.rngSeed, 0x1dULL}};
    const Index m = sketch.m > 0 ? sketch.m : default_sketch_dim(k);
    Eigen::MatrixXd b;
    switch (sketch.kind) {
        case SketchConfig::Kind::None:
            b = a;
            break;
        case SketchConfig::Kind::Gaussian: {
            Rng g = rng.split(0x6761);
            Eigen::MatrixXd s(m, a.rows());
            const double scale = 1.0 / std::sqrt(static_cast<double>(m));
            for (Index r = 0; r < m; ++r)
                for (Index c = 0; c < a.rows(); ++c) s(r, c) = scale * g.normal();
            b = s * a;
            break;
        }
        case SketchConfig::Kind::Srht: {
            SrhtOp op(m, a.rows(), SketchSeed{method.rngSeed, 0x5248ULL});
            b = op.apply(a);
            break;
        }
    }
    SelectionResult res = select_columns(b, method, k, rng);
    if (exactRefit && !res.indices.empty()) res.coeffs = interpolation_coeffs(a, res.indices);
    return res;
}

}  // namespace tid
