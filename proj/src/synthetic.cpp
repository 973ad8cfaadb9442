#include "tid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tid {

CpTensor gen_synthetic_cp(const SyntheticCpConfig& cfg) {
    if (cfg.n < 1 || cfg.p < 1 || cfg.r < 1 || cfg.d < 1)
        throw std::invalid_argument("generator parameters must be positive");
    if (cfg.zeroRowFrac < 0.0 || cfg.zeroRowFrac >= 1.0)
        throw std::invalid_argument("zeroRowFrac must lie in [0, 1)");
    Rng rng{SketchSeed{cfg.seed, 0x67656eULL}};

    const Index dn = cfg.d * cfg.n;
    Eigen::MatrixXd means(dn, cfg.r);
    for (Index c = 0; c < cfg.r; ++c)
        for (Index i = 0; i < dn; ++i) means(i, c) = rng.normal();

    Eigen::VectorXd mixWeights(cfg.r);
    for (Index c = 0; c < cfg.r; ++c) mixWeights[c] = 1.0 + 9.0 * rng.uniform01();
    mixWeights /= mixWeights.sum();

    const Index noiseCount = std::min<Index>(
        cfg.p, static_cast<Index>(std::llround(cfg.noiseFrac * static_cast<double>(cfg.p))));
    const Index signalCount = cfg.p - noiseCount;

    std::vector<Eigen::MatrixXd> factors(static_cast<std::size_t>(cfg.d),
                                         Eigen::MatrixXd(cfg.n, cfg.p));
    for (Index s = 0; s < signalCount; ++s) {
        // pick a mixture component from the normalized weights
        double u = rng.uniform01();
        Index comp = cfg.r - 1;
        double acc = 0.0;
        for (Index c = 0; c < cfg.r; ++c) {
            acc += mixWeights[c];
            if (u < acc) {
                comp = c;
                break;
            }
        }
        for (Index i = 0; i < dn; ++i) {
            const double v = means(i, comp) + cfg.sigma * rng.normal();
            factors[static_cast<std::size_t>(i / cfg.n)](i % cfg.n, s) = v;
        }
    }
    for (Index s = signalCount; s < cfg.p; ++s)
        for (Index i = 0; i < dn; ++i)
            factors[static_cast<std::size_t>(i / cfg.n)](i % cfg.n, s) = rng.normal();

    const Index zeroRows = static_cast<Index>(
        std::ceil(cfg.zeroRowFrac * static_cast<double>(cfg.n)));
    for (auto& h : factors) {
        std::vector<Index> rows(static_cast<std::size_t>(cfg.n));
        std::iota(rows.begin(), rows.end(), Index{0});
        for (Index z = 0; z < zeroRows; ++z) {
            const Index r = z + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cfg.n - z)));
            std::swap(rows[static_cast<std::size_t>(z)], rows[static_cast<std::size_t>(r)]);
            h.row(rows[static_cast<std::size_t>(z)]).setZero();
        }
    }
    return CpTensor(std::move(factors));
}

Eigen::MatrixXd gen_counterexample_matrix(Index n, double m) {
    if (n < 3) throw std::invalid_argument("counterexample needs n >= 3");
    if (m <= 1.0) throw std::invalid_argument("counterexample needs M > 1");
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, m);
    a.row(0).setOnes();
    a.col(0).setOnes();
    a.diagonal().tail(n - 1).setZero();
    return a;
}

DenseTensor gen_low_rank_dense(const Shape& shape, const std::vector<Index>& ranks, Rng& rng) {
    if (shape.size() != ranks.size()) throw std::invalid_argument("shape/rank length mismatch");
    DenseTensor core = DenseTensor::zeros(Shape(ranks.begin(), ranks.end()));
    for (Index i = 0; i < core.size(); ++i) core.values[i] = rng.normal();
    DenseTensor cur = core;
    for (std::size_t mode = 0; mode < shape.size(); ++mode) {
        Eigen::MatrixXd u(shape[mode], ranks[mode]);
        for (Index r = 0; r < u.rows(); ++r)
            for (Index c = 0; c < u.cols(); ++c) u(r, c) = rng.normal();
        cur = mode_contract(cur, static_cast<Index>(mode), u);
    }
    return cur;
}

SparseTensorCoo gen_random_sparse(const Shape& shape, double fill, Rng& rng) {
    const Index total = shape_product(shape);
    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    const Index target = std::max<Index>(1, static_cast<Index>(fill * static_cast<double>(total)));
    for (Index e = 0; e < target; ++e) {
        MultiIndex c(shape.size());
        for (std::size_t j = 0; j < shape.size(); ++j)
            c[j] = static_cast<Index>(rng.below(static_cast<std::uint64_t>(shape[j])));
        coords.push_back(std::move(c));
        vals.push_back(2.0 * rng.uniform01() - 1.0);
    }
    return SparseTensorCoo::from_entries(shape, std::move(coords), std::move(vals));
}

}  // namespace tid
