#include "tid/coreid.hpp"

#include <algorithm>
#include <numeric>

namespace tid {

namespace {

constexpr std::uint64_t kTagModeSketch = 0x636f7265ULL;
constexpr std::uint64_t kTagModeSelect = 0x73656c65ULL;

std::vector<Index> resolve_mode_order(std::vector<Index> order, Index d) {
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), Index{0});
        return order;
    }
    if (static_cast<Index>(order.size()) != d)
        throw std::invalid_argument("modeOrder must be a permutation of the modes");
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (Index m : order) {
        if (m < 0 || m >= d || seen[static_cast<std::size_t>(m)])
            throw std::invalid_argument("modeOrder must be a permutation of the modes");
        seen[static_cast<std::size_t>(m)] = true;
    }
    return order;
}

void check_ranks(const std::vector<Index>& ranks, const Shape& dims) {
    if (ranks.size() != dims.size())
        throw std::invalid_argument("rank vector length must equal tensor order");
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i] < 1) throw std::invalid_argument("ranks must be positive");
        if (ranks[i] > dims[i]) throw std::invalid_argument("rank exceeds mode extent");
    }
}

std::vector<Index> all_modes_except(Index d, Index skip) {
    std::vector<Index> modes;
    for (Index i = 0; i < d; ++i)
        if (i != skip) modes.push_back(i);
    return modes;
}

/// Extract the subtensor of t restricted to keep on one mode.
DenseTensor dense_restrict(const DenseTensor& t, Index mode, const std::vector<Index>& keep) {
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(static_cast<Index>(keep.size()),
                                                t.shape[static_cast<std::size_t>(mode)]);
    for (std::size_t j = 0; j < keep.size(); ++j) sel(static_cast<Index>(j), keep[j]) = 1.0;
    return mode_contract(t, mode, sel);
}

}  // namespace

std::vector<Index> CoreIdResult::realized_ranks() const {
    std::vector<Index> r(indexSets.size());
    for (std::size_t i = 0; i < indexSets.size(); ++i) r[i] = static_cast<Index>(indexSets[i].size());
    return r;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lq_factor(const Eigen::MatrixXd& x) {
    const Index k = x.rows();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x.transpose());
    Eigen::MatrixXd thinQ = qr.householderQ() * Eigen::MatrixXd::Identity(x.cols(), k);
    Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return {r.transpose(), thinQ.transpose()};  // L = R^T, rows of Q^T orthonormal
}

// ---------------------------------------------------------------------------
// Dense adaptive sequential path
// ---------------------------------------------------------------------------

CoreIdResult coreid_dense(const DenseTensor& t, const std::vector<Index>& ranks,
                          const MethodChoice& method, const SketchConfig& sketch,
                          std::vector<Index> modeOrder) {
    const Index d = t.order();
    check_ranks(ranks, t.shape);
    CoreIdResult res;
    res.modeOrder = resolve_mode_order(std::move(modeOrder), d);
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));
    res.lFactors.resize(static_cast<std::size_t>(d));

    DenseTensor stage = t;  // selected modes carry L^T; unprocessed modes untouched
    Index step = 0;
    for (Index mode : res.modeOrder) {
        Eigen::MatrixXd a = flatten(stage, all_modes_except(d, mode));
        MethodChoice mc = method;
        mc.rngSeed = hash_combine(method.rngSeed, hash_combine(kTagModeSelect, step));
        SelectionResult sel = sketched_matrix_id(a, ranks[static_cast<std::size_t>(mode)], mc, sketch);
        if (sel.indices.empty()) {
            // zero residual stage tensor; downstream modes see an empty core
            res.indexSets[static_cast<std::size_t>(mode)] = {};
            res.satellites[static_cast<std::size_t>(mode)] =
                Eigen::MatrixXd::Zero(0, t.shape[static_cast<std::size_t>(mode)]);
            res.lFactors[static_cast<std::size_t>(mode)] = Eigen::MatrixXd::Zero(0, 0);
            stage = dense_restrict(stage, mode, {});
            ++step;
            continue;
        }
        auto [l, q] = lq_factor(sel.coeffs);
        res.indexSets[static_cast<std::size_t>(mode)] = sel.indices;
        res.satellites[static_cast<std::size_t>(mode)] = sel.coeffs;
        res.lFactors[static_cast<std::size_t>(mode)] = l;
        stage = mode_contract(dense_restrict(stage, mode, sel.indices), mode, l.transpose());
        ++step;
    }
    return res;
}

// ---------------------------------------------------------------------------
// CP path: the stage tensor stays in CP form
// ---------------------------------------------------------------------------

CoreIdResult coreid_cp(const CpTensor& t, const std::vector<Index>& ranks,
                       const MethodChoice& method, Index sketchDim, CpSketchFamily family,
                       std::vector<Index> modeOrder, Index cap) {
    const Index d = t.order();
    check_ranks(ranks, t.dims());
    CoreIdResult res;
    res.modeOrder = resolve_mode_order(std::move(modeOrder), d);
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));
    res.lFactors.resize(static_cast<std::size_t>(d));

    CpTensor stage = t;
    Index step = 0;
    for (Index mode : res.modeOrder) {
        const Index k = ranks[static_cast<std::size_t>(mode)];
        MethodChoice mc = method;
        mc.rngSeed = hash_combine(method.rngSeed, hash_combine(kTagModeSelect, step));
        Rng rng{SketchSeed{mc.rngSeed, 1}};

        bool exhausted = false;
        for (const auto& h : stage.factors)
            if (h.rows() == 0) exhausted = true;

        SelectionResult sel;
        if (exhausted) {
            // an earlier mode ran out of columns; everything downstream is zero
        } else if (sketchDim > 0) {
            std::vector<const Eigen::MatrixXd*> others;
            for (Index j = 0; j < d; ++j)
                if (j != mode) others.push_back(&stage.factors[static_cast<std::size_t>(j)]);
            const SketchSeed sseed{method.rngSeed, hash_combine(kTagModeSketch, step)};
            Eigen::MatrixXd kr =
                family == CpSketchFamily::Kfjlt
                    ? kfjlt_apply_cp(others, stage.weights, sketchDim, sseed)
                    : tensor_sketch_apply_cp(others, stage.weights, sketchDim, sseed);
            Eigen::MatrixXd b = kr * stage.factors[static_cast<std::size_t>(mode)].transpose();
            sel = select_columns(b, mc, k, rng);
        } else if (method.method == Method::NuclearMax) {
            // exact scores from the CP Gram, no materialization
            sel = nuclear_max_select_gram(cp_flatten_gram(stage, mode), k, mc.tolerance);
        } else {
            Eigen::MatrixXd a = flatten(cp_materialize(stage, cap), all_modes_except(d, mode));
            sel = select_columns(a, mc, k, rng);
        }
        Eigen::MatrixXd& h = stage.factors[static_cast<std::size_t>(mode)];
        if (sel.indices.empty()) {
            res.indexSets[static_cast<std::size_t>(mode)] = {};
            res.satellites[static_cast<std::size_t>(mode)] =
                Eigen::MatrixXd::Zero(0, t.mode_dim(mode));
            res.lFactors[static_cast<std::size_t>(mode)] = Eigen::MatrixXd::Zero(0, 0);
            h = Eigen::MatrixXd::Zero(0, h.cols());
            ++step;
            continue;
        }

        auto [l, q] = lq_factor(sel.coeffs);
        res.indexSets[static_cast<std::size_t>(mode)] = sel.indices;
        res.satellites[static_cast<std::size_t>(mode)] = sel.coeffs;
        res.lFactors[static_cast<std::size_t>(mode)] = l;

        Eigen::MatrixXd hj(static_cast<Index>(sel.indices.size()), h.cols());
        for (std::size_t r = 0; r < sel.indices.size(); ++r)
            hj.row(static_cast<Index>(r)) = h.row(sel.indices[r]);
        h = l.transpose() * hj;
        ++step;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sparse path: selection through the composed sketch network
// ---------------------------------------------------------------------------

CoreIdResult coreid_sparse(const SparseTensorCoo& t, const std::vector<Index>& ranks,
                           const MethodChoice& method, const SparseNetDims& dims,
                           std::vector<Index> modeOrder) {
    const Index d = t.order();
    check_ranks(ranks, t.shape);
    CoreIdResult res;
    res.modeOrder = resolve_mode_order(std::move(modeOrder), d);
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));
    res.lFactors.resize(static_cast<std::size_t>(d));

    std::vector<Index> processed;
    std::vector<std::vector<Index>> selected;
    std::vector<Eigen::MatrixXd> carry;  // L_i^T per processed mode
    Index step = 0;
    for (Index mode : res.modeOrder) {
        const Index k = ranks[static_cast<std::size_t>(mode)];
        MethodChoice mc = method;
        mc.rngSeed = hash_combine(method.rngSeed, hash_combine(kTagModeSelect, step));
        Rng rng{SketchSeed{mc.rngSeed, 1}};
        const SketchSeed sseed{method.rngSeed, hash_combine(kTagModeSketch, step)};

        Eigen::MatrixXd b = sparse_sketch_network(t, processed, selected, carry, mode, dims, sseed);
        SelectionResult sel = select_columns(b, mc, k, rng);
        if (sel.indices.empty()) {
            res.indexSets[static_cast<std::size_t>(mode)] = {};
            res.satellites[static_cast<std::size_t>(mode)] =
                Eigen::MatrixXd::Zero(0, t.shape[static_cast<std::size_t>(mode)]);
            res.lFactors[static_cast<std::size_t>(mode)] = Eigen::MatrixXd::Zero(0, 0);
            processed.push_back(mode);
            selected.push_back({});
            carry.push_back(Eigen::MatrixXd::Zero(0, 0));
            ++step;
            continue;
        }
        auto [l, q] = lq_factor(sel.coeffs);
        res.indexSets[static_cast<std::size_t>(mode)] = sel.indices;
        res.satellites[static_cast<std::size_t>(mode)] = sel.coeffs;
        res.lFactors[static_cast<std::size_t>(mode)] = l;
        processed.push_back(mode);
        selected.push_back(sel.indices);
        carry.push_back(l.transpose());
        ++step;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

namespace {

std::vector<Eigen::MatrixXd> transpose_satellites(const CoreIdResult& r) {
    std::vector<Eigen::MatrixXd> sats(r.satellites.size());
    for (std::size_t i = 0; i < r.satellites.size(); ++i) sats[i] = r.satellites[i].transpose();
    return sats;
}

}  // namespace

TuckerApprox coreid_reconstruct(const DenseTensor& source, const CoreIdResult& r) {
    if (static_cast<Index>(r.indexSets.size()) != source.order())
        throw std::invalid_argument("result order mismatch");
    DenseTensor core = source;
    for (Index mode = 0; mode < source.order(); ++mode)
        core = dense_restrict(core, mode, r.indexSets[static_cast<std::size_t>(mode)]);
    return TuckerApprox{std::move(core), transpose_satellites(r)};
}

TuckerApprox coreid_reconstruct(const SparseTensorCoo& source, const CoreIdResult& r) {
    if (static_cast<Index>(r.indexSets.size()) != source.order())
        throw std::invalid_argument("result order mismatch");
    SparseTensorCoo core = source;
    for (Index mode = 0; mode < source.order(); ++mode)
        core = sparse_restrict(core, mode, r.indexSets[static_cast<std::size_t>(mode)]);
    return TuckerApprox{std::move(core), transpose_satellites(r)};
}

TuckerApprox coreid_reconstruct(const CpTensor& source, const CoreIdResult& r) {
    if (static_cast<Index>(r.indexSets.size()) != source.order())
        throw std::invalid_argument("result order mismatch");
    std::vector<Eigen::MatrixXd> factors(source.factors.size());
    for (std::size_t i = 0; i < source.factors.size(); ++i) {
        const auto& keep = r.indexSets[i];
        factors[i].resize(static_cast<Index>(keep.size()), source.factors[i].cols());
        for (std::size_t row = 0; row < keep.size(); ++row) {
            if (keep[row] < 0 || keep[row] >= source.factors[i].rows())
                throw std::invalid_argument("selected index out of range");
            factors[i].row(static_cast<Index>(row)) = source.factors[i].row(keep[row]);
        }
    }
    return TuckerApprox{CpTensor(std::move(factors), source.weights), transpose_satellites(r)};
}

}  // namespace tid
