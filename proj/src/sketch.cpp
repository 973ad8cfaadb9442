#include "tid/sketch.hpp"

#include <algorithm>
#include <bit>
#include <optional>
#include <unordered_set>

namespace tid {

namespace {

constexpr std::uint64_t kTagCsBucket = 0x6275636bULL;
constexpr std::uint64_t kTagCsSign = 0x7369676eULL;
constexpr std::uint64_t kTagSrhtSign = 0x68736e67ULL;
constexpr std::uint64_t kTagSrhtRows = 0x68726f77ULL;
constexpr std::uint64_t kTagKfRow = 0x6b66726fULL;
constexpr std::uint64_t kTagKfFactor = 0x6b666661ULL;
constexpr std::uint64_t kTagTsFactor = 0x74736661ULL;
constexpr std::uint64_t kTagNetS1 = 0x6e657431ULL;
constexpr std::uint64_t kTagNetS2 = 0x6e657432ULL;
constexpr std::uint64_t kTagNetS3 = 0x6e657433ULL;

double bit_sign(std::uint64_t h) { return (h & 1u) ? 1.0 : -1.0; }

int hadamard_parity(Index r, Index c) {
    return std::popcount(static_cast<std::uint64_t>(r) & static_cast<std::uint64_t>(c)) & 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// CountSketchOp
// ---------------------------------------------------------------------------

CountSketchOp::CountSketchOp(Index m, Index inputDim, SketchSeed seed)
    : m_(m), inputDim_(inputDim), seed_(seed) {
    if (m < 1 || inputDim < 1) throw std::invalid_argument("count sketch dims must be positive");
}

Index CountSketchOp::bucket(Index i) const {
    return static_cast<Index>(keyed_u64(seed_, kTagCsBucket, static_cast<std::uint64_t>(i)) %
                              static_cast<std::uint64_t>(m_));
}

double CountSketchOp::sign(Index i) const {
    return bit_sign(keyed_u64(seed_, kTagCsSign, static_cast<std::uint64_t>(i)));
}

Eigen::MatrixXd CountSketchOp::materialize() const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m_, inputDim_);
    for (Index i = 0; i < inputDim_; ++i) s(bucket(i), i) = sign(i);
    return s;
}

Eigen::MatrixXd count_sketch_apply_matrix(const CountSketchOp& s, const Eigen::MatrixXd& a) {
    if (a.rows() != s.input_dim())
        throw std::invalid_argument("count_sketch_apply_matrix: row count mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(s.m(), a.cols());
    for (Index i = 0; i < a.rows(); ++i) out.row(s.bucket(i)) += s.sign(i) * a.row(i);
    return out;
}

namespace {
// one chain walk serves both maps; the sign is a remix of the chain value
std::uint64_t joint_chain(SketchSeed seed, const Index* coords, std::size_t n) {
    std::uint64_t h = keyed_u64(seed, kTagCsBucket);
    for (std::size_t j = 0; j < n; ++j) h = hash_combine(h, static_cast<std::uint64_t>(coords[j]));
    return h;
}
}  // namespace

Index joint_bucket(SketchSeed seed, const Index* coords, std::size_t n, Index m) {
    return static_cast<Index>(joint_chain(seed, coords, n) % static_cast<std::uint64_t>(m));
}

double joint_sign(SketchSeed seed, const Index* coords, std::size_t n) {
    return bit_sign(mix64(joint_chain(seed, coords, n) ^ kTagCsSign));
}

std::pair<Index, double> joint_bucket_sign(SketchSeed seed, const Index* coords, std::size_t n,
                                           Index m) {
    const std::uint64_t h = joint_chain(seed, coords, n);
    return {static_cast<Index>(h % static_cast<std::uint64_t>(m)),
            bit_sign(mix64(h ^ kTagCsSign))};
}

SparseTensorCoo count_sketch_apply_modes(const SparseTensorCoo& t, const std::vector<Index>& modes,
                                         Index m, SketchSeed seed) {
    const Index d = t.order();
    if (modes.empty()) throw std::invalid_argument("count_sketch_apply_modes: empty mode list");
    std::vector<bool> sketched(static_cast<std::size_t>(d), false);
    for (Index mo : modes) {
        if (mo < 0 || mo >= d) throw std::invalid_argument("mode out of range");
        sketched[static_cast<std::size_t>(mo)] = true;
    }
    const Index anchor = *std::min_element(modes.begin(), modes.end());

    Shape outShape;
    for (Index i = 0; i < d; ++i) {
        if (i == anchor)
            outShape.push_back(m);
        else if (!sketched[static_cast<std::size_t>(i)])
            outShape.push_back(t.shape[static_cast<std::size_t>(i)]);
    }

    std::vector<MultiIndex> cs(static_cast<std::size_t>(t.nnz()));
    std::vector<double> vs(static_cast<std::size_t>(t.nnz()));
    std::vector<Index> key(modes.size());
    for (Index e = 0; e < t.nnz(); ++e) {
        for (std::size_t j = 0; j < modes.size(); ++j) key[j] = t.coord(e, modes[j]);
        auto [b, sg] = joint_bucket_sign(seed, key.data(), key.size(), m);
        MultiIndex c;
        c.reserve(outShape.size());
        for (Index i = 0; i < d; ++i) {
            if (i == anchor)
                c.push_back(b);
            else if (!sketched[static_cast<std::size_t>(i)])
                c.push_back(t.coord(e, i));
        }
        cs[static_cast<std::size_t>(e)] = std::move(c);
        vs[static_cast<std::size_t>(e)] = sg * t.values[e];
    }
    return SparseTensorCoo::from_entries(std::move(outShape), std::move(cs), std::move(vs));
}

// ---------------------------------------------------------------------------
// SrhtOp
// ---------------------------------------------------------------------------

Index pad_to_pow2(Index n) {
    return static_cast<Index>(std::bit_ceil(static_cast<std::uint64_t>(n)));
}

void fwht_columns(Eigen::MatrixXd& x) {
    const Index n = x.rows();
    if ((n & (n - 1)) != 0) throw std::invalid_argument("fwht requires a power-of-two row count");
    for (Index h = 1; h < n; h <<= 1) {
        for (Index i = 0; i < n; i += 2 * h) {
            for (Index j = i; j < i + h; ++j) {
                const Eigen::RowVectorXd s = x.row(j);
                const Eigen::RowVectorXd t = x.row(j + h);
                x.row(j) = s + t;
                x.row(j + h) = s - t;
            }
        }
    }
}

SrhtOp::SrhtOp(Index m, Index inputDim, SketchSeed seed) : inputDim_(inputDim), seed_(seed) {
    if (m < 1 || inputDim < 1) throw std::invalid_argument("srht dims must be positive");
    padDim_ = pad_to_pow2(inputDim);
    if (m > padDim_) m = padDim_;  // cannot subsample more rows than exist

    // distinct rows via Floyd's algorithm, then sorted
    Rng rng{substream(seed, kTagSrhtRows)};
    std::unordered_set<Index> chosen;
    for (Index i = padDim_ - m; i < padDim_; ++i) {
        Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        if (!chosen.insert(pick).second) chosen.insert(i);
    }
    rows_.assign(chosen.begin(), chosen.end());
    std::sort(rows_.begin(), rows_.end());
    scale_ = 1.0 / std::sqrt(static_cast<double>(m));
}

double SrhtOp::sign(Index i) const {
    return bit_sign(keyed_u64(seed_, kTagSrhtSign, static_cast<std::uint64_t>(i)));
}

Eigen::MatrixXd SrhtOp::apply(const Eigen::MatrixXd& x) const {
    if (x.rows() != inputDim_) throw std::invalid_argument("srht_apply: row count mismatch");
    Eigen::MatrixXd buf = Eigen::MatrixXd::Zero(padDim_, x.cols());
    for (Index i = 0; i < inputDim_; ++i) buf.row(i) = sign(i) * x.row(i);
    fwht_columns(buf);
    Eigen::MatrixXd out(static_cast<Index>(rows_.size()), x.cols());
    for (std::size_t r = 0; r < rows_.size(); ++r) out.row(static_cast<Index>(r)) = buf.row(rows_[r]);
    return out * scale_;
}

Eigen::MatrixXd SrhtOp::materialize() const {
    Eigen::MatrixXd s(static_cast<Index>(rows_.size()), inputDim_);
    for (std::size_t r = 0; r < rows_.size(); ++r)
        for (Index i = 0; i < inputDim_; ++i)
            s(static_cast<Index>(r), i) =
                scale_ * (hadamard_parity(rows_[r], i) ? -1.0 : 1.0) * sign(i);
    return s;
}

// ---------------------------------------------------------------------------
// KfjltOp
// ---------------------------------------------------------------------------

KfjltOp::KfjltOp(Index m, const std::vector<Index>& factorDims, SketchSeed seed)
    : m_(m), factorDims_(factorDims), seed_(seed) {
    if (m < 1) throw std::invalid_argument("kfjlt dimension must be positive");
    if (factorDims.empty()) throw std::invalid_argument("kfjlt needs at least one factor");
    double logProd = 0.0;
    padDims_.reserve(factorDims.size());
    for (Index n : factorDims) {
        if (n < 1) throw std::invalid_argument("factor dims must be positive");
        padDims_.push_back(pad_to_pow2(n));
        logProd += std::log2(static_cast<double>(padDims_.back()));
    }
    // multi-index rows sampled with replacement; pad dims are powers of two,
    // so the modulo draw is exactly uniform. At m equal to the full padded
    // size every row is taken once and norms are preserved exactly.
    sampledRows_.resize(static_cast<std::size_t>(m) * factorDims.size());
    const bool fullSize = logProd < 40.0 && m == static_cast<Index>(std::exp2(logProd) + 0.5);
    for (Index t = 0; t < m; ++t) {
        Index rem = t;
        for (std::size_t f = factorDims.size(); f-- > 0;) {
            if (fullSize) {
                sampledRows_[static_cast<std::size_t>(t) * factorDims.size() + f] =
                    rem % padDims_[f];
                rem /= padDims_[f];
            } else {
                sampledRows_[static_cast<std::size_t>(t) * factorDims.size() + f] =
                    static_cast<Index>(
                        keyed_u64(seed_, hash_combine(kTagKfRow, static_cast<std::uint64_t>(t)),
                                  static_cast<std::uint64_t>(f)) %
                        static_cast<std::uint64_t>(padDims_[f]));
            }
        }
    }
    scale_ = std::exp2(0.5 * logProd) / std::sqrt(static_cast<double>(m));
}

Eigen::MatrixXd KfjltOp::transform_factor(std::size_t factor, const Eigen::MatrixXd& h) const {
    const Index n = factorDims_[factor];
    if (h.rows() != n) throw std::invalid_argument("kfjlt: factor row count mismatch");
    const Index pad = padDims_[factor];
    const SketchSeed fs = substream(seed_, hash_combine(kTagKfFactor, factor));
    Eigen::MatrixXd buf = Eigen::MatrixXd::Zero(pad, h.cols());
    for (Index i = 0; i < n; ++i)
        buf.row(i) = bit_sign(keyed_u64(fs, kTagSrhtSign, static_cast<std::uint64_t>(i))) * h.row(i);
    fwht_columns(buf);
    return buf / std::sqrt(static_cast<double>(pad));
}

double KfjltOp::transform_entry(std::size_t factor, Index row, Index i) const {
    const SketchSeed fs = substream(seed_, hash_combine(kTagKfFactor, factor));
    const double h = hadamard_parity(row, i) ? -1.0 : 1.0;
    return h * bit_sign(keyed_u64(fs, kTagSrhtSign, static_cast<std::uint64_t>(i))) /
           std::sqrt(static_cast<double>(padDims_[factor]));
}

Eigen::MatrixXd KfjltOp::apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                                  const Eigen::VectorXd& weights) const {
    if (factors.size() != factorDims_.size())
        throw std::invalid_argument("kfjlt: factor count mismatch");
    const Index p = weights.size();
    Eigen::MatrixXd out = Eigen::MatrixXd::Ones(m_, p);
    for (std::size_t f = 0; f < factors.size(); ++f) {
        Eigen::MatrixXd g = transform_factor(f, *factors[f]);
        for (Index t = 0; t < m_; ++t)
            out.row(t) = out.row(t).cwiseProduct(g.row(sampled_row(t, f)));
    }
    out.array().rowwise() *= weights.transpose().array();
    return out * scale_;
}

Eigen::MatrixXd KfjltOp::materialize() const {
    Index total = 1;
    for (Index n : factorDims_) total *= n;
    Eigen::MatrixXd s(m_, total);
    const std::size_t nf = factorDims_.size();
    std::vector<SketchSeed> fs(nf);
    std::vector<double> norm(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        fs[f] = substream(seed_, hash_combine(kTagKfFactor, f));
        norm[f] = 1.0 / std::sqrt(static_cast<double>(padDims_[f]));
    }
    MultiIndex idx(nf, 0);
    for (Index c = 0; c < total; ++c) {
        for (Index t = 0; t < m_; ++t) {
            double v = scale_;
            for (std::size_t f = 0; f < nf; ++f) {
                const Index i = idx[f];
                double e = (hadamard_parity(sampled_row(t, f), i) ? -1.0 : 1.0) * norm[f] *
                           bit_sign(keyed_u64(fs[f], kTagSrhtSign, static_cast<std::uint64_t>(i)));
                v *= e;
            }
            s(t, c) = v;
        }
        for (std::size_t f = nf; f-- > 0;) {
            if (++idx[f] < factorDims_[f]) break;
            idx[f] = 0;
        }
    }
    return s;
}

Eigen::MatrixXd kfjlt_apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                               const Eigen::VectorXd& weights, Index m, SketchSeed seed) {
    if (factors.empty()) throw std::invalid_argument("kfjlt_apply_cp: empty factor list");
    std::vector<Index> dims(factors.size());
    for (std::size_t f = 0; f < factors.size(); ++f) dims[f] = factors[f]->rows();
    KfjltOp op(m, dims, seed);
    return op.apply_cp(factors, weights);
}

// ---------------------------------------------------------------------------
// TensorSketchOp
// ---------------------------------------------------------------------------

TensorSketchOp::TensorSketchOp(Index m, const std::vector<Index>& factorDims, SketchSeed seed)
    : m_(m), factorDims_(factorDims) {
    if (m < 1) throw std::invalid_argument("tensor sketch dimension must be positive");
    if (factorDims.empty()) throw std::invalid_argument("tensor sketch needs at least one factor");
    components_.reserve(factorDims.size());
    for (std::size_t f = 0; f < factorDims.size(); ++f)
        components_.emplace_back(m, factorDims[f], substream(seed, hash_combine(kTagTsFactor, f)));
}

Eigen::MatrixXd TensorSketchOp::apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                                         const Eigen::VectorXd& weights) const {
    if (factors.size() != components_.size())
        throw std::invalid_argument("tensor sketch: factor count mismatch");
    const Index p = weights.size();
    Eigen::MatrixXd acc = count_sketch_apply_matrix(components_[0], *factors[0]);
    Eigen::VectorXd conv(m_);
    for (std::size_t f = 1; f < factors.size(); ++f) {
        Eigen::MatrixXd nxt = count_sketch_apply_matrix(components_[f], *factors[f]);
        for (Index k = 0; k < p; ++k) {
            conv.setZero();
            for (Index u = 0; u < m_; ++u) {
                const double a = acc(u, k);
                if (a == 0.0) continue;
                for (Index v = 0; v < m_; ++v) {
                    Index w = u + v;
                    if (w >= m_) w -= m_;
                    conv(w) += a * nxt(v, k);
                }
            }
            acc.col(k) = conv;
        }
    }
    acc.array().rowwise() *= weights.transpose().array();
    return acc;
}

Eigen::MatrixXd TensorSketchOp::materialize() const {
    Index total = 1;
    for (Index n : factorDims_) total *= n;
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m_, total);
    MultiIndex idx(factorDims_.size(), 0);
    for (Index c = 0; c < total; ++c) {
        Index b = 0;
        double sg = 1.0;
        for (std::size_t f = 0; f < factorDims_.size(); ++f) {
            b += components_[f].bucket(idx[f]);
            sg *= components_[f].sign(idx[f]);
        }
        s(b % m_, c) = sg;
        for (std::size_t f = factorDims_.size(); f-- > 0;) {
            if (++idx[f] < factorDims_[f]) break;
            idx[f] = 0;
        }
    }
    return s;
}

Eigen::MatrixXd tensor_sketch_apply_cp(const std::vector<const Eigen::MatrixXd*>& factors,
                                       const Eigen::VectorXd& weights, Index m, SketchSeed seed) {
    if (factors.empty()) throw std::invalid_argument("tensor_sketch_apply_cp: empty factor list");
    std::vector<Index> dims(factors.size());
    for (std::size_t f = 0; f < factors.size(); ++f) dims[f] = factors[f]->rows();
    TensorSketchOp op(m, dims, seed);
    return op.apply_cp(factors, weights);
}

// ---------------------------------------------------------------------------
// sparse_sketch_network
// ---------------------------------------------------------------------------

SketchSeed sparse_net_component_seed(SketchSeed seed, int component) {
    switch (component) {
        case 1: return substream(seed, kTagNetS1);
        case 2: return substream(seed, kTagNetS2);
        case 3: return substream(seed, kTagNetS3);
        default: throw std::invalid_argument("component must be 1, 2, or 3");
    }
}

Eigen::MatrixXd sparse_sketch_network(const SparseTensorCoo& t,
                                      const std::vector<Index>& processedModes,
                                      const std::vector<std::vector<Index>>& selected,
                                      const std::vector<Eigen::MatrixXd>& carry, Index targetMode,
                                      const SparseNetDims& dims, SketchSeed seed) {
    const Index d = t.order();
    if (targetMode < 0 || targetMode >= d) throw std::invalid_argument("target mode out of range");
    if (processedModes.size() != selected.size() || processedModes.size() != carry.size())
        throw std::invalid_argument("processed modes, selections, and carries must align");
    const std::size_t s = processedModes.size();
    for (std::size_t i = 0; i < s; ++i) {
        if (processedModes[i] == targetMode)
            throw std::invalid_argument("target mode cannot be processed");
        if (carry[i].rows() != carry[i].cols() ||
            carry[i].cols() != static_cast<Index>(selected[i].size()))
            throw std::invalid_argument("carry factor inconsistent with selected index set");
    }

    // restrict to the selected indices on processed modes
    SparseTensorCoo cur = t;
    for (std::size_t i = 0; i < s; ++i)
        cur = sparse_restrict(cur, processedModes[i], selected[i]);
    if (cur.nnz() == 0)
        return Eigen::MatrixXd::Zero(0, t.shape[static_cast<std::size_t>(targetMode)]);

    std::vector<bool> isProcessed(static_cast<std::size_t>(d), false);
    for (Index mo : processedModes) isProcessed[static_cast<std::size_t>(mo)] = true;
    std::vector<Index> trailing;
    for (Index i = 0; i < d; ++i)
        if (i != targetMode && !isProcessed[static_cast<std::size_t>(i)]) trailing.push_back(i);

    const bool useS2 = s > 0;
    const bool useS3 = !trailing.empty();
    if (!useS2 && !useS3) throw std::invalid_argument("network needs at least one non-target mode");
    const Index m2 = useS2 ? dims.m2 : 1;
    const Index m3 = useS3 ? dims.m3 : 1;
    const Index n = t.shape[static_cast<std::size_t>(targetMode)];
    const SketchSeed s2seed = substream(seed, kTagNetS2);
    const SketchSeed s3seed = substream(seed, kTagNetS3);

    // rank-one rows of S_2 applied through the carry factors
    std::vector<Eigen::MatrixXd> u;  // per processed mode: m2 x k_i sampled transform rows
    double s2scale = 1.0;
    if (useS2) {
        std::vector<Index> kdims(s);
        for (std::size_t i = 0; i < s; ++i) kdims[i] = carry[i].rows();
        KfjltOp kf(m2, kdims, s2seed);
        s2scale = kf.scale();
        u.resize(s);
        for (std::size_t i = 0; i < s; ++i) {
            Eigen::MatrixXd g = kf.transform_factor(i, carry[i]);  // pad_i x k_i
            u[i].resize(m2, carry[i].cols());
            for (Index row = 0; row < m2; ++row)
                u[i].row(row) = g.row(kf.sampled_row(row, i));
        }
    }

    // bucket trailing coordinates and group entries by target column
    struct Entry {
        Index bucket;
        double value;
        Index flatPos;  // offset of this entry's processed coords
    };
    std::vector<std::vector<Entry>> byCol(static_cast<std::size_t>(n));
    std::vector<Index> procCoords;
    procCoords.reserve(static_cast<std::size_t>(cur.nnz()) * s);
    std::vector<Index> key(trailing.size());
    for (Index e = 0; e < cur.nnz(); ++e) {
        Index b = 0;
        double sg = 1.0;
        if (useS3) {
            for (std::size_t j = 0; j < trailing.size(); ++j) key[j] = cur.coord(e, trailing[j]);
            std::tie(b, sg) = joint_bucket_sign(s3seed, key.data(), key.size(), m3);
        }
        const Index flatPos = static_cast<Index>(procCoords.size());
        for (std::size_t i = 0; i < s; ++i) procCoords.push_back(cur.coord(e, processedModes[i]));
        byCol[static_cast<std::size_t>(cur.coord(e, targetMode))].push_back(
            Entry{b, sg * cur.values[e], flatPos});
    }

    const Index rowDim = m2 * m3;
    const bool useS1 = rowDim > dims.m1;
    std::optional<SrhtOp> outerSrht;
    std::optional<CountSketchOp> outerCs;
    Index outRows = rowDim;
    if (useS1) {
        if (dims.outer == SparseNetDims::Outer::Srht) {
            outerSrht.emplace(dims.m1, rowDim, substream(seed, kTagNetS1));
            outRows = outerSrht->m();
        } else {
            outerCs.emplace(dims.m1, rowDim, substream(seed, kTagNetS1));
            outRows = dims.m1;
        }
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(outRows, n);

    Eigen::VectorXd col(rowDim);
    Eigen::VectorXd wt(m2);
    for (Index c = 0; c < n; ++c) {
        col.setZero();
        for (const Entry& e : byCol[static_cast<std::size_t>(c)]) {
            if (useS2) {
                wt.setConstant(s2scale * e.value);
                for (std::size_t i = 0; i < s; ++i)
                    wt = wt.cwiseProduct(u[i].col(procCoords[static_cast<std::size_t>(e.flatPos) + i]));
                for (Index row = 0; row < m2; ++row) col[row * m3 + e.bucket] += wt[row];
            } else {
                col[e.bucket] += e.value;
            }
        }
        if (outerSrht)
            out.col(c) = outerSrht->apply(col);
        else if (outerCs) {
            for (Index r = 0; r < rowDim; ++r)
                if (col[r] != 0.0) out(outerCs->bucket(r), c) += outerCs->sign(r) * col[r];
        } else
            out.col(c) = col;
    }
    return out;
}

// ---------------------------------------------------------------------------
// empirical_se_distortion
// ---------------------------------------------------------------------------

double empirical_se_distortion(const Eigen::MatrixXd& sa, const Eigen::MatrixXd& a,
                               double rankTol) {
    if (sa.cols() != a.cols())
        throw std::invalid_argument("empirical_se_distortion: column count mismatch");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0.0;
    if (rankTol < 0.0)
        rankTol = static_cast<double>(std::max(a.rows(), a.cols())) *
                  std::numeric_limits<double>::epsilon();
    Index r = 0;
    while (r < sv.size() && sv(r) > rankTol * sv(0)) ++r;
    if (r == 0) return 0.0;

    // S U = (S A) V_r Sigma_r^{-1}
    Eigen::MatrixXd su = sa * svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd2(su);
    double delta = 0.0;
    for (Index i = 0; i < r; ++i) {
        double sq = i < svd2.singularValues().size() ? svd2.singularValues()(i) : 0.0;
        delta = std::max(delta, std::abs(sq * sq - 1.0));
    }
    // singular directions of A annihilated by S contribute sigma = 0
    if (svd2.singularValues().size() < r) delta = std::max(delta, 1.0);
    return delta;
}

}  // namespace tid
