#include "tid/satid.hpp"

#include "tid/sketch.hpp"

#include <algorithm>
#include <numeric>

namespace tid {

namespace {

constexpr std::uint64_t kTagSatSelect = 0x73617473ULL;
constexpr std::uint64_t kTagSatSketch = 0x7361746bULL;

std::vector<Index> complementary_modes(Index d, Index mode) {
    std::vector<Index> comp;
    for (Index i = 0; i < d; ++i)
        if (i != mode) comp.push_back(i);
    return comp;
}

void check_satid_ranks(const std::vector<Index>& ranks, Index d) {
    if (static_cast<Index>(ranks.size()) != d)
        throw std::invalid_argument("rank vector length must equal tensor order");
    for (Index k : ranks)
        if (k < 0) throw std::invalid_argument("ranks must be nonnegative");
}

}  // namespace

MultiIndex decode_column_index(const Shape& shape, Index mode, Index col) {
    const std::vector<Index> comp = complementary_modes(static_cast<Index>(shape.size()), mode);
    MultiIndex b(comp.size());
    for (std::size_t i = comp.size(); i-- > 0;) {
        const Index n = shape[static_cast<std::size_t>(comp[i])];
        b[i] = col % n;
        col /= n;
    }
    return b;
}

Eigen::VectorXd sparse_fiber(const SparseTensorCoo& t, Index mode, const MultiIndex& b) {
    const Index d = t.order();
    const std::vector<Index> comp = complementary_modes(d, mode);
    if (b.size() != comp.size()) throw std::invalid_argument("fiber index order mismatch");
    Eigen::VectorXd fiber = Eigen::VectorXd::Zero(t.shape[static_cast<std::size_t>(mode)]);
    for (Index e = 0; e < t.nnz(); ++e) {
        bool match = true;
        for (std::size_t i = 0; i < comp.size() && match; ++i)
            match = t.coord(e, comp[i]) == b[i];
        if (match) fiber[t.coord(e, mode)] += t.values[e];
    }
    return fiber;
}

// ---------------------------------------------------------------------------
// solve_core
// ---------------------------------------------------------------------------

DenseTensor solve_core(const DenseTensor& t, const std::vector<Eigen::MatrixXd>& satellites,
                       Index cap) {
    if (static_cast<Index>(satellites.size()) != t.order())
        throw std::invalid_argument("satellite count must equal tensor order");
    check_dense_cap(t.size(), cap, "solve_core");
    DenseTensor cur = t;
    for (std::size_t i = 0; i < satellites.size(); ++i)
        cur = mode_contract(cur, static_cast<Index>(i), pinv(satellites[i]));
    return cur;
}

DenseTensor solve_core(const SparseTensorCoo& t, const std::vector<Eigen::MatrixXd>& satellites,
                       Index cap) {
    const Index d = t.order();
    if (static_cast<Index>(satellites.size()) != d)
        throw std::invalid_argument("satellite count must equal tensor order");
    // densify on the mode with the largest extent reduction first
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const Index ra = t.shape[static_cast<std::size_t>(a)] - satellites[static_cast<std::size_t>(a)].cols();
        const Index rb = t.shape[static_cast<std::size_t>(b)] - satellites[static_cast<std::size_t>(b)].cols();
        return ra > rb;
    });
    DenseTensor cur = sparse_ttm(t, order[0], pinv(satellites[static_cast<std::size_t>(order[0])]), cap);
    for (std::size_t i = 1; i < order.size(); ++i)
        cur = mode_contract(cur, order[i], pinv(satellites[static_cast<std::size_t>(order[i])]));
    return cur;
}

// ---------------------------------------------------------------------------
// Independent per-mode skeleton (dense)
// ---------------------------------------------------------------------------

SatIdResult satid_generic(const DenseTensor& t, const std::vector<Index>& ranks,
                          const MethodChoice& method) {
    const Index d = t.order();
    check_satid_ranks(ranks, d);
    SatIdResult res;
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));

    for (Index mode = 0; mode < d; ++mode) {
        const Index n = t.shape[static_cast<std::size_t>(mode)];
        Eigen::MatrixXd a = flatten(t, {mode});
        const Index k = ranks[static_cast<std::size_t>(mode)];
        if (k > a.cols()) throw std::invalid_argument("rank exceeds flattening column count");
        MethodChoice mc = method;
        mc.rngSeed = hash_combine(method.rngSeed, hash_combine(kTagSatSelect, static_cast<std::uint64_t>(mode)));
        Rng rng{SketchSeed{mc.rngSeed, 2}};
        SelectionResult sel = select_columns(a, mc, k, rng, /*solveCoeffs=*/false);

        auto& js = res.indexSets[static_cast<std::size_t>(mode)];
        Eigen::MatrixXd ti(n, static_cast<Index>(sel.indices.size()));
        for (std::size_t c = 0; c < sel.indices.size(); ++c) {
            js.push_back(decode_column_index(t.shape, mode, sel.indices[c]));
            ti.col(static_cast<Index>(c)) = a.col(sel.indices[c]);
        }
        res.satellites[static_cast<std::size_t>(mode)] = std::move(ti);
    }
    res.core = solve_core(t, res.satellites);
    return res;
}

// ---------------------------------------------------------------------------
// CP marginalized sampling
// ---------------------------------------------------------------------------

Eigen::VectorXd cp_conditional_scores(const Eigen::VectorXd& w,
                                      const std::vector<const Eigen::MatrixXd*>& factors,
                                      Index sketchDim, SketchSeed seed) {
    if (factors.empty()) throw std::invalid_argument("cp_conditional_scores: no factors");
    for (const auto* f : factors)
        if (f->cols() != w.size())
            throw std::invalid_argument("cp_conditional_scores: weight length mismatch");
    const Eigen::MatrixXd& a1 = *factors[0];

    if (factors.size() == 1) {
        Eigen::VectorXd v = a1 * w;
        return v.cwiseProduct(v);
    }
    if (sketchDim > 0) {
        std::vector<const Eigen::MatrixXd*> rest(factors.begin() + 1, factors.end());
        Eigen::MatrixXd m = kfjlt_apply_cp(rest, w, sketchDim, seed) * a1.transpose();
        return m.colwise().squaredNorm().transpose();
    }
    // exact: d_i = a1_i G a1_i^T with G = (w w^T) .* prod_j A_j^T A_j
    Eigen::MatrixXd g = w * w.transpose();
    for (std::size_t j = 1; j < factors.size(); ++j)
        g = g.cwiseProduct((factors[j]->transpose() * *factors[j]).eval());
    Eigen::VectorXd d = ((a1 * g).cwiseProduct(a1)).rowwise().sum();
    return d.cwiseMax(0.0);
}

std::optional<Index> cp_sample_index(const Eigen::VectorXd& w,
                                     const std::vector<const Eigen::MatrixXd*>& factors,
                                     Index sketchDim, SketchSeed seed, Rng& rng,
                                     const std::set<Index>* banned) {
    Eigen::VectorXd scores = cp_conditional_scores(w, factors, sketchDim, seed);
    if (banned != nullptr)
        for (Index i : *banned) scores[i] = 0.0;
    Index pick = sample_proportional(rng, scores);
    if (pick < 0) return std::nullopt;
    return pick;
}

std::pair<std::vector<MultiIndex>, Eigen::MatrixXd> cp_sample_mode(const CpTensor& t, Index mode,
                                                                   Index k, Index sketchDim,
                                                                   Rng& rng) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    if (k < 0) throw std::invalid_argument("rank must be nonnegative");
    const std::vector<Index> comp = complementary_modes(d, mode);
    const Eigen::MatrixXd& hMode = t.factors[static_cast<std::size_t>(mode)];

    std::vector<MultiIndex> selected;
    Eigen::MatrixXd fibers(hMode.rows(), k);
    Eigen::MatrixXd deflated = hMode;
    Rng seedGen = rng.split(0x6d6172ULL);
    std::set<MultiIndex> chosen;
    double baseline = -1.0;  // first-draw residual mass, the degeneracy reference

    Index col = 0;
    while (col < k) {
        Eigen::VectorXd w = t.weights;
        MultiIndex b(comp.size());
        bool degenerate = false;
        for (std::size_t s = 0; s < comp.size(); ++s) {
            std::vector<const Eigen::MatrixXd*> facs;
            for (std::size_t j = s; j < comp.size(); ++j)
                facs.push_back(&t.factors[static_cast<std::size_t>(comp[j])]);
            facs.push_back(&deflated);

            std::set<Index> banned;
            if (s + 1 == comp.size()) {
                // mask final entries that would complete an already selected index
                for (const MultiIndex& prev : chosen) {
                    if (std::equal(prev.begin(), prev.end() - 1, b.begin())) banned.insert(prev.back());
                }
            }
            SketchSeed sseed{seedGen.next(), seedGen.next()};
            Eigen::VectorXd scores = cp_conditional_scores(w, facs, sketchDim, sseed);
            for (Index bannedIdx : banned) scores[bannedIdx] = 0.0;
            if (s == 0) {
                const double total = scores.sum();
                if (baseline < 0.0) baseline = total;
                if (total <= 1e-12 * baseline) {
                    degenerate = true;
                    break;
                }
            }
            const Index pick = sample_proportional(rng, scores);
            if (pick < 0) {
                degenerate = true;
                break;
            }
            b[s] = pick;
            w = t.factors[static_cast<std::size_t>(comp[s])].row(pick).transpose().cwiseProduct(w);
        }
        if (degenerate) break;

        fibers.col(col) = hMode * w;
        Eigen::VectorXd q = deflated * w;
        const double qn = q.norm();
        if (qn > 0.0) {
            q /= qn;
            deflated -= q * (q.transpose() * deflated).eval();
        }
        chosen.insert(b);
        selected.push_back(std::move(b));
        ++col;
    }
    fibers.conservativeResize(Eigen::NoChange, col);
    return {std::move(selected), std::move(fibers)};
}

SatIdResult satid_cp(const CpTensor& t, const std::vector<Index>& ranks, Index sketchDim,
                     std::uint64_t seed) {
    const Index d = t.order();
    check_satid_ranks(ranks, d);
    SatIdResult res;
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));

    for (Index mode = 0; mode < d; ++mode) {
        Rng rng{SketchSeed{seed, hash_combine(kTagSatSketch, static_cast<std::uint64_t>(mode))}};
        auto [js, ti] = cp_sample_mode(t, mode, ranks[static_cast<std::size_t>(mode)], sketchDim, rng);
        res.indexSets[static_cast<std::size_t>(mode)] = std::move(js);
        res.satellites[static_cast<std::size_t>(mode)] = std::move(ti);
    }

    // core in CP format: cp(w, pinv(T_1) H_1, ..., pinv(T_d) H_d)
    std::vector<Eigen::MatrixXd> coreFactors(static_cast<std::size_t>(d));
    for (Index i = 0; i < d; ++i)
        coreFactors[static_cast<std::size_t>(i)] =
            pinv(res.satellites[static_cast<std::size_t>(i)]) * t.factors[static_cast<std::size_t>(i)];
    res.core = CpTensor(std::move(coreFactors), t.weights);
    return res;
}

// ---------------------------------------------------------------------------
// Direct sparse selection
// ---------------------------------------------------------------------------

namespace {

struct SparseColumns {
    std::vector<MultiIndex> keys;                              // lexicographically sorted
    std::vector<std::vector<std::pair<Index, double>>> rows;   // (target coord, value)
    std::vector<double> normSq;
};

SparseColumns group_columns(const SparseTensorCoo& t, Index mode) {
    const Index d = t.order();
    const std::vector<Index> comp = complementary_modes(d, mode);
    std::vector<Index> perm(static_cast<std::size_t>(t.nnz()));
    std::iota(perm.begin(), perm.end(), Index{0});
    auto key_less = [&](Index a, Index b) {
        for (Index c : comp) {
            if (t.coord(a, c) != t.coord(b, c)) return t.coord(a, c) < t.coord(b, c);
        }
        return t.coord(a, mode) < t.coord(b, mode);
    };
    std::sort(perm.begin(), perm.end(), key_less);

    SparseColumns cols;
    MultiIndex cur;
    for (Index e : perm) {
        MultiIndex key(comp.size());
        for (std::size_t i = 0; i < comp.size(); ++i) key[i] = t.coord(e, comp[i]);
        if (cols.keys.empty() || key != cols.keys.back()) {
            cols.keys.push_back(key);
            cols.rows.emplace_back();
            cols.normSq.push_back(0.0);
        }
        cols.rows.back().emplace_back(t.coord(e, mode), t.values[e]);
        cols.normSq.back() += t.values[e] * t.values[e];
    }
    return cols;
}

}  // namespace

std::pair<std::vector<MultiIndex>, std::vector<double>> sparse_select_direct(
    const SparseTensorCoo& t, Index mode, Index k, Method method, double tol, Rng& rng) {
    if (method != Method::NormMax && method != Method::NormSample)
        throw std::invalid_argument("sparse_select_direct supports NormMax and NormSample");
    const Index n = t.shape[static_cast<std::size_t>(mode)];
    SparseColumns cols = group_columns(t, mode);
    const Index ncols = static_cast<Index>(cols.keys.size());

    Eigen::VectorXd scores =
        Eigen::Map<Eigen::VectorXd>(cols.normSq.data(), ncols);
    const double stop = tol * scores.sum();

    std::vector<MultiIndex> selected;
    std::vector<double> trace;
    Eigen::MatrixXd q(n, std::min(k, ncols));
    std::vector<char> taken(static_cast<std::size_t>(ncols), 0);
    Eigen::VectorXd fiber(n), qcol;
    for (Index step = 0; step < k && step < ncols; ++step) {
        Index pick = -1;
        if (method == Method::NormMax) {
            double best = stop;
            for (Index i = 0; i < ncols; ++i) {
                if (taken[static_cast<std::size_t>(i)]) continue;
                if (scores[i] > best) {
                    best = scores[i];
                    pick = i;
                }
            }
        } else {
            Eigen::VectorXd masked = scores;
            for (Index i = 0; i < ncols; ++i)
                if (taken[static_cast<std::size_t>(i)] || masked[i] <= stop) masked[i] = 0.0;
            pick = sample_proportional(rng, masked);
        }
        if (pick < 0) break;

        fiber.setZero();
        for (const auto& [r, v] : cols.rows[static_cast<std::size_t>(pick)]) fiber[r] += v;
        if (!cgs2_append(q, step, fiber, qcol)) break;
        q.col(step) = qcol;
        taken[static_cast<std::size_t>(pick)] = 1;
        selected.push_back(cols.keys[static_cast<std::size_t>(pick)]);
        trace.push_back(scores[pick]);

        // one pass over the nonzeros: d_i -= (q^T A_{:,i})^2
        for (Index i = 0; i < ncols; ++i) {
            double dot = 0.0;
            for (const auto& [r, v] : cols.rows[static_cast<std::size_t>(i)]) dot += qcol[r] * v;
            scores[i] -= dot * dot;
        }
    }
    return {std::move(selected), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Sketched-marginalized sparse selection
// ---------------------------------------------------------------------------

namespace {

struct HashedEntry {
    Index head;    // coordinate of the mode being sampled at this level
    Index bucket;  // merged count-sketch bucket (0 when no merged modes)
    Index target;  // target-mode coordinate
    double value;
};

/// Merge duplicated (head, bucket, target) cells after hashing.
void merge_hashed(std::vector<HashedEntry>& v) {
    std::sort(v.begin(), v.end(), [](const HashedEntry& a, const HashedEntry& b) {
        if (a.head != b.head) return a.head < b.head;
        if (a.bucket != b.bucket) return a.bucket < b.bucket;
        return a.target < b.target;
    });
    std::size_t w = 0;
    for (std::size_t r = 0; r < v.size(); ++r) {
        if (w > 0 && v[w - 1].head == v[r].head && v[w - 1].bucket == v[r].bucket &&
            v[w - 1].target == v[r].target) {
            v[w - 1].value += v[r].value;
        } else {
            v[w++] = v[r];
        }
    }
    v.resize(w);
}

/// Residual scores per head index: sum over (head,bucket) cells of
/// ||v||^2 - ||Q^T v||^2, v the vector over the target mode.
Eigen::VectorXd hashed_scores(const std::vector<HashedEntry>& cells, Index nHead,
                              const Eigen::MatrixXd& q, Index qUsed) {
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(nHead);
    std::size_t i = 0;
    Eigen::VectorXd proj(qUsed);
    while (i < cells.size()) {
        std::size_t j = i;
        double s0 = 0.0;
        proj.setZero();
        while (j < cells.size() && cells[j].head == cells[i].head &&
               cells[j].bucket == cells[i].bucket) {
            s0 += cells[j].value * cells[j].value;
            for (Index l = 0; l < qUsed; ++l) proj[l] += cells[j].value * q(cells[j].target, l);
            ++j;
        }
        scores[cells[i].head] += s0 - proj.squaredNorm();
        i = j;
    }
    return scores.cwiseMax(0.0);
}

}  // namespace

std::vector<MultiIndex> sparse_select_sketched(const SparseTensorCoo& t, Index mode, Index k,
                                               Index sketchDim, Rng& rng,
                                               const MarginSketchPolicy& policy) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    const std::vector<Index> comp = complementary_modes(d, mode);
    const Index nTarget = t.shape[static_cast<std::size_t>(mode)];
    Rng seedGen = rng.split(0x616c6738ULL);

    auto use_sketch = [&](Index sliceNnz, Index nHead, Index mergedSize) {
        if (mergedSize <= 1) return false;  // nothing to merge
        switch (policy.mode) {
            case MarginSketchPolicy::Mode::Always: return true;
            case MarginSketchPolicy::Mode::Never: return false;
            case MarginSketchPolicy::Mode::Auto: break;
        }
        const Index m = sketchDim > 0 ? std::min(sketchDim, mergedSize) : mergedSize;
        return static_cast<double>(sliceNnz) >
               policy.costMultiplier * static_cast<double>(m) * static_cast<double>(nHead) *
                   static_cast<double>(nTarget);
    };

    // entries sorted by the first complementary coordinate for O(log) slicing
    std::vector<Index> order0(static_cast<std::size_t>(t.nnz()));
    std::iota(order0.begin(), order0.end(), Index{0});
    std::sort(order0.begin(), order0.end(), [&](Index a, Index b) {
        return t.coord(a, comp[0]) < t.coord(b, comp[0]);
    });

    // hash trailing modes for the level-1 scores (shared across selections,
    // downdated incrementally)
    Index merged1 = 1;
    for (std::size_t j = 1; j < comp.size(); ++j)
        merged1 *= t.shape[static_cast<std::size_t>(comp[j])];
    const bool sketch1 = use_sketch(t.nnz(), t.shape[static_cast<std::size_t>(comp[0])], merged1);
    if (!sketch1) {
        // whole selection falls back to the direct method
        auto [selected, trace] = sparse_select_direct(t, mode, k, Method::NormSample, 0.0, rng);
        return selected;
    }

    const Index m1 = (sketchDim <= 0 || sketchDim >= merged1) ? merged1 : sketchDim;
    const bool injective1 = m1 == merged1;
    const SketchSeed s1seed{seedGen.next(), seedGen.next()};
    std::vector<HashedEntry> level1(static_cast<std::size_t>(t.nnz()));
    {
        std::vector<Index> key(comp.size() - 1);
        for (Index e = 0; e < t.nnz(); ++e) {
            Index b = 0;
            double sg = 1.0;
            if (injective1) {
                for (std::size_t j = 1; j < comp.size(); ++j)
                    b = b * t.shape[static_cast<std::size_t>(comp[j])] + t.coord(e, comp[j]);
            } else {
                for (std::size_t j = 1; j < comp.size(); ++j) key[j - 1] = t.coord(e, comp[j]);
                std::tie(b, sg) = joint_bucket_sign(s1seed, key.data(), key.size(), m1);
            }
            level1[static_cast<std::size_t>(e)] =
                HashedEntry{t.coord(e, comp[0]), b, t.coord(e, mode), sg * t.values[e]};
        }
        merge_hashed(level1);
    }

    Eigen::MatrixXd q(nTarget, k);
    Index qUsed = 0;
    Eigen::VectorXd scores1 =
        hashed_scores(level1, t.shape[static_cast<std::size_t>(comp[0])], q, 0);

    std::set<MultiIndex> chosen;
    std::vector<MultiIndex> selected;
    Eigen::VectorXd qcol;
    const int kMaxAttempts = 64;
    Index produced = 0;
    while (produced < k) {
        bool gotOne = false;
        for (int attempt = 0; attempt < kMaxAttempts && !gotOne; ++attempt) {
            MultiIndex b(comp.size());
            const Index i1 = sample_proportional(rng, scores1);
            if (i1 < 0) return selected;  // mass exhausted
            b[0] = i1;

            // slice: entries with coord(comp[0]) == i1, via the presorted order
            auto lo = std::lower_bound(order0.begin(), order0.end(), i1, [&](Index e, Index v) {
                return t.coord(e, comp[0]) < v;
            });
            auto hi = std::upper_bound(order0.begin(), order0.end(), i1, [&](Index v, Index e) {
                return v < t.coord(e, comp[0]);
            });
            std::vector<Index> slice(lo, hi);

            bool dead = false;
            std::size_t s = 1;
            for (; s < comp.size(); ++s) {
                Index merged = 1;
                for (std::size_t j = s + 1; j < comp.size(); ++j)
                    merged *= t.shape[static_cast<std::size_t>(comp[j])];
                const Index nHead = t.shape[static_cast<std::size_t>(comp[s])];
                if (!use_sketch(static_cast<Index>(slice.size()), nHead, merged)) break;

                const Index m = (sketchDim <= 0 || sketchDim >= merged) ? merged : sketchDim;
                const bool injective = m == merged;
                const SketchSeed sseed{seedGen.next(), seedGen.next()};
                std::vector<HashedEntry> cells;
                cells.reserve(slice.size());
                std::vector<Index> key(comp.size() - s - 1);
                for (Index e : slice) {
                    Index bk = 0;
                    double sg = 1.0;
                    if (injective) {
                        for (std::size_t j = s + 1; j < comp.size(); ++j)
                            bk = bk * t.shape[static_cast<std::size_t>(comp[j])] + t.coord(e, comp[j]);
                    } else {
                        for (std::size_t j = s + 1; j < comp.size(); ++j)
                            key[j - s - 1] = t.coord(e, comp[j]);
                        std::tie(bk, sg) = joint_bucket_sign(sseed, key.data(), key.size(), m);
                    }
                    cells.push_back(HashedEntry{t.coord(e, comp[s]), bk, t.coord(e, mode),
                                                sg * t.values[e]});
                }
                merge_hashed(cells);
                Eigen::VectorXd sc = hashed_scores(cells, nHead, q, qUsed);
                const Index is = sample_proportional(rng, sc);
                if (is < 0) {
                    dead = true;
                    break;
                }
                b[s] = is;
                std::vector<Index> next;
                next.reserve(slice.size());
                for (Index e : slice)
                    if (t.coord(e, comp[s]) == is) next.push_back(e);
                slice = std::move(next);
            }
            if (dead) continue;

            Eigen::VectorXd fiber = Eigen::VectorXd::Zero(nTarget);
            if (s < comp.size()) {
                // direct joint sampling of the remaining entries of b: group
                // the slice by its tail coordinates without allocations
                auto tail_less = [&](Index ea, Index eb) {
                    for (std::size_t j = s; j < comp.size(); ++j) {
                        if (t.coord(ea, comp[j]) != t.coord(eb, comp[j]))
                            return t.coord(ea, comp[j]) < t.coord(eb, comp[j]);
                    }
                    return false;
                };
                std::sort(slice.begin(), slice.end(), tail_less);
                if (slice.empty()) continue;
                std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end)
                std::vector<double> sc;
                Eigen::VectorXd proj(qUsed);
                std::size_t g = 0;
                MultiIndex full = b;
                while (g < slice.size()) {
                    std::size_t h = g;
                    double s0 = 0.0;
                    proj.setZero();
                    while (h < slice.size() && !tail_less(slice[g], slice[h])) {
                        const double v = t.values[slice[h]];
                        s0 += v * v;
                        for (Index l = 0; l < qUsed; ++l) proj[l] += v * q(t.coord(slice[h], mode), l);
                        ++h;
                    }
                    for (std::size_t j = s; j < comp.size(); ++j)
                        full[j] = t.coord(slice[g], comp[j]);
                    groups.emplace_back(g, h);
                    sc.push_back(chosen.count(full) ? 0.0
                                                    : std::max(0.0, s0 - proj.squaredNorm()));
                    g = h;
                }
                const Index pick = sample_proportional(
                    rng, Eigen::Map<const Eigen::VectorXd>(sc.data(), static_cast<Index>(sc.size())));
                if (pick < 0) continue;
                const auto [gBeg, gEnd] = groups[static_cast<std::size_t>(pick)];
                for (std::size_t j = s; j < comp.size(); ++j)
                    b[j] = t.coord(slice[gBeg], comp[j]);
                for (std::size_t e = gBeg; e < gEnd; ++e)
                    fiber[t.coord(slice[e], mode)] += t.values[slice[e]];
            } else {
                if (chosen.count(b)) continue;  // sketched walk reproduced a previous index
                // slice already matches every entry of b
                for (Index e : slice) fiber[t.coord(e, mode)] += t.values[e];
            }

            // accept: orthonormalize the fiber and downdate the level-1 scores
            if (!cgs2_append(q, qUsed, fiber, qcol)) continue;
            q.col(qUsed) = qcol;
            ++qUsed;
            chosen.insert(b);
            selected.push_back(b);
            {
                std::size_t i = 0;
                while (i < level1.size()) {
                    std::size_t j = i;
                    double dot = 0.0;
                    while (j < level1.size() && level1[j].head == level1[i].head &&
                           level1[j].bucket == level1[i].bucket) {
                        dot += level1[j].value * qcol[level1[j].target];
                        ++j;
                    }
                    scores1[level1[i].head] -= dot * dot;
                    i = j;
                }
                scores1 = scores1.cwiseMax(0.0);
            }
            gotOne = true;
        }
        if (!gotOne) break;  // persistent degeneracy; return what we have
        ++produced;
    }
    return selected;
}

// ---------------------------------------------------------------------------
// Per-mode selection assembled for sparse tensors
// ---------------------------------------------------------------------------

SatIdResult satid_sparse(const SparseTensorCoo& t, const std::vector<Index>& ranks,
                         const MethodChoice& method, Index sketchDim,
                         const MarginSketchPolicy& policy, Index cap) {
    const Index d = t.order();
    check_satid_ranks(ranks, d);
    SatIdResult res;
    res.indexSets.resize(static_cast<std::size_t>(d));
    res.satellites.resize(static_cast<std::size_t>(d));

    if (sketchDim > 0 && method.method != Method::NormSample)
        throw std::invalid_argument("sketched-marginalized selection requires norm sampling");
    for (Index mode = 0; mode < d; ++mode) {
        Rng rng{SketchSeed{method.rngSeed,
                           hash_combine(kTagSatSelect, static_cast<std::uint64_t>(mode))}};
        std::vector<MultiIndex> js;
        if (sketchDim > 0) {
            js = sparse_select_sketched(t, mode, ranks[static_cast<std::size_t>(mode)], sketchDim,
                                        rng, policy);
        } else {
            js = sparse_select_direct(t, mode, ranks[static_cast<std::size_t>(mode)],
                                      method.method, method.tolerance, rng)
                     .first;
        }
        Eigen::MatrixXd ti(t.shape[static_cast<std::size_t>(mode)], static_cast<Index>(js.size()));
        for (std::size_t c = 0; c < js.size(); ++c)
            ti.col(static_cast<Index>(c)) = sparse_fiber(t, mode, js[c]);
        res.indexSets[static_cast<std::size_t>(mode)] = std::move(js);
        res.satellites[static_cast<std::size_t>(mode)] = std::move(ti);
    }
    res.core = solve_core(t, res.satellites, cap);
    return res;
}

}  // namespace tid
