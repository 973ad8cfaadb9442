#include "tid/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace tid {

Index shape_product(const Shape& shape) {
    // zero extents arise internally from exhausted selections
    Index total = 1;
    for (Index n : shape) {
        if (n < 0) throw std::invalid_argument("shape extents must be nonnegative");
        if (n > 0 && total > (std::numeric_limits<Index>::max)() / n)
            throw std::overflow_error("shape product overflows");
        total *= n;
    }
    return total;
}

void check_dense_cap(Index total, Index cap, const char* what) {
    if (total > cap)
        throw ResourceLimitError(std::string(what) + ": " + std::to_string(total) +
                                 " entries exceed cap " + std::to_string(cap));
}

std::vector<Index> row_major_strides(const Shape& shape) {
    std::vector<Index> strides(shape.size());
    Index s = 1;
    for (std::size_t i = shape.size(); i-- > 0;) {
        strides[i] = s;
        s *= shape[i];
    }
    return strides;
}

// ---------------------------------------------------------------------------
// DenseTensor
// ---------------------------------------------------------------------------

DenseTensor::DenseTensor(Shape s, Eigen::VectorXd v) : shape(std::move(s)), values(std::move(v)) {
    if (shape.empty()) throw std::invalid_argument("tensor order must be at least 1");
    if (shape_product(shape) != values.size())
        throw std::invalid_argument("values length does not match shape product");
}

DenseTensor DenseTensor::zeros(Shape s) {
    Index n = shape_product(s);
    return DenseTensor(std::move(s), Eigen::VectorXd::Zero(n));
}

Index DenseTensor::linear_index(const MultiIndex& idx) const {
    if (static_cast<Index>(idx.size()) != order())
        throw std::invalid_argument("index order mismatch");
    Index lin = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= shape[i]) throw std::invalid_argument("index out of range");
        lin = lin * shape[i] + idx[i];
    }
    return lin;
}

// ---------------------------------------------------------------------------
// SparseTensorCoo
// ---------------------------------------------------------------------------

SparseTensorCoo SparseTensorCoo::from_entries(Shape s, std::vector<MultiIndex> coordinates,
                                              std::vector<double> vals) {
    if (coordinates.size() != vals.size())
        throw std::invalid_argument("coordinate/value count mismatch");
    const std::size_t d = s.size();
    if (d == 0) throw std::invalid_argument("tensor order must be at least 1");
    for (const auto& c : coordinates) {
        if (c.size() != d) throw std::invalid_argument("coordinate order mismatch");
        for (std::size_t j = 0; j < d; ++j)
            if (c[j] < 0 || c[j] >= s[j]) throw std::invalid_argument("coordinate out of range");
    }

    std::vector<std::size_t> perm(coordinates.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return coordinates[a] < coordinates[b]; });

    SparseTensorCoo out;
    out.shape = std::move(s);
    std::vector<Index> packed;
    std::vector<double> merged;
    packed.reserve(coordinates.size() * d);
    merged.reserve(vals.size());
    for (std::size_t r = 0; r < perm.size(); ++r) {
        const MultiIndex& c = coordinates[perm[r]];
        double v = vals[perm[r]];
        if (!merged.empty() &&
            std::equal(c.begin(), c.end(), packed.end() - static_cast<std::ptrdiff_t>(d))) {
            merged.back() += v;
        } else {
            packed.insert(packed.end(), c.begin(), c.end());
            merged.push_back(v);
        }
    }
    // drop entries that are (or merged to) exact zero
    std::vector<Index> finalCoords;
    std::vector<double> finalVals;
    finalCoords.reserve(packed.size());
    finalVals.reserve(merged.size());
    for (std::size_t e = 0; e < merged.size(); ++e) {
        if (merged[e] == 0.0) continue;
        finalCoords.insert(finalCoords.end(), packed.begin() + static_cast<std::ptrdiff_t>(e * d),
                           packed.begin() + static_cast<std::ptrdiff_t>((e + 1) * d));
        finalVals.push_back(merged[e]);
    }
    out.coords = std::move(finalCoords);
    out.values = Eigen::Map<Eigen::VectorXd>(finalVals.data(), static_cast<Index>(finalVals.size()));
    return out;
}

// ---------------------------------------------------------------------------
// CpTensor
// ---------------------------------------------------------------------------

CpTensor::CpTensor(std::vector<Eigen::MatrixXd> f)
    : CpTensor(std::move(f), Eigen::VectorXd()) {}

CpTensor::CpTensor(std::vector<Eigen::MatrixXd> f, Eigen::VectorXd w)
    : factors(std::move(f)), weights(std::move(w)) {
    if (factors.empty()) throw std::invalid_argument("CP tensor needs at least one factor");
    Index p = factors.front().cols();
    if (p < 1) throw std::invalid_argument("CP rank must be at least 1");
    for (const auto& h : factors)
        if (h.cols() != p) throw std::invalid_argument("CP factors must share column count");
    if (weights.size() == 0)
        weights = Eigen::VectorXd::Ones(p);
    else if (weights.size() != p)
        throw std::invalid_argument("weight length must equal CP rank");
}

Shape CpTensor::dims() const {
    Shape s(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) s[i] = factors[i].rows();
    return s;
}

// ---------------------------------------------------------------------------
// TuckerApprox
// ---------------------------------------------------------------------------

Shape TuckerApprox::core_shape() const {
    return std::visit(
        [](const auto& c) -> Shape {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, CpTensor>)
                return c.dims();
            else
                return c.shape;
        },
        core);
}

Shape TuckerApprox::full_shape() const {
    Shape s(satellites.size());
    for (std::size_t i = 0; i < satellites.size(); ++i) s[i] = satellites[i].rows();
    return s;
}

// ---------------------------------------------------------------------------
// flatten / unflatten / mode_contract
// ---------------------------------------------------------------------------

namespace {

std::vector<Index> complement_modes(Index order, const std::vector<Index>& rowModes) {
    std::vector<bool> used(static_cast<std::size_t>(order), false);
    for (Index m : rowModes) {
        if (m < 0 || m >= order) throw std::invalid_argument("mode out of range");
        if (used[static_cast<std::size_t>(m)]) throw std::invalid_argument("duplicate mode");
        used[static_cast<std::size_t>(m)] = true;
    }
    std::vector<Index> cols;
    for (Index m = 0; m < order; ++m)
        if (!used[static_cast<std::size_t>(m)]) cols.push_back(m);
    return cols;
}

}  // namespace

Eigen::MatrixXd flatten(const DenseTensor& t, const std::vector<Index>& rowModes) {
    if (rowModes.empty()) throw std::invalid_argument("rowModes must be nonempty");
    const Index d = t.order();
    const std::vector<Index> colModes = complement_modes(d, rowModes);

    Index rows = 1, cols = 1;
    for (Index m : rowModes) rows *= t.shape[static_cast<std::size_t>(m)];
    for (Index m : colModes) cols *= t.shape[static_cast<std::size_t>(m)];

    // strides of the (row, col) pair contributed by each tensor mode
    std::vector<Index> rowStride(static_cast<std::size_t>(d), 0),
        colStride(static_cast<std::size_t>(d), 0);
    Index s = 1;
    for (std::size_t i = rowModes.size(); i-- > 0;) {
        rowStride[static_cast<std::size_t>(rowModes[i])] = s;
        s *= t.shape[static_cast<std::size_t>(rowModes[i])];
    }
    s = 1;
    for (std::size_t i = colModes.size(); i-- > 0;) {
        colStride[static_cast<std::size_t>(colModes[i])] = s;
        s *= t.shape[static_cast<std::size_t>(colModes[i])];
    }

    Eigen::MatrixXd out(rows, cols);
    MultiIndex idx(static_cast<std::size_t>(d), 0);
    for (Index lin = 0; lin < t.size(); ++lin) {
        Index r = 0, c = 0;
        for (Index m = 0; m < d; ++m) {
            r += idx[static_cast<std::size_t>(m)] * rowStride[static_cast<std::size_t>(m)];
            c += idx[static_cast<std::size_t>(m)] * colStride[static_cast<std::size_t>(m)];
        }
        out(r, c) = t.values[lin];
        for (Index m = d - 1; m >= 0; --m) {
            if (++idx[static_cast<std::size_t>(m)] < t.shape[static_cast<std::size_t>(m)]) break;
            idx[static_cast<std::size_t>(m)] = 0;
        }
    }
    return out;
}

DenseTensor unflatten(const Eigen::MatrixXd& m, const Shape& shape,
                      const std::vector<Index>& rowModes) {
    DenseTensor t = DenseTensor::zeros(shape);
    const Index d = t.order();
    const std::vector<Index> colModes = complement_modes(d, rowModes);

    std::vector<Index> rowStride(static_cast<std::size_t>(d), 0),
        colStride(static_cast<std::size_t>(d), 0);
    Index s = 1;
    for (std::size_t i = rowModes.size(); i-- > 0;) {
        rowStride[static_cast<std::size_t>(rowModes[i])] = s;
        s *= shape[static_cast<std::size_t>(rowModes[i])];
    }
    s = 1;
    for (std::size_t i = colModes.size(); i-- > 0;) {
        colStride[static_cast<std::size_t>(colModes[i])] = s;
        s *= shape[static_cast<std::size_t>(colModes[i])];
    }
    if (m.rows() * m.cols() != t.size()) throw std::invalid_argument("matrix/shape size mismatch");

    MultiIndex idx(static_cast<std::size_t>(d), 0);
    for (Index lin = 0; lin < t.size(); ++lin) {
        Index r = 0, c = 0;
        for (Index mo = 0; mo < d; ++mo) {
            r += idx[static_cast<std::size_t>(mo)] * rowStride[static_cast<std::size_t>(mo)];
            c += idx[static_cast<std::size_t>(mo)] * colStride[static_cast<std::size_t>(mo)];
        }
        t.values[lin] = m(r, c);
        for (Index mo = d - 1; mo >= 0; --mo) {
            if (++idx[static_cast<std::size_t>(mo)] < shape[static_cast<std::size_t>(mo)]) break;
            idx[static_cast<std::size_t>(mo)] = 0;
        }
    }
    return t;
}

DenseTensor mode_contract(const DenseTensor& t, Index mode, const Eigen::MatrixXd& m) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    const Index n = t.shape[static_cast<std::size_t>(mode)];
    if (m.cols() != n) throw std::invalid_argument("mode_contract: matrix column count mismatch");
    const Index k = m.rows();

    Index inner = 1, outer = 1;
    for (Index i = mode + 1; i < d; ++i) inner *= t.shape[static_cast<std::size_t>(i)];
    for (Index i = 0; i < mode; ++i) outer *= t.shape[static_cast<std::size_t>(i)];

    Shape outShape = t.shape;
    outShape[static_cast<std::size_t>(mode)] = k;
    DenseTensor out = DenseTensor::zeros(outShape);
    if (out.size() == 0 || t.size() == 0) return out;

    for (Index o = 0; o < outer; ++o) {
        // fiber block: values[o*n*inner + j*inner + in]
        Eigen::Map<const Eigen::MatrixXd> block(t.values.data() + o * n * inner, inner, n);
        Eigen::Map<Eigen::MatrixXd> dst(out.values.data() + o * k * inner, inner, k);
        dst.noalias() = block * m.transpose();
    }
    return out;
}

DenseTensor tucker_reconstruct(const TuckerApprox& a, Index cap) {
    DenseTensor cur = materialize_core(a, cap);
    if (static_cast<Index>(a.satellites.size()) != cur.order())
        throw std::invalid_argument("satellite count must equal core order");
    const Shape full = a.full_shape();
    check_dense_cap(shape_product(full), cap, "tucker_reconstruct");
    for (std::size_t i = 0; i < a.satellites.size(); ++i) {
        const Eigen::MatrixXd& u = a.satellites[i];
        if (u.cols() != cur.shape[i])
            throw std::invalid_argument("satellite column count mismatch with core");
        Shape nextShape = cur.shape;
        nextShape[i] = u.rows();
        check_dense_cap(shape_product(nextShape), cap, "tucker_reconstruct");
        cur = mode_contract(cur, static_cast<Index>(i), u);
    }
    return cur;
}

DenseTensor cp_materialize(const CpTensor& t, Index cap) {
    Shape shape = t.dims();
    Index total = shape_product(shape);
    check_dense_cap(total, cap, "cp_materialize");
    DenseTensor out = DenseTensor::zeros(shape);
    if (total == 0) return out;
    const Index d = t.order();
    const Index p = t.rank_terms();

    const Index rest = total / shape[0];
    if (rest * p <= Index{64'000'000}) {
        // Khatri-Rao over modes 2..d (first listed slowest), then one GEMM:
        // out block for i_1 is column i_1 of KR * diag(w) * H_1^T
        Eigen::MatrixXd kr = Eigen::MatrixXd::Ones(1, p);
        for (Index j = 1; j < d; ++j) {
            const Eigen::MatrixXd& h = t.factors[static_cast<std::size_t>(j)];
            Eigen::MatrixXd next(kr.rows() * h.rows(), p);
            for (Index a = 0; a < kr.rows(); ++a)
                for (Index b = 0; b < h.rows(); ++b)
                    next.row(a * h.rows() + b) = kr.row(a).cwiseProduct(h.row(b));
            kr = std::move(next);
        }
        kr.array().rowwise() *= t.weights.transpose().array();
        Eigen::MatrixXd block = kr * t.factors[0].transpose();  // rest x n_1
        for (Index i = 0; i < shape[0]; ++i) out.values.segment(i * rest, rest) = block.col(i);
        return out;
    }

    MultiIndex idx(static_cast<std::size_t>(d), 0);
    for (Index lin = 0; lin < total; ++lin) {
        double acc = 0.0;
        for (Index k = 0; k < p; ++k) {
            double term = t.weights[k];
            for (Index j = 0; j < d; ++j)
                term *= t.factors[static_cast<std::size_t>(j)](idx[static_cast<std::size_t>(j)], k);
            acc += term;
        }
        out.values[lin] = acc;
        for (Index m = d - 1; m >= 0; --m) {
            if (++idx[static_cast<std::size_t>(m)] < shape[static_cast<std::size_t>(m)]) break;
            idx[static_cast<std::size_t>(m)] = 0;
        }
    }
    return out;
}

Eigen::MatrixXd cp_flatten_gram(const CpTensor& t, Index mode) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    Eigen::MatrixXd g = t.weights * t.weights.transpose();
    for (Index j = 0; j < d; ++j) {
        if (j == mode) continue;
        const Eigen::MatrixXd& h = t.factors[static_cast<std::size_t>(j)];
        g = g.cwiseProduct((h.transpose() * h).eval());
    }
    const Eigen::MatrixXd& hi = t.factors[static_cast<std::size_t>(mode)];
    return hi * g * hi.transpose();
}

SparseTensorCoo sparse_slice(const SparseTensorCoo& t, Index mode, Index index) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    if (index < 0 || index >= t.shape[static_cast<std::size_t>(mode)])
        throw std::invalid_argument("slice index out of range");
    if (d == 1) throw std::invalid_argument("cannot slice an order-1 tensor");

    SparseTensorCoo out;
    out.shape.reserve(static_cast<std::size_t>(d - 1));
    for (Index i = 0; i < d; ++i)
        if (i != mode) out.shape.push_back(t.shape[static_cast<std::size_t>(i)]);

    std::vector<Index> coords;
    std::vector<double> vals;
    for (Index e = 0; e < t.nnz(); ++e) {
        if (t.coord(e, mode) != index) continue;
        for (Index i = 0; i < d; ++i)
            if (i != mode) coords.push_back(t.coord(e, i));
        vals.push_back(t.values[e]);
    }
    out.coords = std::move(coords);
    out.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Index>(vals.size()));
    // dropping one mode of lexicographically sorted coordinates can unsort
    // only if the dropped mode is not a prefix; re-canonicalize cheaply
    if (mode != 0 && out.nnz() > 1) {
        std::vector<MultiIndex> cs(static_cast<std::size_t>(out.nnz()));
        std::vector<double> vs(static_cast<std::size_t>(out.nnz()));
        for (Index e = 0; e < out.nnz(); ++e) {
            cs[static_cast<std::size_t>(e)] =
                MultiIndex(out.coords.begin() + e * (d - 1), out.coords.begin() + (e + 1) * (d - 1));
            vs[static_cast<std::size_t>(e)] = out.values[e];
        }
        return SparseTensorCoo::from_entries(out.shape, std::move(cs), std::move(vs));
    }
    return out;
}

Eigen::VectorXd khatri_rao_row(const std::vector<const Eigen::MatrixXd*>& factors,
                               const MultiIndex& idx) {
    if (factors.empty()) throw std::invalid_argument("khatri_rao_row: empty factor list");
    if (factors.size() != idx.size())
        throw std::invalid_argument("khatri_rao_row: one index per factor required");
    Eigen::VectorXd row = factors[0]->row(idx[0]).transpose();
    for (std::size_t j = 1; j < factors.size(); ++j)
        row = row.cwiseProduct(factors[j]->row(idx[j]).transpose());
    return row;
}

SparseTensorCoo sparse_restrict(const SparseTensorCoo& t, Index mode,
                                const std::vector<Index>& keep) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    std::vector<Index> pos(static_cast<std::size_t>(t.shape[static_cast<std::size_t>(mode)]), -1);
    for (std::size_t j = 0; j < keep.size(); ++j) {
        if (keep[j] < 0 || keep[j] >= t.shape[static_cast<std::size_t>(mode)])
            throw std::invalid_argument("restrict index out of range");
        pos[static_cast<std::size_t>(keep[j])] = static_cast<Index>(j);
    }

    std::vector<MultiIndex> cs;
    std::vector<double> vs;
    for (Index e = 0; e < t.nnz(); ++e) {
        Index p = pos[static_cast<std::size_t>(t.coord(e, mode))];
        if (p < 0) continue;
        MultiIndex c(static_cast<std::size_t>(d));
        for (Index i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = t.coord(e, i);
        c[static_cast<std::size_t>(mode)] = p;
        cs.push_back(std::move(c));
        vs.push_back(t.values[e]);
    }
    Shape shape = t.shape;
    shape[static_cast<std::size_t>(mode)] = static_cast<Index>(keep.size());
    return SparseTensorCoo::from_entries(std::move(shape), std::move(cs), std::move(vs));
}

DenseTensor sparse_to_dense(const SparseTensorCoo& t, Index cap) {
    Index total = shape_product(t.shape);
    check_dense_cap(total, cap, "sparse_to_dense");
    DenseTensor out = DenseTensor::zeros(t.shape);
    const auto strides = row_major_strides(t.shape);
    for (Index e = 0; e < t.nnz(); ++e) {
        Index lin = 0;
        for (Index i = 0; i < t.order(); ++i) lin += t.coord(e, i) * strides[static_cast<std::size_t>(i)];
        out.values[lin] += t.values[e];
    }
    return out;
}

DenseTensor sparse_ttm(const SparseTensorCoo& t, Index mode, const Eigen::MatrixXd& m, Index cap) {
    const Index d = t.order();
    if (mode < 0 || mode >= d) throw std::invalid_argument("mode out of range");
    if (m.cols() != t.shape[static_cast<std::size_t>(mode)])
        throw std::invalid_argument("sparse_ttm: matrix column count mismatch");
    Shape outShape = t.shape;
    outShape[static_cast<std::size_t>(mode)] = m.rows();
    Index total = shape_product(outShape);
    check_dense_cap(total, cap, "sparse_ttm");

    DenseTensor out = DenseTensor::zeros(outShape);
    const auto strides = row_major_strides(outShape);
    const Index k = m.rows();
    const Index modeStride = strides[static_cast<std::size_t>(mode)];
    for (Index e = 0; e < t.nnz(); ++e) {
        Index base = 0;
        for (Index i = 0; i < d; ++i)
            if (i != mode) base += t.coord(e, i) * strides[static_cast<std::size_t>(i)];
        const double v = t.values[e];
        const Index src = t.coord(e, mode);
        for (Index r = 0; r < k; ++r) out.values[base + r * modeStride] += m(r, src) * v;
    }
    return out;
}

DenseTensor materialize_core(const TuckerApprox& a, Index cap) {
    return std::visit(
        [cap](const auto& c) -> DenseTensor {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, DenseTensor>)
                return c;
            else if constexpr (std::is_same_v<T, SparseTensorCoo>)
                return sparse_to_dense(c, cap);
            else
                return cp_materialize(c, cap);
        },
        a.core);
}

}  // namespace tid
