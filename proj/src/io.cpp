#include "tid/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tid {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// FROSTT
// ---------------------------------------------------------------------------

SparseTensorCoo parse_frostt_stream(std::istream& in, const Shape* shapeOverride) {
    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    Shape maxCoord;
    std::string line;
    std::size_t lineNo = 0;
    std::size_t order = 0;

    while (std::getline(in, line)) {
        ++lineNo;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> fields;
        double x;
        while (ls >> x) fields.push_back(x);
        if (!ls.eof())
            throw ParseError("line " + std::to_string(lineNo) + ": malformed token");
        if (fields.size() < 2)
            throw ParseError("line " + std::to_string(lineNo) + ": expected coordinates and a value");
        if (order == 0) {
            order = fields.size() - 1;
            maxCoord.assign(order, 0);
        } else if (fields.size() - 1 != order) {
            throw ParseError("line " + std::to_string(lineNo) + ": inconsistent coordinate count");
        }
        MultiIndex c(order);
        for (std::size_t j = 0; j < order; ++j) {
            const double f = fields[j];
            const Index v = static_cast<Index>(f);
            if (static_cast<double>(v) != f || v <= 0)
                throw ParseError("line " + std::to_string(lineNo) +
                                 ": coordinates must be positive integers");
            c[j] = v - 1;  // to 0-based
            maxCoord[j] = std::max(maxCoord[j], v);
        }
        coords.push_back(std::move(c));
        vals.push_back(fields[order]);
    }
    if (order == 0) throw ParseError("empty tensor file");

    Shape shape = shapeOverride != nullptr ? *shapeOverride : maxCoord;
    if (shape.size() != order) throw ParseError("shape override order mismatch");
    for (std::size_t j = 0; j < order; ++j)
        if (shape[j] < maxCoord[j]) throw ParseError("shape override smaller than data");
    return SparseTensorCoo::from_entries(std::move(shape), std::move(coords), std::move(vals));
}

SparseTensorCoo parse_frostt(const fs::path& path, const Shape* shapeOverride) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return parse_frostt_stream(in, shapeOverride);
}

void write_tns(const fs::path& path, const SparseTensorCoo& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (Index e = 0; e < t.nnz(); ++e) {
        for (Index j = 0; j < t.order(); ++j) out << (t.coord(e, j) + 1) << ' ';
        out << format_double(t.values[e]) << '\n';
    }
}

SparseTensorCoo subsample_sparse(const SparseTensorCoo& t, const std::vector<Index>& strides,
                                 const std::vector<Index>& contractModes) {
    const Index d = t.order();
    if (static_cast<Index>(strides.size()) != d)
        throw std::invalid_argument("stride count must equal tensor order");
    for (Index s : strides)
        if (s < 1) throw std::invalid_argument("strides must be at least 1");
    std::vector<bool> contracted(static_cast<std::size_t>(d), false);
    for (Index m : contractModes) {
        if (m < 0 || m >= d) throw std::invalid_argument("contract mode out of range");
        contracted[static_cast<std::size_t>(m)] = true;
    }

    Shape outShape;
    std::vector<Index> keptModes;
    for (Index j = 0; j < d; ++j) {
        if (contracted[static_cast<std::size_t>(j)]) continue;
        keptModes.push_back(j);
        outShape.push_back((t.shape[static_cast<std::size_t>(j)] - 1) / strides[static_cast<std::size_t>(j)] + 1);
    }
    if (outShape.empty()) throw std::invalid_argument("cannot contract every mode");

    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    for (Index e = 0; e < t.nnz(); ++e) {
        bool keep = true;
        for (Index j = 0; j < d && keep; ++j)
            keep = t.coord(e, j) % strides[static_cast<std::size_t>(j)] == 0;
        if (!keep) continue;
        MultiIndex c(keptModes.size());
        for (std::size_t i = 0; i < keptModes.size(); ++i) {
            const Index j = keptModes[i];
            c[i] = t.coord(e, j) / strides[static_cast<std::size_t>(j)];
        }
        coords.push_back(std::move(c));
        vals.push_back(t.values[e]);
    }
    return SparseTensorCoo::from_entries(std::move(outShape), std::move(coords), std::move(vals));
}

// ---------------------------------------------------------------------------
// CP factor directories
// ---------------------------------------------------------------------------

CpTensor load_cp_factors(const fs::path& dir) {
    std::vector<Eigen::MatrixXd> factors;
    for (Index mode = 1;; ++mode) {
        fs::path f = dir / ("mode" + std::to_string(mode) + ".txt");
        if (!fs::exists(f)) break;
        factors.push_back(read_matrix_text(f));
    }
    if (factors.empty()) throw ParseError("no mode1.txt found in " + dir.string());
    const Index p = factors.front().cols();
    for (const auto& h : factors)
        if (h.cols() != p) throw ParseError("factor column counts differ in " + dir.string());

    fs::path wf = dir / "weights.txt";
    if (fs::exists(wf)) {
        Eigen::MatrixXd w = read_matrix_text(wf);
        Eigen::VectorXd weights =
            w.cols() == 1 ? Eigen::VectorXd(w.col(0)) : Eigen::VectorXd(w.row(0).transpose());
        if (weights.size() != p) throw ParseError("weights length mismatch in " + dir.string());
        return CpTensor(std::move(factors), std::move(weights));
    }
    return CpTensor(std::move(factors));
}

void save_cp_factors(const fs::path& dir, const CpTensor& t) {
    fs::create_directories(dir);
    for (Index mode = 0; mode < t.order(); ++mode)
        write_matrix_text(dir / ("mode" + std::to_string(mode + 1) + ".txt"),
                          t.factors[static_cast<std::size_t>(mode)]);
    write_matrix_text(dir / "weights.txt", t.weights.transpose());
}

// ---------------------------------------------------------------------------
// Dense text / matrices
// ---------------------------------------------------------------------------

DenseTensor read_dense_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    Index d = 0;
    if (!(in >> d) || d < 1) throw ParseError("bad order in " + path.string());
    Shape shape(static_cast<std::size_t>(d));
    for (auto& n : shape)
        if (!(in >> n) || n < 1) throw ParseError("bad shape in " + path.string());
    const Index total = shape_product(shape);
    Eigen::VectorXd values(total);
    for (Index i = 0; i < total; ++i)
        if (!(in >> values[i])) throw ParseError("missing values in " + path.string());
    return DenseTensor(std::move(shape), std::move(values));
}

void write_dense_text(const fs::path& path, const DenseTensor& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << t.order() << '\n';
    for (Index j = 0; j < t.order(); ++j)
        out << t.shape[static_cast<std::size_t>(j)] << (j + 1 < t.order() ? ' ' : '\n');
    for (Index i = 0; i < t.size(); ++i) out << format_double(t.values[i]) << '\n';
}

Eigen::MatrixXd read_matrix_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (row.empty()) continue;
        if (!rows.empty() && rows.front().size() != row.size())
            throw ParseError("ragged matrix in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix in " + path.string());
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return m;
}

void write_matrix_text(const fs::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c)
            out << format_double(m(r, c)) << (c + 1 < m.cols() ? " " : "");
        out << '\n';
    }
}

}  // namespace tid
