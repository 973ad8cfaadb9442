#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "tid/tensor.hpp"

namespace tid {

/// Raised on malformed input files; message carries the line number.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// FROSTT coordinate text: whitespace-separated 1-based integer coordinates
/// followed by one real value per line; `#` comment lines skipped. Duplicate
/// coordinates are summed. Shape is inferred from per-mode maxima unless
/// shapeOverride is given.
SparseTensorCoo parse_frostt(const std::filesystem::path& path, const Shape* shapeOverride = nullptr);
SparseTensorCoo parse_frostt_stream(std::istream& in, const Shape* shapeOverride = nullptr);

/// 1-based .tns output matching the FROSTT layout.
void write_tns(const std::filesystem::path& path, const SparseTensorCoo& t);

/// Keep coordinates divisible by the per-mode strides (re-indexed by
/// division), then sum out the listed modes.
SparseTensorCoo subsample_sparse(const SparseTensorCoo& t, const std::vector<Index>& strides,
                                 const std::vector<Index>& contractModes = {});

/// CP factor directory: mode1.txt..mode{d}.txt, each a whitespace dense
/// matrix with n_i rows and p columns, plus optional weights.txt.
CpTensor load_cp_factors(const std::filesystem::path& dir);
void save_cp_factors(const std::filesystem::path& dir, const CpTensor& t);

/// Dense text format: first line `d`, second line the shape, then values in
/// row-major order.
DenseTensor read_dense_text(const std::filesystem::path& path);
void write_dense_text(const std::filesystem::path& path, const DenseTensor& t);

Eigen::MatrixXd read_matrix_text(const std::filesystem::path& path);
void write_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Doubles serialized with 17 significant digits (value round-trip).
std::string format_double(double v);

}  // namespace tid
