#pragma once

#include <doctest.h>

#include "tid/rng.hpp"
#include "tid/tensor.hpp"

#include <Eigen/Dense>

namespace tt {

inline Eigen::MatrixXd random_matrix(tid::Index rows, tid::Index cols, tid::Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (tid::Index r = 0; r < rows; ++r)
        for (tid::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

inline tid::DenseTensor random_dense(const tid::Shape& shape, tid::Rng& rng) {
    tid::DenseTensor t = tid::DenseTensor::zeros(shape);
    for (tid::Index i = 0; i < t.size(); ++i) t.values[i] = rng.normal();
    return t;
}

inline tid::CpTensor random_cp(const tid::Shape& dims, tid::Index p, tid::Rng& rng,
                               bool withWeights = false) {
    std::vector<Eigen::MatrixXd> factors;
    for (tid::Index n : dims) factors.push_back(random_matrix(n, p, rng));
    if (!withWeights) return tid::CpTensor(std::move(factors));
    Eigen::VectorXd w(p);
    for (tid::Index k = 0; k < p; ++k) w[k] = 0.5 + rng.uniform01();
    return tid::CpTensor(std::move(factors), std::move(w));
}

/// Total variation distance between an empirical count vector and a
/// probability vector.
inline double tv_distance(const Eigen::VectorXd& counts, const Eigen::VectorXd& probs) {
    const double n = counts.sum();
    double tv = 0.0;
    for (tid::Index i = 0; i < counts.size(); ++i) tv += std::abs(counts[i] / n - probs[i]);
    return 0.5 * tv;
}

}  // namespace tt
