#include <doctest.h>

#include "test_helpers.hpp"
#include "tid/matrix_id.hpp"
#include "tid/sketch.hpp"

#include <algorithm>

using namespace tid;

namespace {

Eigen::MatrixXd orth_basis(const Eigen::MatrixXd& cols) {
    if (cols.cols() == 0) return Eigen::MatrixXd(cols.rows(), 0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(cols);
    const Index r = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cols.rows(), r);
    return q;
}

/// Exhaustive residual squared norm of column i given selected columns I.
double residual_sq(const Eigen::MatrixXd& b, const std::vector<Index>& sel, Index i) {
    Eigen::MatrixXd cols(b.rows(), static_cast<Index>(sel.size()));
    for (std::size_t c = 0; c < sel.size(); ++c) cols.col(static_cast<Index>(c)) = b.col(sel[c]);
    Eigen::MatrixXd q = orth_basis(cols);
    Eigen::VectorXd r = b.col(i) - q * (q.transpose() * b.col(i));
    return r.squaredNorm();
}

/// Posterior reconstruction error after augmenting the selection with i.
double posterior_err_sq(const Eigen::MatrixXd& b, std::vector<Index> sel, Index i) {
    sel.push_back(i);
    Eigen::MatrixXd cols(b.rows(), static_cast<Index>(sel.size()));
    for (std::size_t c = 0; c < sel.size(); ++c) cols.col(static_cast<Index>(c)) = b.col(sel[c]);
    Eigen::MatrixXd q = orth_basis(cols);
    return (b - q * (q.transpose() * b)).squaredNorm();
}

}  // namespace

TEST_SUITE("matrix_id") {

TEST_CASE("norm max picks orthogonal columns by decreasing norm") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
    b(0, 0) = 1.0;
    b(1, 1) = 2.0;
    b(2, 2) = 3.0;
    SelectionResult r = norm_max_select(b, 2);
    REQUIRE(r.indices.size() == 2);
    CHECK(r.indices[0] == 2);
    CHECK(r.indices[1] == 1);
}

TEST_CASE("norm max stops early on a rank-1 matrix") {
    Rng rng{200};
    Eigen::VectorXd u = tt::random_matrix(5, 1, rng);
    Eigen::VectorXd v = tt::random_matrix(4, 1, rng);
    Eigen::MatrixXd b = u * v.transpose();
    SelectionResult r = norm_max_select(b, 2, 1e-12);
    CHECK(r.indices.size() == 1);
}

TEST_CASE("norm max pick matches the exhaustive residual oracle at every step") {
    Rng rng{201};
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd b = tt::random_matrix(8, 6, rng);
        SelectionResult r = norm_max_select(b, 3);
        std::vector<Index> sel;
        for (Index pick : r.indices) {
            Index best = -1;
            double bestScore = -1.0;
            for (Index i = 0; i < b.cols(); ++i) {
                double s = residual_sq(b, sel, i);
                if (s > bestScore + 1e-12 * b.squaredNorm()) {
                    bestScore = s;
                    best = i;
                }
            }
            CHECK(pick == best);
            sel.push_back(pick);
        }
    }
}

TEST_CASE("norm sampling selects the only nonzero column") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 3);
    b(1, 2) = 5.0;
    Rng rng{202};
    SelectionResult r = norm_sample_select(b, 1, 1e-12, rng);
    REQUIRE(r.indices.size() == 1);
    CHECK(r.indices[0] == 2);
}

TEST_CASE("norm sampling first-pick distribution is proportional to squared norms") {
    SUBCASE("equal-norm duplicated columns") {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 3);
        b(0, 0) = 1.0;
        b(0, 1) = 1.0;
        b(1, 2) = 1.0;
        Rng rng{203};
        Eigen::Vector3d counts = Eigen::Vector3d::Zero();
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) {
            SelectionResult r = norm_sample_select(b, 1, 0.0, rng);
            counts[r.indices[0]] += 1.0;
        }
        for (int i = 0; i < 3; ++i) {
            double p = counts[i] / draws;
            double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / draws);
            CHECK(std::abs(p - 1.0 / 3) <= 3 * sigma);
        }
    }
    SUBCASE("random matrix") {
        Rng rng{204};
        Eigen::MatrixXd b = tt::random_matrix(6, 5, rng);
        Eigen::VectorXd probs = b.colwise().squaredNorm();
        probs /= probs.sum();
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(5);
        const int draws = 20000;
        for (int i = 0; i < draws; ++i) {
            SelectionResult r = norm_sample_select(b, 1, 0.0, rng);
            counts[r.indices[0]] += 1.0;
        }
        for (Index i = 0; i < 5; ++i) {
            double sigma = std::sqrt(probs[i] * (1 - probs[i]) / draws);
            CHECK(std::abs(counts[i] / draws - probs[i]) <= 3 * sigma);
        }
    }
}

TEST_CASE("nuclear selection on a diagonal Gram picks the largest diagonal") {
    Eigen::MatrixXd k = Eigen::Vector3d(1, 4, 9).asDiagonal();
    SelectionResult r = nuclear_max_select_gram(k, 1);
    REQUIRE(r.indices.size() == 1);
    CHECK(r.indices[0] == 2);
}

TEST_CASE("nuclear selection exhausts a rank-1 Gram after one pick") {
    Rng rng{205};
    Eigen::VectorXd v = tt::random_matrix(4, 1, rng);
    Eigen::MatrixXd k = v * v.transpose();
    SelectionResult r = nuclear_max_select_gram(k, 2, 1e-12);
    CHECK(r.indices.size() == 1);
}

TEST_CASE("nuclear pick matches the exhaustive posterior-error oracle") {
    Rng rng{206};
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd b = tt::random_matrix(7, 5, rng);
        SelectionResult r = nuclear_max_select(b, 3);
        std::vector<Index> sel;
        for (Index pick : r.indices) {
            Index best = -1;
            double bestErr = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < b.cols(); ++i) {
                if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
                double e = posterior_err_sq(b, sel, i);
                if (e < bestErr - 1e-12 * b.squaredNorm()) {
                    bestErr = e;
                    best = i;
                }
            }
            CHECK(pick == best);
            sel.push_back(pick);
        }
    }
}

TEST_CASE("nuclear score equals the posterior-error reduction") {
    Rng rng{207};
    for (int trial = 0; trial < 10; ++trial) {
        Index n = 4 + static_cast<Index>(rng.below(6));  // up to 10 columns
        Eigen::MatrixXd b = tt::random_matrix(n + 2, n, rng);
        Eigen::MatrixXd k = b.transpose() * b;
        const double total = b.squaredNorm();
        for (Index j = 0; j < n; ++j) {
            double score = k.col(j).squaredNorm() / k(j, j);
            double reduction = total - posterior_err_sq(b, {}, j);
            CHECK(score == doctest::Approx(reduction).epsilon(1e-8));
        }
    }
}

TEST_CASE("nuclear rejects a non-symmetric Gram") {
    Eigen::MatrixXd k(2, 2);
    k << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS((void)nuclear_max_select_gram(k, 1), std::invalid_argument);
}

TEST_CASE("selection rank above the column count is rejected") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Ones(3, 2);
    CHECK_THROWS_AS((void)norm_max_select(b, 3), std::invalid_argument);
}

TEST_CASE("uniform selection: full draw, balance, reproducibility") {
    Rng rng{208};
    SelectionResult all = uniform_select(4, 4, rng);
    std::vector<Index> sorted = all.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Index>{0, 1, 2, 3});

    int ones = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        Rng r{SketchSeed{static_cast<std::uint64_t>(i), 42}};
        if (uniform_select(2, 1, r).indices[0] == 1) ++ones;
    }
    double sigma = std::sqrt(0.25 / draws);
    CHECK(std::abs(ones / static_cast<double>(draws) - 0.5) <= 3 * sigma);

    Rng r1{99}, r2{99};
    CHECK(uniform_select(10, 3, r1).indices == uniform_select(10, 3, r2).indices);
}

TEST_CASE("interpolation coefficients reproduce spanned matrices") {
    Rng rng{209};
    Eigen::MatrixXd base = tt::random_matrix(6, 3, rng);
    Eigen::MatrixXd mix = tt::random_matrix(3, 5, rng);
    Eigen::MatrixXd a(6, 8);
    a << base, base * mix;  // columns 0..2 span everything
    Eigen::MatrixXd x = interpolation_coeffs(a, {0, 1, 2});
    Eigen::MatrixXd sub = a.leftCols(3);
    CHECK((sub * x - a).norm() <= 1e-10 * a.norm());
}

TEST_CASE("interpolation against an orthonormal subset is a projection") {
    Rng rng{210};
    Eigen::MatrixXd q = orth_basis(tt::random_matrix(7, 3, rng));
    Eigen::MatrixXd rest = tt::random_matrix(7, 4, rng);
    Eigen::MatrixXd a(7, 7);
    a << q, rest;
    Eigen::MatrixXd x = interpolation_coeffs(a, {0, 1, 2});
    CHECK((x - q.transpose() * a).norm() <= 1e-10 * a.norm());
}

TEST_CASE("interpolation residual matches the pseudoinverse oracle") {
    Rng rng{211};
    Eigen::MatrixXd a = tt::random_matrix(6, 8, rng);
    std::vector<Index> j{1, 4, 6};
    Eigen::MatrixXd x = interpolation_coeffs(a, j);
    Eigen::MatrixXd sub(6, 3);
    for (Index c = 0; c < 3; ++c) sub.col(c) = a.col(j[static_cast<std::size_t>(c)]);
    Eigen::MatrixXd oracle = pinv(sub) * a;
    CHECK(((sub * x - a).norm() - (sub * oracle - a).norm()) <= 1e-10 * a.norm());
    CHECK((x - oracle).norm() <= 1e-8 * oracle.norm());
}

TEST_CASE("selected columns interpolate exactly") {
    Rng rng{212};
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd a = tt::random_matrix(9, 7, rng);
        SelectionResult r = norm_max_select(a, 4);
        Eigen::MatrixXd sub(9, static_cast<Index>(r.indices.size()));
        for (std::size_t c = 0; c < r.indices.size(); ++c)
            sub.col(static_cast<Index>(c)) = a.col(r.indices[c]);
        for (std::size_t c = 0; c < r.indices.size(); ++c) {
            Eigen::VectorXd err = sub * r.coeffs.col(r.indices[c]) - a.col(r.indices[c]);
            CHECK(err.norm() <= 1e-10 * a.norm());
        }
    }
}

TEST_CASE("scores stay nonnegative and deflation matches recomputation") {
    Rng rng{213};
    Eigen::MatrixXd b = tt::random_matrix(10, 8, rng);
    // replay the selection loop to observe the intermediate scores
    Eigen::VectorXd scores = b.colwise().squaredNorm();
    Eigen::MatrixXd q(10, 4);
    std::vector<Index> sel;
    double prevTrace = scores.sum();
    for (Index step = 0; step < 4; ++step) {
        Index pick;
        scores.maxCoeff(&pick);
        Eigen::VectorXd qcol;
        REQUIRE(cgs2_append(q, step, b.col(pick), qcol));
        q.col(step) = qcol;
        Eigen::VectorXd proj = b.transpose() * qcol;
        scores -= proj.cwiseProduct(proj);
        sel.push_back(pick);

        CHECK(scores.minCoeff() >= -1e-12 * b.squaredNorm());
        CHECK(scores.sum() <= prevTrace + 1e-12 * b.squaredNorm());
        prevTrace = scores.sum();
        for (Index i = 0; i < b.cols(); ++i) {
            double fresh = residual_sq(b, sel, i);
            CHECK(scores[i] == doctest::Approx(fresh).epsilon(1e-8).scale(b.squaredNorm()));
        }
    }
}

TEST_CASE("sketched selection with no sketch equals the unsketched method") {
    Rng rng{214};
    Eigen::MatrixXd a = tt::random_matrix(12, 6, rng);
    MethodChoice mc;
    mc.method = Method::NormMax;
    mc.rngSeed = 5;
    SelectionResult plain = norm_max_select(a, 3, mc.tolerance);
    SelectionResult viaId = sketched_matrix_id(a, 3, mc, SketchConfig::none());
    CHECK(plain.indices == viaId.indices);
    CHECK((plain.coeffs - viaId.coeffs).norm() == 0.0);
}

TEST_CASE("gaussian-sketched selection recovers exact-rank matrices") {
    Rng rng{215};
    for (int trial = 0; trial < 5; ++trial) {
        const Index r = 3;
        Eigen::MatrixXd a = tt::random_matrix(40, r, rng) * tt::random_matrix(r, 12, rng);
        MethodChoice mc;
        mc.method = Method::NormMax;
        mc.rngSeed = static_cast<std::uint64_t>(trial);
        SelectionResult sel = sketched_matrix_id(a, r, mc, SketchConfig::gaussian(4 * r));
        REQUIRE(sel.indices.size() == static_cast<std::size_t>(r));
        Eigen::MatrixXd sub(40, r);
        for (Index c = 0; c < r; ++c) sub.col(c) = a.col(sel.indices[static_cast<std::size_t>(c)]);
        CHECK((sub * sel.coeffs - a).norm() <= 1e-8 * a.norm());
    }
}

TEST_CASE("exact refit solves the coefficients on the original matrix") {
    Rng rng{217};
    Eigen::MatrixXd a = tt::random_matrix(30, 10, rng);
    MethodChoice mc;
    mc.method = Method::NuclearMax;
    mc.rngSeed = 4;
    SelectionResult sketched = sketched_matrix_id(a, 3, mc, SketchConfig::gaussian(24));
    SelectionResult refit = sketched_matrix_id(a, 3, mc, SketchConfig::gaussian(24), true);
    REQUIRE(sketched.indices == refit.indices);
    CHECK((refit.coeffs - interpolation_coeffs(a, refit.indices)).norm() == 0.0);
    // the refit residual is optimal for the chosen columns
    Eigen::MatrixXd sub(30, 3);
    for (Index c = 0; c < 3; ++c) sub.col(c) = a.col(refit.indices[static_cast<std::size_t>(c)]);
    CHECK((sub * refit.coeffs - a).norm() <= (sub * sketched.coeffs - a).norm() + 1e-12);
}

TEST_CASE("sketched least-squares solution obeys the distortion bound") {
    Rng rng{216};
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::MatrixXd a = tt::random_matrix(12, 8, rng);
        const Index m = 128;  // well past the distortion-below-one regime for rank 8
        Eigen::MatrixXd s(m, 12);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < 12; ++j) s(i, j) = rng.normal() / std::sqrt(double(m));
        Eigen::MatrixXd b = s * a;
        MethodChoice mc;
        SelectionResult sel = select_columns(b, mc, 3, rng);
        const double delta = empirical_se_distortion(b, a);
        REQUIRE(delta < 1.0);

        Eigen::MatrixXd sub(12, static_cast<Index>(sel.indices.size()));
        for (std::size_t c = 0; c < sel.indices.size(); ++c)
            sub.col(static_cast<Index>(c)) = a.col(sel.indices[c]);
        const double sketchedResid = (sub * sel.coeffs - a).squaredNorm();
        const double optimal = (sub * interpolation_coeffs(a, sel.indices) - a).squaredNorm();
        CHECK(sketchedResid <= optimal / (1.0 - delta) + 1e-10 * a.squaredNorm());
    }
}

}  // TEST_SUITE
