#include <doctest.h>

#include "test_helpers.hpp"
#include "tid/tensor.hpp"

using namespace tid;

namespace {

/// Explicit Khatri-Rao product (columnwise Kronecker), first factor slowest.
Eigen::MatrixXd khatri_rao_full(const std::vector<const Eigen::MatrixXd*>& factors) {
    Eigen::MatrixXd kr = *factors[0];
    for (std::size_t j = 1; j < factors.size(); ++j) {
        const Eigen::MatrixXd& h = *factors[j];
        Eigen::MatrixXd next(kr.rows() * h.rows(), kr.cols());
        for (Index a = 0; a < kr.rows(); ++a)
            for (Index b = 0; b < h.rows(); ++b)
                next.row(a * h.rows() + b) = kr.row(a).cwiseProduct(h.row(b));
        kr = std::move(next);
    }
    return kr;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("flatten identity on a matrix") {
    DenseTensor t({2, 2}, Eigen::Vector4d(1, 2, 3, 4));
    Eigen::MatrixXd m = flatten(t, {0});
    CHECK(m.rows() == 2);
    CHECK(m(0, 0) == 1);
    CHECK(m(0, 1) == 2);
    CHECK(m(1, 0) == 3);
    CHECK(m(1, 1) == 4);
}

TEST_CASE("flatten 2x2x2 by the last mode, enumerated by hand") {
    Eigen::VectorXd v(8);
    for (Index i = 0; i < 8; ++i) v[i] = static_cast<double>(i);
    DenseTensor t({2, 2, 2}, v);
    Eigen::MatrixXd m = flatten(t, {2});
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 4);
    // row j collects entries with last index j; columns ordered by (i0,i1)
    CHECK(m.row(0) == Eigen::RowVector4d(0, 2, 4, 6));
    CHECK(m.row(1) == Eigen::RowVector4d(1, 3, 5, 7));
}

TEST_CASE("flatten preserves Frobenius norm for every partition") {
    Rng rng{42};
    DenseTensor t = tt::random_dense({3, 4, 5}, rng);
    const double norm = t.frob_norm();
    for (const auto& rows : std::vector<std::vector<Index>>{
             {0}, {1}, {2}, {0, 1}, {1, 2}, {0, 2}, {2, 0}, {1, 0, 2}}) {
        Eigen::MatrixXd m = flatten(t, rows);
        CHECK(m.norm() == doctest::Approx(norm).epsilon(1e-13));
    }
    Eigen::MatrixXd m = flatten(t, {0, 1});
    CHECK(m.rows() == 12);
    CHECK(m.cols() == 5);
}

TEST_CASE("flatten then unflatten is the identity") {
    Rng rng{7};
    DenseTensor t = tt::random_dense({2, 3, 4}, rng);
    for (const auto& rows : std::vector<std::vector<Index>>{{1}, {2, 0}, {0, 1, 2}}) {
        DenseTensor back = unflatten(flatten(t, rows), t.shape, rows);
        CHECK((back.values - t.values).norm() == 0.0);
    }
}

TEST_CASE("flatten rejects bad modes") {
    DenseTensor t = DenseTensor::zeros({2, 2});
    CHECK_THROWS_AS((void)flatten(t, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS((void)flatten(t, {2}), std::invalid_argument);
    CHECK_THROWS_AS((void)flatten(t, {}), std::invalid_argument);
}

TEST_CASE("mode_contract identity leaves the tensor unchanged") {
    Rng rng{3};
    DenseTensor t = tt::random_dense({2, 3, 2}, rng);
    DenseTensor out = mode_contract(t, 1, Eigen::MatrixXd::Identity(3, 3));
    CHECK((out.values - t.values).norm() == 0.0);
}

TEST_CASE("mode_contract with a summing row vector") {
    DenseTensor t({2, 2}, Eigen::Vector4d::Ones());
    Eigen::MatrixXd m(1, 2);
    m << 1, 1;
    DenseTensor out = mode_contract(t, 0, m);
    CHECK(out.shape == Shape{1, 2});
    CHECK(out.values.isApproxToConstant(2.0));
}

TEST_CASE("mode_contract matches the flatten-multiply-unflatten oracle") {
    Rng rng{11};
    DenseTensor t = tt::random_dense({3, 3, 3}, rng);
    Eigen::MatrixXd m = tt::random_matrix(2, 3, rng);
    DenseTensor out = mode_contract(t, 1, m);

    Eigen::MatrixXd flat = flatten(t, {1});       // n_1 x rest
    Eigen::MatrixXd contracted = m * flat;        // k x rest
    DenseTensor expect = unflatten(contracted, {3, 2, 3}, {1});
    CHECK((out.values - expect.values).norm() < 1e-12);

    CHECK_THROWS_AS((void)mode_contract(t, 0, Eigen::MatrixXd::Zero(2, 4)), std::invalid_argument);
}

TEST_CASE("tucker_reconstruct with identity satellites returns the core") {
    Rng rng{5};
    DenseTensor core = tt::random_dense({2, 3, 2}, rng);
    TuckerApprox a{core,
                   {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3),
                    Eigen::MatrixXd::Identity(2, 2)}};
    CHECK((tucker_reconstruct(a).values - core.values).norm() == 0.0);
}

TEST_CASE("tucker_reconstruct of a unit core is the outer product") {
    Rng rng{6};
    Eigen::MatrixXd u1 = tt::random_matrix(3, 1, rng);
    Eigen::MatrixXd u2 = tt::random_matrix(4, 1, rng);
    DenseTensor core({1, 1}, Eigen::VectorXd::Ones(1));
    TuckerApprox a{core, {u1, u2}};
    DenseTensor out = tucker_reconstruct(a);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 4; ++j)
            CHECK(out.at({i, j}) == doctest::Approx(u1(i, 0) * u2(j, 0)));
}

TEST_CASE("tucker_reconstruct matches direct summation") {
    Rng rng{8};
    DenseTensor core = tt::random_dense({2, 2, 2}, rng);
    std::vector<Eigen::MatrixXd> sats = {tt::random_matrix(3, 2, rng), tt::random_matrix(4, 2, rng),
                                         tt::random_matrix(2, 2, rng)};
    DenseTensor out = tucker_reconstruct(TuckerApprox{core, sats});
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 4; ++j)
            for (Index l = 0; l < 2; ++l) {
                double acc = 0.0;
                for (Index a = 0; a < 2; ++a)
                    for (Index b = 0; b < 2; ++b)
                        for (Index c = 0; c < 2; ++c)
                            acc += core.at({a, b, c}) * sats[0](i, a) * sats[1](j, b) * sats[2](l, c);
                CHECK(out.at({i, j, l}) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("tucker_reconstruct enforces the size cap") {
    DenseTensor core = DenseTensor::zeros({2, 2});
    TuckerApprox a{core, {Eigen::MatrixXd::Zero(100, 2), Eigen::MatrixXd::Zero(100, 2)}};
    CHECK_THROWS_AS((void)tucker_reconstruct(a, 999), ResourceLimitError);
}

TEST_CASE("tucker_reconstruct with orthonormal satellites preserves core norm") {
    Rng rng{17};
    DenseTensor core = tt::random_dense({3, 3, 3}, rng);
    std::vector<Eigen::MatrixXd> sats;
    for (int i = 0; i < 3; ++i) {
        Eigen::MatrixXd g = tt::random_matrix(7, 3, rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        sats.push_back(Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(7, 3)));
    }
    DenseTensor full = tucker_reconstruct(TuckerApprox{core, sats});
    CHECK(full.frob_norm() == doctest::Approx(core.frob_norm()).epsilon(1e-12));
}

TEST_CASE("cp_materialize places a single one at the origin") {
    Eigen::MatrixXd e1 = Eigen::MatrixXd::Zero(3, 1);
    e1(0, 0) = 1.0;
    CpTensor t({e1, e1, e1});
    DenseTensor out = cp_materialize(t);
    CHECK(out.values[0] == 1.0);
    CHECK(out.values.tail(26).norm() == 0.0);
}

TEST_CASE("cp_materialize of a matrix equals H1 diag(w) H2^T") {
    Rng rng{9};
    CpTensor t = tt::random_cp({4, 5}, 3, rng, true);
    DenseTensor out = cp_materialize(t);
    Eigen::MatrixXd expect = t.factors[0] * t.weights.asDiagonal() * t.factors[1].transpose();
    CHECK((flatten(out, {0}) - expect).norm() < 1e-12 * expect.norm());
}

TEST_CASE("cp_materialize matches the direct summation oracle") {
    Rng rng{10};
    CpTensor t = tt::random_cp({3, 2, 4}, 4, rng, true);
    DenseTensor out = cp_materialize(t);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 2; ++j)
            for (Index l = 0; l < 4; ++l) {
                double acc = 0.0;
                for (Index k = 0; k < 4; ++k)
                    acc += t.weights[k] * t.factors[0](i, k) * t.factors[1](j, k) * t.factors[2](l, k);
                CHECK(out.at({i, j, l}) == doctest::Approx(acc).epsilon(1e-12));
            }
}

TEST_CASE("cp_flatten_gram matrix case") {
    Rng rng{12};
    CpTensor t = tt::random_cp({4, 6}, 3, rng);
    Eigen::MatrixXd g = cp_flatten_gram(t, 0);
    Eigen::MatrixXd expect =
        t.factors[0] * (t.factors[1].transpose() * t.factors[1]) * t.factors[0].transpose();
    CHECK((g - expect).norm() < 1e-12 * expect.norm());
}

TEST_CASE("cp_flatten_gram equals the Gram of the materialized flattening") {
    Rng rng{13};
    for (int trial = 0; trial < 5; ++trial) {
        Shape dims{(trial % 3) + 3, 4, 5};
        Index p = (trial % 4) + 3;
        CpTensor t = tt::random_cp(dims, p, rng, trial % 2 == 1);
        DenseTensor full = cp_materialize(t);
        for (Index mode = 0; mode < 3; ++mode) {
            std::vector<Index> rows;
            for (Index j = 0; j < 3; ++j)
                if (j != mode) rows.push_back(j);
            Eigen::MatrixXd a = flatten(full, rows);  // columns indexed by mode
            Eigen::MatrixXd oracle = a.transpose() * a;
            Eigen::MatrixXd g = cp_flatten_gram(t, mode);
            CHECK((g - oracle).norm() <= 1e-10 * oracle.norm());
        }
    }
}

TEST_CASE("cp_flatten_gram with zero weights is zero") {
    Rng rng{14};
    CpTensor t = tt::random_cp({3, 3}, 2, rng);
    t.weights.setZero();
    CHECK(cp_flatten_gram(t, 0).norm() == 0.0);
}

TEST_CASE("sparse_slice empty and diagonal cases") {
    SparseTensorCoo diag = SparseTensorCoo::from_entries(
        {3, 3, 3}, {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}}, {1.0, 2.0, 3.0});
    SparseTensorCoo s = sparse_slice(diag, 0, 1);
    CHECK(s.shape == Shape{3, 3});
    REQUIRE(s.nnz() == 1);
    CHECK(s.coord(0, 0) == 1);
    CHECK(s.coord(0, 1) == 1);
    CHECK(s.values[0] == 2.0);

    SparseTensorCoo empty = SparseTensorCoo::from_entries({3, 3, 3}, {{0, 1, 2}}, {5.0});
    SparseTensorCoo none = sparse_slice(empty, 1, 0);
    CHECK(none.shape == Shape{3, 3});
    CHECK(none.nnz() == 0);

    CHECK_THROWS_AS((void)sparse_slice(diag, 0, 5), std::invalid_argument);
}

TEST_CASE("sparse_slice matches the dense oracle") {
    Rng rng{15};
    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    for (int e = 0; e < 30; ++e) {
        coords.push_back({static_cast<Index>(rng.below(4)), static_cast<Index>(rng.below(3)),
                          static_cast<Index>(rng.below(5))});
        vals.push_back(rng.normal());
    }
    SparseTensorCoo t = SparseTensorCoo::from_entries({4, 3, 5}, coords, vals);
    DenseTensor dense = sparse_to_dense(t);
    for (Index idx = 0; idx < 3; ++idx) {
        DenseTensor sliced = sparse_to_dense(sparse_slice(t, 1, idx));
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 5; ++j)
                CHECK(sliced.at({i, j}) == dense.at({i, idx, j}));
    }
}

TEST_CASE("sparse_slice over all indices reconstructs the nonzero multiset") {
    Rng rng{16};
    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    for (int e = 0; e < 25; ++e) {
        coords.push_back({static_cast<Index>(rng.below(3)), static_cast<Index>(rng.below(4)),
                          static_cast<Index>(rng.below(3))});
        vals.push_back(rng.normal());
    }
    SparseTensorCoo t = SparseTensorCoo::from_entries({3, 4, 3}, coords, vals);
    Index total = 0;
    double sum = 0.0;
    for (Index idx = 0; idx < 4; ++idx) {
        SparseTensorCoo s = sparse_slice(t, 1, idx);
        total += s.nnz();
        sum += s.values.sum();
    }
    CHECK(total == t.nnz());
    CHECK(sum == doctest::Approx(t.values.sum()).epsilon(1e-12));
}

TEST_CASE("khatri_rao_row basics") {
    Rng rng{18};
    Eigen::MatrixXd a = tt::random_matrix(4, 3, rng);
    CHECK((khatri_rao_row({&a}, {2}) - a.row(2).transpose()).norm() == 0.0);

    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 5);
    CHECK(khatri_rao_row({&ones, &ones}, {1, 2}).isApproxToConstant(1.0));
}

TEST_CASE("khatri_rao_row matches the explicit Khatri-Rao product") {
    Rng rng{19};
    Eigen::MatrixXd a = tt::random_matrix(3, 4, rng);
    Eigen::MatrixXd b = tt::random_matrix(2, 4, rng);
    Eigen::MatrixXd c = tt::random_matrix(5, 4, rng);
    Eigen::MatrixXd kr = khatri_rao_full({&a, &b, &c});
    MultiIndex idx{2, 1, 3};
    Index lin = (idx[0] * 2 + idx[1]) * 5 + idx[2];
    CHECK((khatri_rao_row({&a, &b, &c}, idx) - kr.row(lin).transpose()).norm() < 1e-14);
}

TEST_CASE("from_entries sorts, merges duplicates, and drops zeros") {
    SparseTensorCoo t = SparseTensorCoo::from_entries(
        {2, 2}, {{1, 1}, {0, 0}, {1, 1}, {0, 1}}, {2.0, 1.0, 3.0, 0.0});
    REQUIRE(t.nnz() == 2);
    CHECK(t.coord(0, 0) == 0);
    CHECK(t.values[0] == 1.0);
    CHECK(t.coord(1, 0) == 1);
    CHECK(t.values[1] == 5.0);
    CHECK_THROWS_AS((void)SparseTensorCoo::from_entries({2, 2}, {{2, 0}}, {1.0}),
                    std::invalid_argument);
}

TEST_CASE("sparse_ttm matches dense contraction") {
    Rng rng{20};
    std::vector<MultiIndex> coords;
    std::vector<double> vals;
    for (int e = 0; e < 20; ++e) {
        coords.push_back({static_cast<Index>(rng.below(4)), static_cast<Index>(rng.below(5)),
                          static_cast<Index>(rng.below(3))});
        vals.push_back(rng.normal());
    }
    SparseTensorCoo t = SparseTensorCoo::from_entries({4, 5, 3}, coords, vals);
    Eigen::MatrixXd m = tt::random_matrix(2, 5, rng);
    DenseTensor viaSparse = sparse_ttm(t, 1, m);
    DenseTensor viaDense = mode_contract(sparse_to_dense(t), 1, m);
    CHECK((viaSparse.values - viaDense.values).norm() < 1e-12);
}

}  // TEST_SUITE
