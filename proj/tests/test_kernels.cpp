#include "support.hpp"

#include "isoalign/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>

using namespace test;
namespace k = isoalign::kernels;

TEST_CASE("parallel kernels are bitwise equal to the serial reference") {
    RowMatrix q = random_unit_rows(301, 17, 1), g = random_unit_rows(257, 17, 2);
    Rng rng(3);
    Matrix map = linalg::gaussian(23, 17, rng);
    Vector mu_s = linalg::gaussian(17, 1, rng), mu_t = linalg::gaussian(23, 1, rng);
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 4, 7}) {
        omp_set_num_threads(threads);
        CAPTURE(threads);
        CHECK(k::parallel::affine_rows(q, map, mu_s, mu_t) == k::serial::affine_rows(q, map, mu_s, mu_t));
        CHECK(k::parallel::nearest(q, g) == k::serial::nearest(q, g));
        CHECK(k::parallel::nearest(q, q, true) == k::serial::nearest(q, q, true));
        CHECK(k::parallel::top_k(q, g, 9) == k::serial::top_k(q, g, 9));
        CHECK(k::parallel::row_dots(q, q) == k::serial::row_dots(q, q));
        CHECK(k::parallel::cross_gram(q, g) == k::serial::cross_gram(q, g));
    }
    omp_set_num_threads(saved);
}

TEST_CASE("affine rows against the direct formula") {
    RowMatrix z = random_unit_rows(5, 3, 4);
    Matrix map(2, 3);
    map << 1, 2, 3, -1, 0, 0.5;
    Vector mu_s(3), mu_t(2);
    mu_s << 0.1, 0.2, 0.3;
    mu_t << -1, 1;
    RowMatrix out = k::serial::affine_rows(z, map, mu_s, mu_t);
    for (Eigen::Index i = 0; i < 5; ++i) {
        Vector expect = map * (z.row(i).transpose() - mu_s) + mu_t;
        CHECK((out.row(i).transpose() - expect).norm() <= 1e-14);
    }
}

TEST_CASE("ties resolve to the lowest index") {
    RowMatrix g = rows({{0, 1}, {1, 0}, {1, 0}, {0, 1}});
    RowMatrix q = rows({{1, 0}, {0, 1}, {1, 1}});
    for (auto nearest : {&k::serial::nearest, &k::parallel::nearest}) {
        CHECK(nearest(q, g, false) == std::vector<k::Index>{1, 0, 0});
    }
    CHECK(k::serial::top_k(q, g, 3)[0] == std::vector<k::Index>{1, 2, 0});
    CHECK(k::parallel::top_k(q, g, 4)[2] == std::vector<k::Index>{0, 1, 2, 3});
    CHECK(k::serial::nearest(g, g, true) == std::vector<k::Index>{3, 2, 1, 0});
}

TEST_CASE("top_k is the sorted prefix of an exhaustive ranking") {
    RowMatrix q = random_unit_rows(20, 6, 5), g = random_unit_rows(40, 6, 6);
    auto got = k::parallel::top_k(q, g, 7);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        std::vector<std::pair<double, k::Index>> all;
        for (Eigen::Index j = 0; j < g.rows(); ++j) all.emplace_back(-q.row(i).dot(g.row(j)), static_cast<k::Index>(j));
        std::sort(all.begin(), all.end());
        std::vector<k::Index> expect;
        for (int t = 0; t < 7; ++t) expect.push_back(all[static_cast<std::size_t>(t)].second);
        CHECK(got[static_cast<std::size_t>(i)] == expect);
    }
}

TEST_CASE("ALIGN_NUM_THREADS caps the thread count") {
    const int saved = omp_get_max_threads();
    setenv("ALIGN_NUM_THREADS", "3", 1);
    k::configure_threads_from_env();
    CHECK(k::max_threads() == 3);
    setenv("ALIGN_NUM_THREADS", "junk", 1);
    k::configure_threads_from_env();
    CHECK(k::max_threads() == 3);
    unsetenv("ALIGN_NUM_THREADS");
    omp_set_num_threads(saved);
}
