#include "support.hpp"

#include "isoalign/sweeps.hpp"
#include "isoalign/synth.hpp"
#include "isoalign/theory.hpp"

#include <Eigen/QR>

using namespace test;
using namespace isoalign::theory;

namespace {

// Rank of {vec(xxᵀ)} in the full d² coordinates, independent of the packed
// symmetric features.
Eigen::Index outer_product_rank(const RowMatrix& x) {
    const Eigen::Index d = x.cols();
    Matrix a(x.rows(), d * d);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) a(i, r * d + c) = x(i, r) * x(i, c);
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    qr.setThreshold(1e-10);
    return qr.rank();
}

Matrix brute_pmi(const Matrix& p) {
    Matrix k(p.rows(), p.cols());
    for (Eigen::Index x = 0; x < p.rows(); ++x)
        for (Eigen::Index y = 0; y < p.cols(); ++y) {
            double px = 0.0, py = 0.0;
            for (Eigen::Index j = 0; j < p.cols(); ++j) px += p(x, j);
            for (Eigen::Index i = 0; i < p.rows(); ++i) py += p(i, y);
            k(x, y) = std::log(p(x, y) / (px * py));
        }
    return k;
}

Matrix brute_curate(const DiscreteJoint& j) {
    Matrix q(j.p.rows(), j.p.cols());
    double z = 0.0;
    for (Eigen::Index x = 0; x < q.rows(); ++x)
        for (Eigen::Index y = 0; y < q.cols(); ++y) {
            q(x, y) = (*j.u)(x) * (*j.v)(y) * j.p(x, y);
            z += q(x, y);
        }
    return q / z;
}

RowMatrix jitter_rows(const RowMatrix& m, double scale, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix out = m + scale * RowMatrix(linalg::gaussian(m.rows(), m.cols(), rng));
    out.rowwise().normalize();
    return out;
}

} // namespace

TEST_CASE("sym features preserve the Frobenius inner product") {
    RowMatrix x = random_unit_rows(2, 4, 1);
    RowMatrix f = sym_features(x);
    double direct = std::pow(x.row(0).dot(x.row(1)), 2); // ⟨aaᵀ, bbᵀ⟩_F
    CHECK(std::abs(f.row(0).dot(f.row(1)) - direct) <= 1e-14);
    Matrix back = sym_from_features(f.row(0).transpose(), 4);
    CHECK((back - x.row(0).transpose() * x.row(0)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("sym spanning examples") {
    const double s = 1.0 / std::sqrt(2.0);
    SpanningReport three = sym_spanning(rows({{1, 0}, {0, 1}, {s, s}}));
    CHECK(three.rank == 3);
    CHECK(three.required == 3);
    CHECK(three.spanning);
    CHECK(std::isfinite(three.kappa_lower));
    CHECK(three.kappa_lower >= 1.0);

    SpanningReport one = sym_spanning(rows({{1, 0}}));
    CHECK(one.rank == 1);
    CHECK_FALSE(one.spanning);
    CHECK(std::isinf(one.kappa_lower));

    RowMatrix six = random_unit_rows(6, 3, 2);
    SpanningReport r = sym_spanning(six);
    CHECK(r.rank == 6);
    CHECK(r.spanning);
    CHECK(static_cast<Eigen::Index>(r.rank) == outer_product_rank(six));

    CHECK(error_kind([] { sym_spanning(RowMatrix(0, 3)); }) == ErrorKind::invalid_argument);
}

TEST_CASE("sym spanning rank agrees with the outer-product oracle") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 4);
        Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % (d * (d + 1) / 2 + 2));
        RowMatrix x = random_unit_rows(n, d, seed + 100);
        if (rng() % 3 == 0) x.col(0).setZero(), x.rowwise().normalize(); // confined to a hyperplane
        CHECK(static_cast<Eigen::Index>(sym_spanning(x, seed, 50).rank) == outer_product_rank(x));
    }
}

TEST_CASE("spanning soundness: quadratic forms determine M") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Eigen::Index d = 4;
        RowMatrix x = random_unit_rows(12, d, seed + 7);
        if (!sym_spanning(x, seed, 50).spanning) continue;
        Rng rng(seed);
        Matrix m = linalg::gaussian(d, d, rng);
        m = 0.5 * (m + m.transpose()).eval();
        Vector t(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) t(i) = x.row(i) * m * x.row(i).transpose();
        Matrix a = sym_features(x);
        Vector sol = a.colPivHouseholderQr().solve(t);
        CHECK((sym_from_features(sol, d) - m).norm() <= 1e-6);
    }
}

TEST_CASE("kernel discrepancy") {
    auto sc = synth::make_planted({.d = 6, .seed = 3});
    CHECK(kernel_discrepancy(sc.f_a, sc.g_a, sc.f_b, sc.g_b) <= 1e-12);

    CHECK(std::abs(kernel_discrepancy(rows({{1, 0}}), rows({{0.3, 0.9539392014169456}}), rows({{1, 0}}),
                                      rows({{0.25, 0.9682458365518543}})) -
                   0.05) <= 1e-15);

    const double eta = 0.05;
    RowMatrix g_pert = sc.g_a.data;
    Rng rng(4);
    for (Eigen::Index i = 0; i < g_pert.rows(); ++i) {
        Vector dir = linalg::random_unit(6, rng);
        g_pert.row(i) += 0.5 * eta * dir.transpose();
        g_pert.row(i).normalize();
        REQUIRE((g_pert.row(i) - sc.g_a.data.row(i)).norm() <= eta);
    }
    CHECK(kernel_discrepancy(sc.f_a.data, sc.g_a.data, sc.f_a.data, g_pert) <= 2 * eta + 1e-12);

    CHECK(error_kind([&] { kernel_discrepancy(sc.f_a.data, sc.g_a.data, sc.f_a.data.topRows(3), sc.g_a.data); }) ==
          ErrorKind::dimension);
}

TEST_CASE("linear bound") {
    auto w = synth::make_exact_anchor_world(8, 8, 5);
    BoundReport exact = check_linear_bound(w.anchors, w.scenario.f_a.data, w.scenario.f_b.data);
    CHECK(exact.epsilon <= 1e-12);
    CHECK(exact.observed_max <= 1e-9);
    CHECK(exact.satisfied);

    // Kernel noise on the target images: 200 test points.
    auto sc = synth::make_planted({.d = 8, .n_img = 200, .seed = 6, .q_true = w.scenario.q_true});
    RowMatrix noisy = jitter_rows(sc.f_b.data, 0.004, 7);
    BoundReport noise = check_linear_bound(w.anchors, sc.f_a.data, noisy);
    CHECK(noise.epsilon > 0.0);
    CHECK(noise.epsilon <= 0.05);
    CHECK(noise.satisfied);

    // Near-singular G̃: two almost parallel columns.
    AnchorSet bad = w.anchors;
    Rng rng(8);
    Vector dir = linalg::random_unit(8, rng);
    bad.g_tilde.col(7) = (bad.g_tilde.col(6) + 1.5e-3 * dir).normalized();
    bad.g = w.scenario.q_true.transpose() * bad.g_tilde;
    BoundReport loose = check_linear_bound(bad, sc.f_a.data, noisy);
    CHECK(loose.sigma_min_gtilde < 2e-3);
    CHECK(loose.bound_value > 10 * noise.bound_value);
    CHECK(loose.satisfied);
}

TEST_CASE("text bound") {
    const Eigen::Index d = 5;
    Matrix q = synth::random_semi_orthogonal(d, d, 9);
    AlignmentMap map;
    map.q = q;
    map.fit_modality = FitModality::synthetic;
    Matrix f = Matrix::Identity(d, d);
    RowMatrix g = random_unit_rows(30, d, 10);
    RowMatrix g_t = g * q.transpose();

    BoundReport exact = check_text_bound(f, q * f, map, g, g_t);
    CHECK(exact.observed_max <= 1e-9);
    CHECK(exact.bound_value <= 1e-9);
    CHECK(exact.satisfied);

    RowMatrix g_noisy = jitter_rows(g_t, 0.004, 11);
    BoundReport measured = check_text_bound(f, q * f, map, g, g_noisy);
    REQUIRE(measured.epsilon_prime <= 0.02);
    BoundReport given = check_text_bound(f, q * f, map, g, g_noisy, 0.02, 0.0);
    CHECK(std::abs(given.bound_value - std::sqrt(5.0) * 0.02) <= 1e-15);
    CHECK(given.sigma_min_f == doctest::Approx(1.0));
    CHECK(given.satisfied);

    CHECK(error_kind([&] { check_text_bound(f.leftCols(3), q * f.leftCols(3), map, g, g_t); }) ==
          ErrorKind::ill_conditioned);
}

TEST_CASE("projection bound") {
    const Eigen::Index d = 6, r = 2;
    Matrix q = synth::random_semi_orthogonal(d, d, 12);
    AlignmentMap map;
    map.q = q;
    map.fit_modality = FitModality::synthetic;
    Matrix f = synth::random_semi_orthogonal(d, d, 14).leftCols(r); // orthonormal anchor columns

    // Targets keep the U-component and replace the complement by another of equal norm.
    RowMatrix g = random_unit_rows(20, d, 15);
    Matrix proj = f * f.transpose();
    RowMatrix g_t(g.rows(), d);
    Rng rng(16);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        Vector gi = g.row(i).transpose();
        Vector u = proj * gi, w = gi - u;
        Vector other = linalg::random_unit(d, rng);
        other -= proj * other;
        other = other.normalized() * w.norm();
        g_t.row(i) = (q * (u + other)).transpose();
    }
    BoundReport rep = subspace_projection_bound(f, q * f, map, g, g_t);
    CHECK(rep.observed_max <= 1e-9);
    CHECK(rep.satisfied);
    CHECK(rep.unprojected_max > 0.1);

    // Full subspace matches the text bound's pulled-back residual.
    Matrix full = synth::random_semi_orthogonal(d, d, 17);
    RowMatrix g_noisy = jitter_rows(g * q.transpose(), 0.01, 18);
    BoundReport whole = subspace_projection_bound(full, q * full, map, g, g_noisy);
    BoundReport text = check_text_bound(full, q * full, map, g, g_noisy);
    CHECK(std::abs(whole.observed_max - (g_noisy * q - g).rowwise().norm().maxCoeff()) <= 1e-12);
    CHECK(whole.observed_max <= text.observed_max + 1e-15);

    BoundReport given = subspace_projection_bound(f, q * f, map, g, g_t, 0.01, 0.01);
    CHECK(std::abs(given.rho - std::sqrt(2.0) * 0.02) <= 1e-12);
    CHECK(given.satisfied);
}

TEST_CASE("margin noise") {
    const Eigen::Index d = 6, k = 3;
    Matrix basis = Matrix::Identity(d, k);
    AlignmentMap map;
    map.q = synth::random_semi_orthogonal(d, d, 19);
    RowMatrix pa = basis.transpose();
    RowMatrix pb = pa * map.q.transpose();
    MarginReport clean = margin_noise(basis, map, pa, pb);
    CHECK(std::abs(clean.gamma - 1.0) <= 1e-12);
    CHECK(clean.eta <= 1e-15);
    CHECK(clean.guaranteed);
    CHECK(clean.retrieval_correct);

    auto w = synth::make_margin_world(8, 4, 3, 0.4, 0.1, 20);
    MarginReport good = margin_noise(w.basis, w.map, w.prototypes_a, w.prototypes_b);
    CHECK(std::abs(good.gamma - 0.4) <= 1e-6);
    CHECK(std::abs(good.eta - 0.1) <= 1e-6);
    CHECK(good.guaranteed);
    CHECK(good.retrieval_correct);

    auto adv = synth::make_margin_world(8, 4, 3, 0.1, 0.2, 21);
    MarginReport weak = margin_noise(adv.basis, adv.map, adv.prototypes_a, adv.prototypes_b);
    CHECK(std::abs(weak.gamma - 0.1) <= 1e-6);
    CHECK(std::abs(weak.eta - 0.2) <= 1e-6);
    CHECK_FALSE(weak.guaranteed);

    Matrix skew = basis;
    skew(0, 1) = 0.1;
    CHECK(error_kind([&] { margin_noise(skew, map, pa, pb); }) == ErrorKind::invalid_argument);
}

TEST_CASE("pmi examples") {
    DiscreteJoint j{Matrix(2, 2), {}, {}};
    j.p << 0.4, 0.1, 0.1, 0.4;
    KernelMatrix k = pmi_matrix(j, false);
    CHECK(std::abs(k.values(0, 0) - std::log(1.6)) <= 1e-15);
    CHECK(std::abs(k.values(0, 0) - 0.470004) <= 1e-6);
    CHECK(std::abs(k.values(0, 1) - std::log(0.4)) <= 1e-15);

    Vector px(3), py(4);
    px << 0.2, 0.3, 0.5;
    py << 0.1, 0.2, 0.3, 0.4;
    DiscreteJoint prod{px * py.transpose(), {}, {}};
    CHECK(pmi_matrix(prod, false).values.cwiseAbs().maxCoeff() <= 1e-15);

    DiscreteJoint ones = j;
    ones.u = Vector::Ones(2);
    ones.v = Vector::Ones(2);
    CHECK((pmi_matrix(ones, true).values - k.values).cwiseAbs().maxCoeff() <= 1e-15);

    DiscreteJoint neg = j;
    neg.p(0, 1) = 0.0;
    CHECK(error_kind([&] { pmi_matrix(neg, false); }) == ErrorKind::invalid_argument);
}

TEST_CASE("pmi and curation match brute-force loops") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        DiscreteJoint j = synth::make_generic_joint(3 + seed % 5, 2 + seed % 7, seed);
        CHECK((pmi_matrix(j, false).values - brute_pmi(j.p)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((pmi_matrix(j, true).values - brute_pmi(brute_curate(j))).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((curate(j).p - brute_curate(j)).cwiseAbs().maxCoeff() <= 1e-15);
        CHECK(curation_identity_residual(j) <= 1e-10);
        CHECK(pmi_normalization_residual(j) <= 1e-10);
    }
}

TEST_CASE("curation bias residual") {
    auto world = synth::make_curation_world(12, 12, 3, 3, 2, 22);
    for (const auto& cj : world.joints) {
        auto [dv, du] = curation_bias_residual(cj);
        CHECK(dv <= 1e-12);
        CHECK(du <= 1e-12);
    }

    DiscreteJoint g = synth::make_generic_joint(5, 6, 23);
    auto [dv, du] = curation_bias_residual(g);
    CHECK(dv > 0.0);
    CHECK(du > 0.0);
    g.v = Vector::Constant(6, 0.7);
    CHECK(curation_bias_residual(g).first <= 1e-15);

    DiscreteJoint bare{g.p, {}, {}};
    CHECK(error_kind([&] { curation_bias_residual(bare); }) == ErrorKind::invalid_argument);
}

TEST_CASE("constant shift") {
    KernelMatrix k1{random_unit_rows(4, 5, 24), "", ""};
    KernelMatrix k2 = k1;
    k2.values.array() += 0.7;
    ShiftReport s = check_constant_shift(k1, k2);
    CHECK(std::abs(s.delta - 0.7) <= 1e-15);
    CHECK(s.max_residual <= 1e-15);

    auto world = synth::make_curation_world(12, 12, 3, 3, 2, 25);
    KernelMatrix a = pmi_matrix(world.joints[0], true), b = pmi_matrix(world.joints[1], true);
    ShiftReport pair = check_constant_shift(a, b);
    CHECK(pair.max_residual <= 1e-10);
    CHECK(std::abs(pair.delta) <= 1e-12); // no cross-modal bias makes Z = E[u]E[v], so the shift vanishes
    CHECK(check_constant_shift(pmi_matrix(world.p_star, false), a).max_residual <= 1e-10);

    auto single = synth::make_curation_world(6, 4, 1, 1, 2, 26);
    CHECK(check_constant_shift(pmi_matrix(single.joints[0], true), pmi_matrix(single.joints[1], true)).max_residual <=
          1e-10);

    // Generic weights break the shift; the residual is only reported.
    DiscreteJoint g = synth::make_generic_joint(6, 6, 27);
    MESSAGE("generic curation residual: " << check_constant_shift(pmi_matrix(g, false), pmi_matrix(g, true)).max_residual);

    CHECK(error_kind([&] { check_constant_shift(k1, KernelMatrix{RowMatrix(2, 2), "", ""}); }) == ErrorKind::dimension);
}

TEST_CASE("sweeps are identical under serial and parallel execution") {
    for (const auto& name : sweep_names()) {
        SweepResult s = run_sweep(name, 24, 31, Execution::serial);
        SweepResult p = run_sweep(name, 24, 31, Execution::parallel);
        REQUIRE(s.instances.size() == p.instances.size());
        CHECK(s.violations == p.violations);
        for (std::size_t i = 0; i < s.instances.size(); ++i) {
            CHECK(s.instances[i].seed == p.instances[i].seed);
            CHECK(s.instances[i].observed_max == p.instances[i].observed_max);
            CHECK(s.instances[i].bound_value == p.instances[i].bound_value);
            CHECK(s.instances[i].satisfied == p.instances[i].satisfied);
        }
    }
}

TEST_CASE("bound sweeps hold and the negative control fails") {
    for (auto* sweep : {&linear_bound_sweep, &text_bound_sweep, &projection_bound_sweep, &margin_sweep,
                        &pmi_shift_sweep, &curation_identity_sweep}) {
        SweepResult r = (*sweep)(100, 32, Execution::parallel);
        CHECK_MESSAGE(r.violations == 0, r.name);
    }
    SweepResult neg = negative_control_sweep(50, 33, Execution::parallel);
    CHECK(neg.violations > 0);
}
