#include "support.hpp"

#include "isoalign/metrics.hpp"
#include "isoalign/synth.hpp"

using namespace test;

namespace {

// Exhaustive reference: cosine scan with explicit loops, first maximum wins.
std::vector<Label> oracle_nearest_labels(const RowMatrix& q, const RowMatrix& g, const std::vector<Label>& gl) {
    std::vector<Label> out;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        double best = -2.0;
        Eigen::Index arg = 0;
        for (Eigen::Index j = 0; j < g.rows(); ++j) {
            double dot = 0.0, nq = 0.0, ng = 0.0;
            for (Eigen::Index c = 0; c < q.cols(); ++c) {
                dot += q(i, c) * g(j, c);
                nq += q(i, c) * q(i, c);
                ng += g(j, c) * g(j, c);
            }
            double cosv = dot / (std::sqrt(nq) * std::sqrt(ng));
            if (cosv > best) {
                best = cosv;
                arg = j;
            }
        }
        out.push_back(gl[static_cast<std::size_t>(arg)]);
    }
    return out;
}

EmbeddingSet labeled_random(Eigen::Index n, Eigen::Index d, Label classes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Label> l(static_cast<std::size_t>(n));
    for (auto& x : l) x = static_cast<Label>(rng() % classes);
    return make_set(random_unit_rows(n, d, seed + 1), l);
}

} // namespace

TEST_CASE("paired cosine") {
    EmbeddingSet a = make_set(random_unit_rows(10, 2, 1));
    MetricsReport same = paired_cosine(a, a);
    CHECK(same.mean_cosine == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(same.std_cosine <= 1e-15);

    EmbeddingSet o1 = make_set(rows({{1, 0}, {0, 1}})), o2 = make_set(rows({{0, 1}, {-1, 0}}));
    CHECK(paired_cosine(o1, o2).mean_cosine == 0.0);

    EmbeddingSet rot = make_set(RowMatrix(a.data * rotation2(60).transpose()));
    CHECK(std::abs(paired_cosine(a, rot).mean_cosine - 0.5) <= 1e-12);
    CHECK(error_kind([&] { paired_cosine(a, o1); }) == ErrorKind::dimension);
}

TEST_CASE("paired l2") {
    EmbeddingSet a = make_set(random_unit_rows(10, 3, 2));
    CHECK(paired_l2(a, a).mean_l2 == 0.0);
    EmbeddingSet o1 = make_set(rows({{1, 0}})), o2 = make_set(rows({{0, 1}}));
    CHECK(std::abs(paired_l2(o1, o2).mean_l2 - std::sqrt(2.0)) <= 1e-15);
    Eigen::RowVector3d v(0.3, -0.4, 1.2);
    EmbeddingSet b = make_set(RowMatrix(a.data.rowwise() + v));
    CHECK(std::abs(paired_l2(a, b).mean_l2 - v.norm()) <= 1e-12);
}

TEST_CASE("class retrieval") {
    EmbeddingSet a = labeled_random(30, 4, 3, 3);
    CHECK(class_retrieval_top1(a, a).top1_accuracy == 1.0);

    EmbeddingSet gallery = make_set(rows({{1, 0}, {-1, 0}}), {0, 1});
    EmbeddingSet query = make_set(rows({{1, 0}}), {0});
    CHECK(class_retrieval_top1(query, gallery).predictions == std::vector<Label>{0});

    // Equal scores: the lowest gallery index wins.
    EmbeddingSet tie = make_set(rows({{0, 1}, {0, 1}}), {5, 2});
    CHECK(class_retrieval_top1(make_set(rows({{0, 1}}), {2}), tie).predictions == std::vector<Label>{5});

    CHECK(error_kind([&] { class_retrieval_top1(make_set(rows({{1, 0}})), gallery); }) == ErrorKind::structural);
}

TEST_CASE("class retrieval matches the exhaustive oracle on a noisy planted scenario") {
    synth::PlantedParams p;
    p.d = 8;
    p.classes = 5;
    p.n_img = 200;
    p.noise_sigma = 0.3;
    p.seed = 4;
    auto sc = synth::make_planted(p);
    MetricsReport r = class_retrieval_top1(sc.f_a, sc.f_b);
    auto expected = oracle_nearest_labels(sc.f_a.data, sc.f_b.data, *sc.f_b.labels);
    CHECK(r.predictions == expected);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) hits += expected[i] == (*sc.f_a.labels)[i];
    CHECK(r.top1_accuracy == static_cast<double>(hits) / 200.0);
}

TEST_CASE("exclude_self skips the query's own row") {
    EmbeddingSet a = make_set(rows({{1, 0}, {0.9, 0.1}, {0, 1}}), {0, 1, 1});
    auto r = class_retrieval_top1(a, a, true);
    CHECK(r.predictions == std::vector<Label>{1, 0, 1});
}

TEST_CASE("zero-shot") {
    RowMatrix imgs = random_unit_rows(4, 5, 5);
    EmbeddingSet images = make_set(imgs, {0, 1, 2, 3});
    ClassPrototypes protos{imgs, {0, 1, 2, 3}, "images"};
    CHECK(zero_shot(images, protos).top1_accuracy == 1.0);

    ClassPrototypes e{rows({{1, 0}, {0, 1}}), {0, 1}, "basis"};
    RowMatrix x = rows({{0.9, 0.1}});
    x.row(0).normalize();
    CHECK(zero_shot(make_set(x, {0}), e).top1_accuracy == 1.0);

    ClassPrototypes partial{rows({{1, 0}}), {0}, "p"};
    CHECK(error_kind([&] { zero_shot(make_set(x, {1}), partial); }) == ErrorKind::structural);
}

TEST_CASE("zero-shot decisions are invariant under the fitted exact map") {
    synth::PlantedParams p;
    p.d = 6;
    p.classes = 4;
    p.n_img = 80;
    p.seed = 6;
    auto sc = synth::make_planted(p);
    AlignmentMap q = fit_orthogonal(sc.f_a, sc.f_b, false);
    ClassPrototypes src = class_prototypes(sc.g_a), tgt = class_prototypes(sc.g_b);
    auto before = zero_shot(sc.f_a, src).predictions;
    auto after = zero_shot(apply(q, sc.f_a), tgt).predictions;
    CHECK(before == after);
}

TEST_CASE("argmax invariance under random orthogonal maps, query by query") {
    EmbeddingSet q = labeled_random(60, 5, 4, 7), g = labeled_random(50, 5, 4, 8);
    AlignmentMap m;
    m.q = synth::random_semi_orthogonal(5, 9, 9);
    CHECK(class_retrieval_top1(q, g).predictions == class_retrieval_top1(apply(m, q), apply(m, g)).predictions);
}

TEST_CASE("multimodal kernel") {
    EmbeddingSet e = make_set(rows({{1, 0}, {0, 1}}));
    CHECK(multimodal_kernel(e, e).values == RowMatrix::Identity(2, 2));
    EmbeddingSet a = make_set(random_unit_rows(20, 4, 10)), b = make_set(random_unit_rows(15, 4, 11));
    CHECK(multimodal_kernel(a, b).values.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);

    auto sc = synth::make_planted({.d = 6, .seed = 12});
    RowMatrix k1 = multimodal_kernel(sc.f_a, sc.g_a).values, k2 = multimodal_kernel(sc.f_b, sc.g_b).values;
    CHECK((k1 - k2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cka") {
    auto sc = synth::make_planted({.d = 6, .n_img = 60, .n_txt = 40, .seed = 13});
    KernelMatrix k1 = multimodal_kernel(sc.f_a, sc.g_a);
    CHECK(std::abs(cka(k1, k1) - 1.0) <= 1e-12);
    KernelMatrix shifted = k1;
    shifted.values.array() += 0.37;
    CHECK(std::abs(cka(k1, shifted) - 1.0) <= 1e-12);
    KernelMatrix scaled = k1;
    scaled.values = 2.5 * k1.values.array() - 0.1;
    CHECK(std::abs(cka(k1, scaled) - 1.0) <= 1e-12);

    // Null: a 200x200 multimodal kernel of 3-dimensional embeddings against
    // independent Gaussian noise.
    EmbeddingSet img = make_set(random_unit_rows(200, 3, 14)), txt = make_set(random_unit_rows(200, 3, 15));
    KernelMatrix structured = multimodal_kernel(img, txt);
    Rng rng(16);
    KernelMatrix noise{linalg::gaussian(200, 200, rng), "noise", "noise"};
    CHECK(cka(structured, noise) < 0.1);

    KernelMatrix flat{RowMatrix::Constant(5, 5, 0.2), "", ""};
    CHECK(error_kind([&] { cka(flat, k1); }) == ErrorKind::dimension);
    CHECK(error_kind([&] { cka(flat, flat); }) == ErrorKind::degenerate);
}

TEST_CASE("modality gap") {
    EmbeddingSet a = make_set(random_unit_rows(10, 3, 17));
    CHECK(modality_gap(a, a) == 0.0);
    EmbeddingSet e1 = make_set(rows({{1, 0}, {1, 0}})), e2 = make_set(rows({{0, 1}}));
    CHECK(std::abs(modality_gap(e1, e2) - std::sqrt(2.0)) <= 1e-15);

    auto sc = synth::make_planted({.d = 16, .d_tilde = 16, .n_img = 400, .n_txt = 400, .classes = 10, .gap_norm = 0.8, .seed = 18});
    CHECK(std::abs(modality_gap(sc.f_a, sc.g_a) - sc.achieved_gap) <= 0.1 * sc.achieved_gap);
}

TEST_CASE("two-path retrieval") {
    // Tight classes and k equal to the per-class gallery size: both routes
    // return exactly the query's class.
    synth::PlantedParams p;
    p.d = 8;
    p.classes = 4;
    p.n_img = 40;
    p.n_txt = 8;
    p.within_sigma = 0.02;
    p.seed = 19;
    auto sc = synth::make_planted(p);
    AlignmentMap q = fit_orthogonal(sc.f_a, sc.f_b, false);
    TwoPathReport r = two_path_retrieval(sc.f_a, sc.g_a, sc.f_b, sc.g_b, q, 10);
    CHECK(r.mean_overlap == 1.0);
    CHECK(r.class_match_fraction == 1.0);
    CHECK(r.direct_class_accuracy == 1.0);
    CHECK_FALSE(r.k_clamped);

    EmbeddingSet one = make_set(rows({{1, 0}}), {0});
    TwoPathReport single = two_path_retrieval(one, make_set(rows({{0, 1}})), one, make_set(rows({{0, 1}})),
                                              AlignmentMap::identity(2), 3);
    CHECK(single.mean_overlap == 1.0);
    CHECK(single.k == 1);
    CHECK(single.k_clamped);

    CHECK(error_kind([&] {
              two_path_retrieval(one, EmbeddingSet{RowMatrix(0, 2)}, one, one, AlignmentMap::identity(2), 1);
          }) == ErrorKind::invalid_argument);
}

TEST_CASE("two-path under unrelated maps is near chance") {
    synth::PlantedParams p;
    p.d = p.d_tilde = 16;
    p.classes = 5;
    p.n_img = 200;
    p.n_txt = 50;
    p.within_sigma = 0.05;
    p.seed = 20;
    auto sc = synth::make_planted(p);
    // Whole clusters move together, so one map scores in steps of 1/K; the
    // null is the average over many maps.
    double accuracy = 0.0, agreement = 0.0;
    const int maps = 60;
    for (int m = 0; m < maps; ++m) {
        AlignmentMap random;
        random.q = synth::random_semi_orthogonal(16, 16, 100 + static_cast<std::uint64_t>(m));
        TwoPathReport r = two_path_retrieval(sc.f_a, sc.g_a, sc.f_b, sc.g_b, random, 5);
        accuracy += r.direct_class_accuracy / maps;
        agreement += r.class_match_fraction / maps;
    }
    CHECK(std::abs(accuracy - 0.2) <= 0.08);
    // The two paths share the map, so they agree far above chance.
    MESSAGE("path agreement under random maps: " << agreement);
}
