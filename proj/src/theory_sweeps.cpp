#include "isoalign/sweeps.hpp"

#include "isoalign/error.hpp"
#include "isoalign/synth.hpp"

#include <functional>

namespace isoalign::theory {

namespace {

constexpr double kIdentityTolerance = 1e-10;

using Generator = std::function<InstanceResult(std::uint64_t)>;

SweepResult run(const std::string& name, std::size_t count, std::uint64_t seed, Execution exec, const Generator& gen) {
    SweepResult out;
    out.name = name;
    out.instances.resize(count);
    const auto n = static_cast<long long>(count);
    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) out.instances[i] = gen(linalg::mix_seed(seed, static_cast<std::uint64_t>(i)));
    } else {
        for (long long i = 0; i < n; ++i) out.instances[i] = gen(linalg::mix_seed(seed, static_cast<std::uint64_t>(i)));
    }
    for (const auto& r : out.instances) out.violations += !r.satisfied;
    return out;
}

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

RowMatrix jitter_rows(const RowMatrix& rows, double sigma, Rng& rng) {
    RowMatrix out = rows;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += sigma * normal(rng);
        out.row(i).normalize();
    }
    return out;
}

Matrix jitter_columns(const Matrix& cols, double sigma, Rng& rng) {
    RowMatrix t = cols.transpose();
    return jitter_rows(t, sigma, rng).transpose();
}

Matrix unit_columns(Eigen::Index d, Eigen::Index count, double min_sigma, Rng& rng) {
    for (;;) {
        Matrix m(d, count);
        for (Eigen::Index j = 0; j < count; ++j) m.col(j) = linalg::random_unit(d, rng);
        if (linalg::sigma_min(m) > min_sigma) return m;
    }
}

// Noisy two-model world: planted scenario plus a map fitted on noisy images.
struct NoisyWorld {
    synth::PlantedScenario sc;
    AlignmentMap map;
    Rng rng;
};

NoisyWorld noisy_world(std::uint64_t seed, bool square) {
    Rng rng(seed);
    synth::PlantedParams p;
    p.d = uniform_int(rng, 3, 8);
    p.d_tilde = square ? p.d : p.d + uniform_int(rng, 0, 4);
    p.n_img = 48;
    p.n_txt = 24;
    p.classes = 4;
    p.noise_sigma = uniform(rng, 0.0, 0.1);
    p.seed = rng();
    NoisyWorld w{synth::make_planted(p), {}, Rng(rng())};
    w.map = fit_orthogonal(w.sc.f_a, w.sc.f_b, false);
    return w;
}

InstanceResult from_bound(std::uint64_t seed, const BoundReport& r, double eps) {
    InstanceResult out;
    out.seed = seed;
    out.epsilon = eps;
    out.bound_value = r.bound_value;
    out.observed_max = r.observed_max;
    out.satisfied = r.satisfied;
    out.bound = r;
    return out;
}

InstanceResult linear_instance(std::uint64_t seed) {
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(uniform_int(rng, 3, 8));
    const auto dt = d + static_cast<Eigen::Index>(uniform_int(rng, 0, 4));
    synth::PlantedParams p;
    p.d = static_cast<std::size_t>(d);
    p.d_tilde = static_cast<std::size_t>(dt);
    p.n_img = 48;
    p.n_txt = 8;
    p.classes = 4;
    p.seed = rng();
    auto sc = synth::make_planted(p);
    const double sigma = uniform(rng, 0.0, 0.1), tau = uniform(rng, 0.0, 0.1);
    AnchorSet anchors;
    anchors.g = unit_columns(d, dt, 0.0, rng);
    for (;;) {
        anchors.g_tilde = jitter_columns(sc.q_true * anchors.g, tau, rng);
        // A rectangular Q·G is singular; fill the missing directions with noise.
        if (dt > d) anchors.g_tilde = jitter_columns(anchors.g_tilde, 0.3, rng);
        if (linalg::sigma_min(anchors.g_tilde) > 1e-3) break;
        anchors.g = unit_columns(d, dt, 0.0, rng);
    }
    anchors.f = Matrix(d, 0);
    RowMatrix target = jitter_rows(sc.f_b.data, sigma, rng);
    BoundReport r = check_linear_bound(anchors, sc.f_a.data, target);
    return from_bound(seed, r, r.epsilon);
}

InstanceResult text_instance(std::uint64_t seed) {
    NoisyWorld w = noisy_world(seed, false);
    const auto d = static_cast<Eigen::Index>(w.sc.params.d);
    const double tau = uniform(w.rng, 0.0, 0.1);
    Matrix f = unit_columns(d, d, 1e-2, w.rng);
    Matrix f_t = jitter_columns(w.sc.q_true * f, tau, w.rng);
    BoundReport r = check_text_bound(f, f_t, w.map, w.sc.g_a.data, w.sc.g_b.data);
    return from_bound(seed, r, r.epsilon_prime);
}

InstanceResult understated_instance(std::uint64_t seed) {
    NoisyWorld w = noisy_world(seed, false);
    const auto d = static_cast<Eigen::Index>(w.sc.params.d);
    const double tau = uniform(w.rng, 0.0, 0.1);
    Matrix f = unit_columns(d, d, 1e-2, w.rng);
    Matrix f_t = jitter_columns(w.sc.q_true * f, tau, w.rng);
    BoundReport r = check_text_bound(f, f_t, w.map, w.sc.g_a.data, w.sc.g_b.data, 0.0, 0.0);
    return from_bound(seed, r, 0.0);
}

InstanceResult projection_instance(std::uint64_t seed) {
    NoisyWorld w = noisy_world(seed, false);
    const auto d = static_cast<Eigen::Index>(w.sc.params.d);
    const auto r_dim = static_cast<Eigen::Index>(uniform_int(w.rng, 1, static_cast<std::size_t>(d - 1)));
    const double tau = uniform(w.rng, 0.0, 0.1);
    Matrix f = unit_columns(d, r_dim, 1e-2, w.rng);
    Matrix f_t = jitter_columns(w.sc.q_true * f, tau, w.rng);
    BoundReport r = subspace_projection_bound(f, f_t, w.map, w.sc.g_a.data, w.sc.g_b.data);
    return from_bound(seed, r, r.epsilon);
}

InstanceResult margin_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t r = uniform_int(rng, 2, 5);
    const std::size_t d = r + uniform_int(rng, 3, 6);
    const std::size_t k = uniform_int(rng, 1, r);
    const double gamma = uniform(rng, 0.0, 0.6);
    const double eta = uniform(rng, 0.0, std::min(1.0 - gamma, 0.4));
    auto mw = synth::make_margin_world(d, r, k, gamma, eta, rng());
    MarginReport m = margin_noise(mw.basis, mw.map, mw.prototypes_a, mw.prototypes_b);
    InstanceResult out;
    out.seed = seed;
    out.epsilon = m.eta;
    out.gamma = m.gamma;
    out.bound_value = 2.0 * m.eta;
    out.observed_max = m.gamma;
    out.guaranteed = m.guaranteed;
    out.retrieval_correct = m.retrieval_correct;
    out.satisfied = !m.guaranteed || m.retrieval_correct;
    return out;
}

InstanceResult pmi_instance(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t bx = uniform_int(rng, 1, 4), by = uniform_int(rng, 1, 4);
    const std::size_t nx = bx * uniform_int(rng, 1, 5), ny = by * uniform_int(rng, 1, 5);
    auto cs = synth::make_curation_world(nx, ny, bx, by, 3, rng());
    KernelMatrix base = pmi_matrix(cs.p_star, false);
    double worst = 0.0;
    for (const auto& j : cs.joints) worst = std::max(worst, check_constant_shift(pmi_matrix(j, true), base).max_residual);
    InstanceResult out;
    out.seed = seed;
    out.bound_value = kIdentityTolerance;
    out.observed_max = worst;
    out.satisfied = worst <= kIdentityTolerance;
    return out;
}

InstanceResult curation_identity_instance(std::uint64_t seed) {
    Rng rng(seed);
    auto joint = synth::make_generic_joint(uniform_int(rng, 2, 12), uniform_int(rng, 2, 12), rng());
    InstanceResult out;
    out.seed = seed;
    out.bound_value = kIdentityTolerance;
    out.observed_max = curation_identity_residual(joint);
    out.satisfied = out.observed_max <= kIdentityTolerance;
    return out;
}

} // namespace

SweepResult linear_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("linear_bound", count, seed, exec, linear_instance);
}

SweepResult text_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("text_bound", count, seed, exec, text_instance);
}

SweepResult projection_bound_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("projection_bound", count, seed, exec, projection_instance);
}

SweepResult margin_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("margin", count, seed, exec, margin_instance);
}

SweepResult pmi_shift_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("pmi_shift", count, seed, exec, pmi_instance);
}

SweepResult curation_identity_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("curation_identity", count, seed, exec, curation_identity_instance);
}

SweepResult negative_control_sweep(std::size_t count, std::uint64_t seed, Execution exec) {
    return run("text_bound_understated", count, seed, exec, understated_instance);
}

const std::vector<std::string>& sweep_names() {
    static const std::vector<std::string> names{"linear_bound", "text_bound", "projection_bound",
                                                "margin",       "pmi_shift",  "curation_identity"};
    return names;
}

SweepResult run_sweep(const std::string& name, std::size_t count, std::uint64_t seed, Execution exec) {
    if (name == "linear_bound") return linear_bound_sweep(count, seed, exec);
    if (name == "text_bound") return text_bound_sweep(count, seed, exec);
    if (name == "projection_bound") return projection_bound_sweep(count, seed, exec);
    if (name == "margin") return margin_sweep(count, seed, exec);
    if (name == "pmi_shift") return pmi_shift_sweep(count, seed, exec);
    if (name == "curation_identity") return curation_identity_sweep(count, seed, exec);
    throw Error(ErrorKind::invalid_argument, "unknown sweep '" + name + "'");
}

} // namespace isoalign::theory
