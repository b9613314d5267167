#include "isoalign/synth.hpp"

#include "isoalign/error.hpp"

#include <cmath>
#include <numbers>

namespace isoalign::synth {

namespace {

Vector unit_or_throw(const Vector& v) {
    double n = v.norm();
    if (!(n > 1e-12)) throw Error(ErrorKind::degenerate, "generator produced a zero vector");
    return v / n;
}

// Random unit vector orthogonal to the columns of `avoid` (orthonormal).
Vector random_unit_orthogonal(const Matrix& avoid, Eigen::Index dim, Rng& rng) {
    for (;;) {
        Vector v = linalg::gaussian(dim, 1, rng);
        if (avoid.cols()) v -= avoid * (avoid.transpose() * v);
        double n = v.norm();
        if (n > 1e-8) return v / n;
    }
}

RowMatrix sample_rows(const std::vector<Vector>& dirs, std::size_t n, double within, Rng& rng,
                      std::vector<Label>& labels) {
    const Eigen::Index d = dirs.front().size();
    RowMatrix out(static_cast<Eigen::Index>(n), d);
    labels.resize(n);
    std::normal_distribution<double> normal(0.0, within);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % dirs.size();
        labels[i] = static_cast<Label>(c);
        for (;;) {
            Vector x = dirs[c];
            if (within > 0.0)
                for (Eigen::Index j = 0; j < d; ++j) x[j] += normal(rng);
            double nrm = x.norm();
            if (nrm > 1e-12) {
                out.row(static_cast<Eigen::Index>(i)) = (x / nrm).transpose();
                break;
            }
        }
    }
    return out;
}

RowMatrix push_forward(const Matrix& q, const RowMatrix& rows, double sigma, Rng& rng) {
    RowMatrix out(rows.rows(), q.rows());
    std::normal_distribution<double> normal(0.0, sigma > 0.0 ? sigma : 1.0);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        for (;;) {
            Vector y = q * rows.row(i).transpose();
            if (sigma > 0.0)
                for (Eigen::Index j = 0; j < y.size(); ++j) y[j] += normal(rng);
            double nrm = y.norm();
            if (nrm > 1e-12) {
                out.row(i) = (y / nrm).transpose();
                break;
            }
        }
    }
    return out;
}

EmbeddingSet make_set(RowMatrix rows, std::vector<Label> labels, std::size_t classes, const std::string& model,
                      Modality modality) {
    EmbeddingSet s;
    s.data = std::move(rows);
    s.labels = std::move(labels);
    std::map<Label, std::string> names;
    for (std::size_t c = 0; c < classes; ++c) names[static_cast<Label>(c)] = "class_" + std::to_string(c);
    s.class_names = std::move(names);
    s.model_id = model;
    s.modality = modality;
    s.dataset_id = "synthetic";
    s.normalized = true;
    return s;
}

} // namespace

Matrix random_semi_orthogonal(std::size_t d, std::size_t d_tilde, std::uint64_t seed) {
    if (d == 0 || d > d_tilde) throw Error(ErrorKind::dimension, "random_semi_orthogonal needs 0 < d <= d_tilde");
    Rng rng(seed);
    return linalg::orthonormal_columns(
        linalg::gaussian(static_cast<Eigen::Index>(d_tilde), static_cast<Eigen::Index>(d), rng));
}

PlantedScenario make_planted(const PlantedParams& params) {
    const auto& p = params;
    if (p.d < 2 || p.d > p.d_tilde) throw Error(ErrorKind::dimension, "make_planted needs 2 <= d <= d_tilde");
    if (p.classes == 0 || p.classes > p.n_img || p.classes > p.n_txt) {
        throw Error(ErrorKind::invalid_argument, "make_planted needs 1 <= K <= n_img, n_txt");
    }
    if (!(p.noise_sigma >= 0.0) || !(p.within_sigma >= 0.0) || !(p.gap_norm >= 0.0 && p.gap_norm <= 2.0) ||
        !(p.cap_angle_deg >= 0.0 && p.cap_angle_deg <= 180.0)) {
        throw Error(ErrorKind::invalid_argument, "make_planted: parameter out of range");
    }
    PlantedScenario sc;
    sc.params = p;
    if (p.q_true) {
        if (static_cast<std::size_t>(p.q_true->rows()) != p.d_tilde || static_cast<std::size_t>(p.q_true->cols()) != p.d)
            throw Error(ErrorKind::dimension, "make_planted: q_true has the wrong shape");
        if (linalg::orthogonality_defect(*p.q_true) > 1e-10)
            throw Error(ErrorKind::invalid_argument, "make_planted: q_true is not semi-orthogonal");
        sc.q_true = *p.q_true;
    } else {
        sc.q_true = random_semi_orthogonal(p.d, p.d_tilde, linalg::mix_seed(p.seed, 0));
    }

    Rng rng(linalg::mix_seed(p.seed, 1));
    const auto d = static_cast<Eigen::Index>(p.d);
    Vector m = linalg::random_unit(d, rng);
    Matrix frame(d, 1);
    frame.col(0) = m;
    Vector e = random_unit_orthogonal(frame, d, rng);
    frame.conservativeResize(d, 2);
    frame.col(1) = e;

    const double sin_phi = p.gap_norm / 2.0;
    const double cos_phi = std::sqrt(std::max(0.0, 1.0 - sin_phi * sin_phi));
    Vector c_img = cos_phi * m + sin_phi * e;
    Vector c_txt = cos_phi * m - sin_phi * e;

    const double cap = p.cap_angle_deg * std::numbers::pi / 180.0;
    std::uniform_real_distribution<double> half_to_one(0.5, 1.0);
    // In d = 2 there is no room beside the gap plane, so class directions
    // tilt along ±e instead.
    const Matrix avoid = p.d >= 3 ? frame : frame.leftCols(1);
    std::vector<Vector> dir_img, dir_txt;
    for (std::size_t c = 0; c < p.classes; ++c) {
        Vector s = random_unit_orthogonal(avoid, d, rng);
        double alpha = cap * half_to_one(rng);
        dir_img.push_back(unit_or_throw(std::cos(alpha) * c_img + std::sin(alpha) * s));
        dir_txt.push_back(unit_or_throw(std::cos(alpha) * c_txt + std::sin(alpha) * s));
    }
    double closest = -1.0;
    for (std::size_t a = 0; a < dir_img.size(); ++a)
        for (std::size_t b = a + 1; b < dir_img.size(); ++b) closest = std::max(closest, dir_img[a].dot(dir_img[b]));
    if (p.classes > 1 && closest > std::cos(5.0 * std::numbers::pi / 180.0)) {
        sc.warnings.push_back("cone cap too narrow for " + std::to_string(p.classes) +
                              " classes: two class directions are within 5 degrees");
    }

    std::vector<Label> li, lt;
    RowMatrix fa = sample_rows(dir_img, p.n_img, p.within_sigma, rng, li);
    RowMatrix ga = sample_rows(dir_txt, p.n_txt, p.within_sigma, rng, lt);
    Rng noise_rng(linalg::mix_seed(p.seed, 2));
    RowMatrix fb = push_forward(sc.q_true, fa, p.noise_sigma, noise_rng);
    RowMatrix gb = push_forward(sc.q_true, ga, p.noise_sigma, noise_rng);
    sc.g_b_clean = push_forward(sc.q_true, ga, 0.0, noise_rng);

    sc.achieved_gap = (linalg::row_mean(fa) - linalg::row_mean(ga)).norm();
    sc.f_a = make_set(std::move(fa), li, p.classes, "model_a", Modality::image);
    sc.g_a = make_set(std::move(ga), lt, p.classes, "model_a", Modality::text);
    sc.f_b = make_set(std::move(fb), li, p.classes, "model_b", Modality::image);
    sc.g_b = make_set(std::move(gb), lt, p.classes, "model_b", Modality::text);
    return sc;
}

ExactAnchorWorld make_exact_anchor_world(std::size_t d, std::size_t d_tilde, std::uint64_t seed) {
    if (d != d_tilde) {
        throw Error(ErrorKind::dimension, "exact anchor worlds need d = d_tilde: unit anchors with equal kernels "
                                          "and an invertible target anchor matrix force square maps");
    }
    if (d < 2) throw Error(ErrorKind::dimension, "exact anchor world needs d >= 2");
    ExactAnchorWorld w;
    const auto n = static_cast<Eigen::Index>(d);
    Matrix q = random_semi_orthogonal(d, d, linalg::mix_seed(seed, 10));
    Rng rng(linalg::mix_seed(seed, 11));
    auto unit_columns = [&](Eigen::Index cols) {
        for (;;) {
            Matrix m(n, cols);
            for (Eigen::Index j = 0; j < cols; ++j) m.col(j) = linalg::random_unit(n, rng);
            if (linalg::sigma_min(m) > 1e-3) return m;
        }
    };
    w.anchors.g = unit_columns(n);
    w.anchors.g_tilde = q * w.anchors.g;
    w.anchors.f = unit_columns(n);
    w.f_tilde = q * w.anchors.f;

    PlantedParams p;
    p.d = p.d_tilde = d;
    p.n_img = d * (d + 1) + 16;
    p.n_txt = 32;
    p.classes = 4;
    p.seed = seed;
    p.q_true = q;
    w.scenario = make_planted(p);
    return w;
}

CurationScenario make_curation_world(std::size_t nx, std::size_t ny, std::size_t bx, std::size_t by,
                                     std::size_t n_datasets, std::uint64_t seed) {
    if (nx == 0 || ny == 0 || bx == 0 || by == 0 || nx % bx != 0 || ny % by != 0) {
        throw Error(ErrorKind::invalid_argument, "make_curation_world: block counts must divide the alphabet sizes");
    }
    CurationScenario cs;
    const std::size_t sx = nx / bx, sy = ny / by;
    for (std::size_t i = 0; i < nx; ++i) cs.blocks_x.push_back(i / sx);
    for (std::size_t j = 0; j < ny; ++j) cs.blocks_y.push_back(j / sy);

    Rng rng(linalg::mix_seed(seed, 20));
    std::uniform_real_distribution<double> table(0.5, 1.5);
    Matrix b(bx, by);
    for (std::size_t i = 0; i < bx; ++i)
        for (std::size_t j = 0; j < by; ++j) b(i, j) = table(rng);
    b /= b.sum();
    Matrix p(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            p(i, j) = b(cs.blocks_x[i], cs.blocks_y[j]) / static_cast<double>(sx * sy);
    cs.p_star = {p, std::nullopt, std::nullopt};

    // Seeded noise, mean-corrected within each block so every block mean is 1.
    std::uniform_real_distribution<double> jitter(-0.4, 0.4);
    auto weights = [&](std::size_t n, std::size_t size) {
        Vector noise(n);
        for (std::size_t i = 0; i < n; ++i) noise[i] = jitter(rng);
        Vector w(n);
        for (std::size_t start = 0; start < n; start += size) {
            double mean = noise.segment(start, size).mean();
            for (std::size_t i = start; i < start + size; ++i) w[i] = 1.0 + noise[i] - mean;
        }
        return w;
    };
    for (std::size_t k = 0; k < n_datasets; ++k) {
        Vector u = weights(nx, sx), v = weights(ny, sy);
        cs.weights.emplace_back(u, v);
        cs.joints.push_back({p, u, v});
    }
    return cs;
}

DiscreteJoint make_generic_joint(std::size_t nx, std::size_t ny, std::uint64_t seed) {
    if (nx == 0 || ny == 0) throw Error(ErrorKind::invalid_argument, "make_generic_joint: empty alphabet");
    Rng rng(linalg::mix_seed(seed, 30));
    std::uniform_real_distribution<double> mass(0.1, 1.0), weight(0.2, 2.0);
    Matrix p(nx, ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j) p(i, j) = mass(rng);
    p /= p.sum();
    Vector u(nx), v(ny);
    for (auto& x : u) x = weight(rng);
    for (auto& x : v) x = weight(rng);
    return {p, u, v};
}

MarginWorld make_margin_world(std::size_t d, std::size_t r, std::size_t classes, double gamma_target,
                              double eta_target, std::uint64_t seed) {
    if (r == 0 || r + 3 > d) throw Error(ErrorKind::dimension, "make_margin_world needs 1 <= r <= d - 3");
    if (classes == 0 || classes > r) throw Error(ErrorKind::invalid_argument, "make_margin_world needs 1 <= K <= r");
    if (!(gamma_target >= 0.0 && gamma_target <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "infeasible margin: gamma must lie in [0, 1] for unit prototypes");
    }
    if (!(eta_target >= 0.0 && eta_target <= 1.0 - gamma_target)) {
        throw Error(ErrorKind::invalid_argument, "infeasible margin: eta must lie in [0, 1 - gamma]");
    }
    Rng rng(linalg::mix_seed(seed, 40));
    const auto n = static_cast<Eigen::Index>(d), rr = static_cast<Eigen::Index>(r);
    Matrix o = linalg::orthonormal_columns(linalg::gaussian(n, n, rng));
    Matrix q = linalg::orthonormal_columns(linalg::gaussian(n, n, rng));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Shared offset along a spare signal direction; it raises every inner
    // product equally and so leaves the margin at gamma.
    double shared = 0.0;
    if (classes < r) shared = 0.5 * std::max(0.0, 1.0 - gamma_target - eta_target) * unit(rng);
    const double rho2 = 1.0 - gamma_target - shared;
    const double rho = std::sqrt(std::max(0.0, rho2));
    const double t_max = rho2 > 0.0 ? std::min(1.0, eta_target / rho2) : 0.0;
    std::uniform_int_distribution<std::size_t> pick(0, classes - 1);
    const std::size_t c_star = pick(rng), k_star = pick(rng);

    const Vector a = o.col(rr), b = o.col(rr + 1), c2 = o.col(rr + 2);
    RowMatrix pa(classes, n), pb(classes, n);
    for (std::size_t c = 0; c < classes; ++c) {
        Vector u = std::sqrt(gamma_target) * o.col(static_cast<Eigen::Index>(c));
        if (classes < r) u += std::sqrt(shared) * o.col(static_cast<Eigen::Index>(classes));
        double theta = c == c_star ? 0.0 : 2.0 * std::numbers::pi * unit(rng);
        double t = c == k_star ? t_max : t_max * (2.0 * unit(rng) - 1.0);
        Vector w = rho * (std::cos(theta) * a + std::sin(theta) * c2);
        Vector w_hat = rho * (t * a + std::sqrt(std::max(0.0, 1.0 - t * t)) * b);
        pa.row(static_cast<Eigen::Index>(c)) = (u + w).transpose();
        pb.row(static_cast<Eigen::Index>(c)) = (q * (u + w_hat)).transpose();
    }

    MarginWorld mw;
    mw.basis = o.leftCols(rr);
    mw.map.q = q;
    mw.map.kind = MapKind::orthogonal;
    mw.map.fit_modality = FitModality::synthetic;
    mw.map.source_model = "model_a";
    mw.map.target_model = "model_b";
    mw.prototypes_a = std::move(pa);
    mw.prototypes_b = std::move(pb);
    return mw;
}

} // namespace isoalign::synth
