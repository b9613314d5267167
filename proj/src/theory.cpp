#include "isoalign/theory.hpp"

#include "isoalign/error.hpp"
#include "isoalign/kernels.hpp"

#include <cmath>
#include <limits>

namespace isoalign::theory {

namespace {

constexpr double kRankRelative = 1e-10;
constexpr double kSingular = 1e-10;

void require_semi_orthogonal(const AlignmentMap& map) {
    if (map.q.cols() > map.q.rows() || linalg::orthogonality_defect(map.q) > 1e-8) {
        throw Error(ErrorKind::invalid_argument, "bound check needs a semi-orthogonal map");
    }
}

// max_{j,y} |⟨F_j, g_y⟩ − ⟨F̃_j, g̃_y⟩| over anchor columns and text rows.
double anchor_text_discrepancy(const Matrix& f, const Matrix& f_t, const RowMatrix& g, const RowMatrix& g_t) {
    Matrix k = g * f, k_t = g_t * f_t;
    return k.size() ? (k - k_t).cwiseAbs().maxCoeff() : 0.0;
}

double anchor_deviation(const Matrix& f, const Matrix& f_t, const Matrix& q) {
    return f.cols() ? (f_t - q * f).colwise().norm().maxCoeff() : 0.0;
}

void check_text_shapes(const Matrix& f, const Matrix& f_t, const AlignmentMap& map, const RowMatrix& g,
                       const RowMatrix& g_t) {
    if (f.rows() != map.q.cols() || f_t.rows() != map.q.rows() || f.cols() != f_t.cols() ||
        g.cols() != map.q.cols() || g_t.cols() != map.q.rows() || g.rows() != g_t.rows()) {
        throw Error(ErrorKind::dimension, "bound check: inconsistent anchor/text shapes");
    }
    // Both bounds use ‖g̃‖ = 1.
    if (!rows_unit_norm(g_t, 1e-9)) throw Error(ErrorKind::invalid_argument, "bound check needs unit target text rows");
}

double max_abs_quadratic(const RowMatrix& rows, const Matrix& m) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        Vector x = rows.row(i).transpose();
        best = std::max(best, std::abs(x.dot(m * x)));
    }
    return best;
}

} // namespace

RowMatrix sym_features(const RowMatrix& rows) {
    const Eigen::Index d = rows.cols();
    RowMatrix out(rows.rows(), d * (d + 1) / 2);
    const double s2 = std::sqrt(2.0);
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < d; ++i) {
            out(r, k++) = rows(r, i) * rows(r, i);
            for (Eigen::Index j = i + 1; j < d; ++j) out(r, k++) = s2 * rows(r, i) * rows(r, j);
        }
    }
    return out;
}

Matrix sym_from_features(const Vector& v, Eigen::Index d) {
    if (v.size() != d * (d + 1) / 2) throw Error(ErrorKind::dimension, "sym_from_features: wrong length");
    Matrix m(d, d);
    const double s2 = std::sqrt(2.0);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        m(i, i) = v[k++];
        for (Eigen::Index j = i + 1; j < d; ++j) m(i, j) = m(j, i) = v[k++] / s2;
    }
    return m;
}

SpanningReport sym_spanning(const RowMatrix& rows, std::uint64_t seed, std::size_t samples) {
    if (rows.rows() == 0 || rows.cols() == 0) throw Error(ErrorKind::invalid_argument, "sym_spanning: empty set");
    const Eigen::Index d = rows.cols();
    SpanningReport rep;
    rep.required = static_cast<std::size_t>(d * (d + 1) / 2);
    Matrix feats = sym_features(rows);
    Eigen::BDCSVD<Matrix> svd(feats, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() ? s.maxCoeff() : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rep.rank += s[i] > kRankRelative * smax;
    rep.spanning = rep.rank == rep.required;
    if (!rep.spanning) {
        rep.kappa_lower = std::numeric_limits<double>::infinity();
        return rep;
    }
    auto ratio = [&](const Matrix& m) {
        double denom = max_abs_quadratic(rows, m);
        double num = linalg::spectral_norm(m);
        return denom > 0.0 ? num / denom : std::numeric_limits<double>::infinity();
    };
    double best = 0.0;
    // Right singular directions of the feature map: the weakest ones are the
    // symmetric matrices the rows probe least.
    const Matrix& v = svd.matrixV();
    for (Eigen::Index j = 0; j < v.cols(); ++j) best = std::max(best, ratio(sym_from_features(v.col(j), d)));
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        Matrix g = linalg::gaussian(d, d, rng);
        best = std::max(best, ratio(0.5 * (g + g.transpose())));
    }
    rep.kappa_lower = best;
    return rep;
}

double kernel_discrepancy(const RowMatrix& f_a, const RowMatrix& g_a, const RowMatrix& f_b, const RowMatrix& g_b) {
    if (f_a.rows() != f_b.rows() || g_a.rows() != g_b.rows()) {
        throw Error(ErrorKind::dimension, "kernel_discrepancy: models disagree on sample counts");
    }
    RowMatrix ka = kernels::parallel::cross_gram(f_a, g_a);
    RowMatrix kb = kernels::parallel::cross_gram(f_b, g_b);
    return ka.size() ? (ka - kb).cwiseAbs().maxCoeff() : 0.0;
}

double kernel_discrepancy(const EmbeddingSet& f_a, const EmbeddingSet& g_a, const EmbeddingSet& f_b,
                          const EmbeddingSet& g_b) {
    return kernel_discrepancy(f_a.data, g_a.data, f_b.data, g_b.data);
}

BoundReport check_linear_bound(const AnchorSet& anchors, const RowMatrix& f_source, const RowMatrix& f_target) {
    AlignmentMap a = fit_from_anchors(anchors);
    if (f_source.rows() != f_target.rows() || f_source.cols() != anchors.g.rows() ||
        f_target.cols() != anchors.g_tilde.rows()) {
        throw Error(ErrorKind::dimension, "check_linear_bound: image rows do not match anchor dimensions");
    }
    BoundReport rep;
    rep.sigma_min_gtilde = a.stats.sigma_min;
    // Kernel rows against the text anchors: k(x) = Gᵀ f(x), k̃(x) = G̃ᵀ f̃(x).
    Matrix k = f_source * anchors.g, k_t = f_target * anchors.g_tilde;
    rep.epsilon = k.size() ? (k - k_t).cwiseAbs().maxCoeff() : 0.0;
    RowMatrix predicted = f_source * a.q.transpose();
    rep.observed_max = f_source.rows() ? (f_target - predicted).rowwise().norm().maxCoeff() : 0.0;
    rep.bound_value = std::sqrt(static_cast<double>(anchors.g_tilde.rows())) * rep.epsilon / rep.sigma_min_gtilde;
    rep.satisfied = rep.observed_max <= rep.bound_value + kBoundTolerance;
    return rep;
}

BoundReport check_text_bound(const Matrix& f_anchor, const Matrix& f_anchor_target, const AlignmentMap& map,
                             const RowMatrix& g_source, const RowMatrix& g_target, std::optional<double> epsilon_prime,
                             std::optional<double> delta_f) {
    require_semi_orthogonal(map);
    check_text_shapes(f_anchor, f_anchor_target, map, g_source, g_target);
    const Eigen::Index d = map.q.cols();
    if (f_anchor.cols() != d) {
        throw IllConditionedError("text bound needs d = " + std::to_string(d) + " image anchors, got " +
                                      std::to_string(f_anchor.cols()),
                                  0.0);
    }
    BoundReport rep;
    rep.sigma_min_f = linalg::sigma_min(f_anchor);
    if (!(rep.sigma_min_f > kSingular)) throw IllConditionedError("image anchor matrix F is singular", rep.sigma_min_f);
    rep.epsilon_prime = epsilon_prime ? *epsilon_prime
                                      : anchor_text_discrepancy(f_anchor, f_anchor_target, g_source, g_target);
    rep.delta_f = delta_f ? *delta_f : anchor_deviation(f_anchor, f_anchor_target, map.q);
    rep.bound_value = std::sqrt(static_cast<double>(d)) * (rep.epsilon_prime + rep.delta_f) / rep.sigma_min_f;

    RowMatrix pulled_back = g_target * map.q; // rows Qᵀg̃
    double observed = g_source.rows() ? (pulled_back - g_source).rowwise().norm().maxCoeff() : 0.0;
    if (map.q.rows() == map.q.cols() && g_source.rows()) {
        RowMatrix pushed = g_source * map.q.transpose();
        observed = std::max(observed, (g_target - pushed).rowwise().norm().maxCoeff());
    }
    rep.observed_max = observed;
    rep.satisfied = rep.observed_max <= rep.bound_value + kBoundTolerance;
    return rep;
}

BoundReport subspace_projection_bound(const Matrix& f_anchor, const Matrix& f_anchor_target, const AlignmentMap& map,
                                      const RowMatrix& g_source, const RowMatrix& g_target, std::optional<double> epsilon,
                                      std::optional<double> delta_f) {
    require_semi_orthogonal(map);
    check_text_shapes(f_anchor, f_anchor_target, map, g_source, g_target);
    if (f_anchor.cols() < 1) throw Error(ErrorKind::invalid_argument, "projection bound needs at least one anchor");
    BoundReport rep;
    rep.sigma_min_f = linalg::sigma_min(f_anchor);
    if (!(rep.sigma_min_f > kSingular)) throw IllConditionedError("anchor basis is rank-deficient", rep.sigma_min_f);
    const Matrix basis = linalg::orthonormal_columns(f_anchor);
    rep.epsilon = epsilon ? *epsilon : anchor_text_discrepancy(f_anchor, f_anchor_target, g_source, g_target);
    rep.delta_f = delta_f ? *delta_f : anchor_deviation(f_anchor, f_anchor_target, map.q);
    rep.rho = std::sqrt(static_cast<double>(f_anchor.cols())) * (rep.epsilon + rep.delta_f) / rep.sigma_min_f;
    rep.bound_value = rep.rho;

    RowMatrix h = g_source - g_target * map.q; // rows g − Qᵀg̃
    if (h.rows()) {
        rep.observed_max = (h * basis).rowwise().norm().maxCoeff();
        rep.unprojected_max = h.rowwise().norm().maxCoeff();
    }
    rep.satisfied = rep.observed_max <= rep.bound_value + kBoundTolerance;
    return rep;
}

MarginReport margin_noise(const Matrix& basis, const AlignmentMap& map, const RowMatrix& prototypes_a,
                          const RowMatrix& prototypes_b) {
    require_semi_orthogonal(map);
    const Eigen::Index r = basis.cols();
    if ((basis.transpose() * basis - Matrix::Identity(r, r)).norm() > 1e-8) {
        throw Error(ErrorKind::invalid_argument, "margin_noise: basis is not orthonormal");
    }
    if (basis.rows() != map.q.cols() || prototypes_a.cols() != map.q.cols() || prototypes_b.cols() != map.q.rows() ||
        prototypes_a.rows() != prototypes_b.rows() || prototypes_a.rows() < 1) {
        throw Error(ErrorKind::dimension, "margin_noise: inconsistent shapes");
    }
    const Eigen::Index k = prototypes_a.rows();
    const Matrix& q = map.q;
    Matrix g = prototypes_a.transpose();   // d × K
    Matrix g_t = prototypes_b.transpose(); // d̃ × K
    Matrix u = basis * (basis.transpose() * g);
    Matrix w = g - u;
    Matrix qb = q * basis; // orthonormal basis of Q·U
    Matrix w_t = g_t - qb * (qb.transpose() * g_t);

    MarginReport rep;
    Matrix gram_u = u.transpose() * u;
    rep.gamma = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
        double other = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < k; ++j)
            if (j != c) other = std::max(other, gram_u(c, j));
        // With one class there is no competitor and the margin is the signal energy.
        rep.gamma = std::min(rep.gamma, gram_u(c, c) - (k > 1 ? other : 0.0));
    }
    rep.eta = ((q * w).transpose() * w_t).cwiseAbs().maxCoeff();
    rep.guaranteed = rep.gamma > 2.0 * rep.eta;

    Matrix scores = (q * g).transpose() * g_t; // scores(c, j) = ⟨Q g_c, g̃_j⟩
    rep.retrieval_correct = true;
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < k; ++j)
            if (scores(c, j) > scores(c, best)) best = j;
        rep.retrieval_correct = rep.retrieval_correct && best == c;
    }
    return rep;
}

void DiscreteJoint::validate() const {
    if (p.rows() < 1 || p.cols() < 1) throw Error(ErrorKind::invalid_argument, "joint is empty");
    if (!p.allFinite() || !(p.minCoeff() > 0.0)) throw Error(ErrorKind::invalid_argument, "joint entries must be positive");
    if (std::abs(p.sum() - 1.0) > 1e-12) throw Error(ErrorKind::invalid_argument, "joint does not sum to 1");
    if (u && (u->size() != p.rows() || !(u->minCoeff() > 0.0) || !u->allFinite())) {
        throw Error(ErrorKind::invalid_argument, "weight u must be positive with one entry per x");
    }
    if (v && (v->size() != p.cols() || !(v->minCoeff() > 0.0) || !v->allFinite())) {
        throw Error(ErrorKind::invalid_argument, "weight v must be positive with one entry per y");
    }
}

DiscreteJoint curate(const DiscreteJoint& joint) {
    joint.validate();
    Matrix w = joint.p;
    if (joint.u) w = joint.u->asDiagonal() * w;
    if (joint.v) w = w * joint.v->asDiagonal();
    return {w / w.sum(), std::nullopt, std::nullopt};
}

KernelMatrix pmi_matrix(const DiscreteJoint& joint, bool use_curation) {
    joint.validate();
    const Matrix p = use_curation ? curate(joint).p : joint.p;
    Vector px = p.rowwise().sum(), py = p.colwise().sum().transpose();
    KernelMatrix k;
    k.values.resize(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) k.values(i, j) = std::log(p(i, j)) - std::log(px[i]) - std::log(py[j]);
    k.row_source = "x";
    k.col_source = "y";
    return k;
}

std::pair<double, double> curation_bias_residual(const DiscreteJoint& joint) {
    joint.validate();
    if (!joint.u || !joint.v) throw Error(ErrorKind::invalid_argument, "curation_bias_residual needs weights u and v");
    const Matrix& p = joint.p;
    Vector px = p.rowwise().sum(), py = p.colwise().sum().transpose();
    Vector ev_given_x = (p * *joint.v).cwiseQuotient(px);
    Vector eu_given_y = (p.transpose() * *joint.u).cwiseQuotient(py);
    double ev = py.dot(*joint.v), eu = px.dot(*joint.u);
    return {(ev_given_x.array() - ev).abs().maxCoeff(), (eu_given_y.array() - eu).abs().maxCoeff()};
}

ShiftReport check_constant_shift(const KernelMatrix& k1, const KernelMatrix& k2) {
    if (k1.values.rows() != k2.values.rows() || k1.values.cols() != k2.values.cols() || k1.values.size() == 0) {
        throw Error(ErrorKind::dimension, "check_constant_shift: kernel shapes differ");
    }
    RowMatrix diff = k2.values - k1.values;
    ShiftReport r;
    r.delta = diff.mean();
    r.max_residual = (diff.array() - r.delta).abs().maxCoeff();
    return r;
}

double curation_identity_residual(const DiscreteJoint& joint) {
    joint.validate();
    const Matrix& p = joint.p;
    Vector u = joint.u ? *joint.u : Vector::Ones(p.rows());
    Vector v = joint.v ? *joint.v : Vector::Ones(p.cols());
    Vector px = p.rowwise().sum(), py = p.colwise().sum().transpose();
    Vector ev_given_x = (p * v).cwiseQuotient(px);
    Vector eu_given_y = (p.transpose() * u).cwiseQuotient(py);
    const double z = u.dot(p * v);
    RowMatrix k_star = pmi_matrix({p, std::nullopt, std::nullopt}, false).values;
    RowMatrix k_cur = pmi_matrix(joint, true).values;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j) {
            double r = k_cur(i, j) - k_star(i, j) + std::log(ev_given_x[i]) + std::log(eu_given_y[j]) - std::log(z);
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

double pmi_normalization_residual(const DiscreteJoint& joint) {
    KernelMatrix k = pmi_matrix(joint, false);
    double s = 0.0;
    for (Eigen::Index i = 0; i < joint.p.rows(); ++i)
        for (Eigen::Index j = 0; j < joint.p.cols(); ++j) s += joint.p(i, j) * std::exp(-k.values(i, j));
    return std::abs(s - 1.0);
}

} // namespace isoalign::theory
