#include "isoalign/align.hpp"

#include "isoalign/error.hpp"
#include "isoalign/kernels.hpp"

#include <cmath>

namespace isoalign {

namespace {

constexpr double kSingular = 1e-10;

void check_pair(const RowMatrix& source, const RowMatrix& target) {
    if (source.rows() != target.rows()) {
        throw Error(ErrorKind::dimension, "fit: source has " + std::to_string(source.rows()) + " rows, target has " +
                                              std::to_string(target.rows()));
    }
    if (source.rows() < 1) throw Error(ErrorKind::dimension, "fit: no rows");
    if (source.cols() < 1 || target.cols() < 1) throw Error(ErrorKind::dimension, "fit: zero dimension");
    if (!source.allFinite() || !target.allFinite()) throw Error(ErrorKind::invalid_argument, "fit: non-finite input");
}

struct Centered {
    RowMatrix source, target;
    std::optional<Vector> mu_source, mu_target;
};

Centered center_if(const RowMatrix& source, const RowMatrix& target, bool centered) {
    Centered c{source, target, std::nullopt, std::nullopt};
    if (centered) {
        Vector ms = linalg::row_mean(source), mt = linalg::row_mean(target);
        c.source.rowwise() -= ms.transpose();
        c.target.rowwise() -= mt.transpose();
        c.mu_source = std::move(ms);
        c.mu_target = std::move(mt);
    }
    return c;
}

template <typename Fit>
AlignmentMap fit_sets(const EmbeddingSet& source, const EmbeddingSet& target, Fit&& fit) {
    check_paired(source, target);
    AlignmentMap m = fit(source.data, target.data);
    m.source_model = source.model_id;
    m.target_model = target.model_id;
    m.fit_modality = source.modality == Modality::image ? FitModality::image : FitModality::text;
    return m;
}

} // namespace

std::string to_string(MapKind k) { return k == MapKind::orthogonal ? "orthogonal" : "linear"; }

std::string to_string(FitModality m) {
    switch (m) {
    case FitModality::image: return "image";
    case FitModality::text: return "text";
    case FitModality::anchors: return "anchors";
    case FitModality::synthetic: return "synthetic";
    }
    return "image";
}

FitModality fit_modality_from_string(const std::string& s) {
    if (s == "image") return FitModality::image;
    if (s == "text") return FitModality::text;
    if (s == "anchors") return FitModality::anchors;
    if (s == "synthetic") return FitModality::synthetic;
    throw Error(ErrorKind::invalid_argument, "unknown fit modality '" + s + "'");
}

void AlignmentMap::validate() const {
    if (q.rows() < 1 || q.cols() < 1) throw Error(ErrorKind::structural, "map has empty Q");
    if (!q.allFinite()) throw Error(ErrorKind::structural, "map has non-finite Q");
    if (mu_source.has_value() != mu_target.has_value()) {
        throw Error(ErrorKind::structural, "map means must be both present or both absent");
    }
    if (mu_source && (mu_source->size() != q.cols() || mu_target->size() != q.rows())) {
        throw Error(ErrorKind::structural, "map mean lengths do not match Q");
    }
    if (kind == MapKind::orthogonal) {
        if (q.cols() > q.rows()) throw Error(ErrorKind::structural, "orthogonal map needs d <= d_tilde");
        double defect = linalg::orthogonality_defect(q);
        if (defect > 1e-8) {
            throw Error(ErrorKind::structural, "orthogonal map has ‖QᵀQ − I‖_F = " + std::to_string(defect));
        }
    }
}

AlignmentMap AlignmentMap::identity(std::size_t d) {
    AlignmentMap m;
    m.q = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    m.kind = MapKind::orthogonal;
    m.fit_modality = FitModality::synthetic;
    return m;
}

void AnchorSet::validate() const {
    auto unit_cols = [](const Matrix& m, const char* name) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (std::abs(m.col(j).norm() - 1.0) > 1e-9) {
                throw Error(ErrorKind::structural, std::string("anchor matrix ") + name + " has a non-unit column");
            }
        }
    };
    if (g.cols() != g_tilde.cols()) throw Error(ErrorKind::dimension, "G and G̃ must have equal column counts");
    if (g_tilde.rows() != g_tilde.cols()) throw Error(ErrorKind::dimension, "G̃ must be square");
    if (f.size() > 0 && f.rows() != g.rows()) throw Error(ErrorKind::dimension, "F and G must share the source dimension");
    if (f.cols() > f.rows()) throw Error(ErrorKind::dimension, "F has more anchors than dimensions");
    unit_cols(g, "G");
    unit_cols(g_tilde, "G_tilde");
    unit_cols(f, "F");
}

AlignmentMap fit_orthogonal(const RowMatrix& source, const RowMatrix& target, bool centered) {
    check_pair(source, target);
    if (source.cols() > target.cols()) {
        throw Error(ErrorKind::dimension, "orthogonal fit needs source dim <= target dim");
    }
    Centered c = center_if(source, target, centered);
    // M = X̃ Xᵀ with samples as columns, i.e. targetᵀ·source for row storage.
    Matrix cross = c.target.transpose() * c.source;
    Eigen::BDCSVD<Matrix> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw Error(ErrorKind::ill_conditioned, "SVD of the cross-covariance failed");

    AlignmentMap m;
    m.q = svd.matrixU() * svd.matrixV().transpose();
    m.kind = MapKind::orthogonal;
    m.mu_source = c.mu_source;
    m.mu_target = c.mu_target;
    m.stats.sigma_min = svd.singularValues().minCoeff();
    m.stats.residual = (c.target - c.source * m.q.transpose()).norm();
    m.stats.n = static_cast<std::size_t>(source.rows());
    return m;
}

AlignmentMap fit_orthogonal(const EmbeddingSet& source, const EmbeddingSet& target, bool centered) {
    return fit_sets(source, target, [&](const RowMatrix& s, const RowMatrix& t) { return fit_orthogonal(s, t, centered); });
}

AlignmentMap fit_linear(const RowMatrix& source, const RowMatrix& target, bool centered, double ridge) {
    check_pair(source, target);
    if (!(ridge >= 0.0)) throw Error(ErrorKind::invalid_argument, "ridge must be non-negative");
    Centered c = center_if(source, target, centered);
    const Eigen::Index d = c.source.cols();

    // Solve source·B ≈ target for B = Qᵀ through the SVD of the source rows.
    Eigen::BDCSVD<Matrix> svd(Matrix(c.source), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double s_min = c.source.rows() < d ? 0.0 : s.minCoeff();
    const double s_max = s.size() ? s.maxCoeff() : 0.0;
    if (ridge == 0.0 && !(s_min > kSingular * std::max(1.0, s_max))) {
        throw IllConditionedError("linear fit: source rows are rank-deficient; use ridge > 0", s_min);
    }
    Vector shrink(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        double denom = s[i] * s[i] + ridge;
        shrink[i] = denom > 0.0 ? s[i] / denom : 0.0;
    }
    Matrix b = svd.matrixV() * shrink.asDiagonal() * svd.matrixU().transpose() * c.target;

    AlignmentMap m;
    m.q = b.transpose();
    m.kind = MapKind::linear;
    m.mu_source = c.mu_source;
    m.mu_target = c.mu_target;
    m.stats.sigma_min = s_min;
    m.stats.residual = (c.target - c.source * m.q.transpose()).norm();
    m.stats.n = static_cast<std::size_t>(source.rows());
    return m;
}

AlignmentMap fit_linear(const EmbeddingSet& source, const EmbeddingSet& target, bool centered, double ridge) {
    return fit_sets(source, target,
                    [&](const RowMatrix& s, const RowMatrix& t) { return fit_linear(s, t, centered, ridge); });
}

RowMatrix apply_rows(const AlignmentMap& map, const RowMatrix& rows, const ApplyOptions& opts) {
    const auto d = map.q.cols(), dt = map.q.rows();
    if (rows.cols() != d) {
        throw Error(ErrorKind::dimension,
                    "apply: rows have dim " + std::to_string(rows.cols()) + ", map expects " + std::to_string(d));
    }
    Vector mu_s = opts.mu_source ? *opts.mu_source : (map.mu_source ? *map.mu_source : Vector::Zero(d));
    Vector mu_t = opts.mu_target ? *opts.mu_target : (map.mu_target ? *map.mu_target : Vector::Zero(dt));
    if (mu_s.size() != d || mu_t.size() != dt) throw Error(ErrorKind::dimension, "apply: mean override has wrong length");
    RowMatrix out = kernels::parallel::affine_rows(rows, map.q, mu_s, mu_t);
    if (opts.renormalize) {
        std::vector<std::size_t> bad;
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            double n = out.row(i).norm();
            if (!(n > 1e-12)) {
                bad.push_back(static_cast<std::size_t>(i));
                continue;
            }
            out.row(i) /= n;
        }
        if (!bad.empty()) throw DegenerateRowError(std::move(bad));
    }
    return out;
}

EmbeddingSet apply(const AlignmentMap& map, const EmbeddingSet& set, const ApplyOptions& opts) {
    EmbeddingSet out;
    out.data = apply_rows(map, set.data, opts);
    out.labels = set.labels;
    out.class_names = set.class_names;
    out.model_id = map.target_model.empty() ? set.model_id + "->aligned" : map.target_model;
    out.modality = set.modality;
    out.dataset_id = set.dataset_id;
    out.normalized = opts.renormalize;
    return out;
}

AlignmentMap fit_from_anchors(const AnchorSet& anchors) {
    anchors.validate();
    const double smin = linalg::sigma_min(anchors.g_tilde);
    if (!(smin > kSingular)) throw IllConditionedError("G̃ is singular", smin);
    AlignmentMap m;
    // G̃ᵀ A = Gᵀ
    m.q = anchors.g_tilde.transpose().fullPivLu().solve(anchors.g.transpose());
    m.kind = MapKind::linear;
    m.fit_modality = FitModality::anchors;
    m.stats.sigma_min = smin;
    m.stats.n = static_cast<std::size_t>(anchors.g.cols());
    return m;
}

AlignmentMap polar_orthogonal(const AlignmentMap& map) {
    if (map.q.cols() > map.q.rows()) throw Error(ErrorKind::dimension, "polar projection needs d <= d_tilde");
    const double smin = linalg::sigma_min(map.q);
    if (!(smin > kSingular)) throw IllConditionedError("polar projection of a rank-deficient map", smin);
    AlignmentMap out = map;
    out.q = linalg::polar_factor(map.q);
    out.kind = MapKind::orthogonal;
    out.stats.sigma_min = smin;
    return out;
}

AlignmentMap compose(const AlignmentMap& first, const AlignmentMap& second) {
    if (second.q.cols() != first.q.rows()) {
        throw Error(ErrorKind::dimension, "compose: second map expects dim " + std::to_string(second.q.cols()) +
                                              ", first produces " + std::to_string(first.q.rows()));
    }
    AlignmentMap out;
    out.q = second.q * first.q;
    out.kind = (first.kind == MapKind::orthogonal && second.kind == MapKind::orthogonal) ? MapKind::orthogonal
                                                                                        : MapKind::linear;
    out.fit_modality = first.fit_modality;
    out.source_model = first.source_model;
    out.target_model = second.target_model;
    if (first.has_means() || second.has_means()) {
        // Absent means act as zero vectors.
        Vector mu_s1 = first.mu_source ? *first.mu_source : Vector::Zero(first.q.cols());
        Vector mu_t1 = first.mu_target ? *first.mu_target : Vector::Zero(first.q.rows());
        Vector mu_s2 = second.mu_source ? *second.mu_source : Vector::Zero(second.q.cols());
        Vector mu_t2 = second.mu_target ? *second.mu_target : Vector::Zero(second.q.rows());
        out.mu_source = mu_s1;
        out.mu_target = second.q * (mu_t1 - mu_s2) + mu_t2;
    }
    return out;
}

AlignmentMap invert(const AlignmentMap& map) {
    if (map.q.rows() != map.q.cols()) {
        throw Error(ErrorKind::not_invertible, "map " + std::to_string(map.q.cols()) + "->" +
                                                   std::to_string(map.q.rows()) + " is rectangular and has no inverse");
    }
    AlignmentMap out = map;
    if (map.kind == MapKind::orthogonal) {
        out.q = map.q.transpose();
    } else {
        const double smin = linalg::sigma_min(map.q);
        if (!(smin > kSingular)) throw IllConditionedError("linear map is singular", smin);
        out.q = map.q.fullPivLu().inverse();
    }
    out.mu_source = map.mu_target;
    out.mu_target = map.mu_source;
    std::swap(out.source_model, out.target_model);
    return out;
}

} // namespace isoalign
