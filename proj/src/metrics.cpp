#include "isoalign/metrics.hpp"

#include "isoalign/error.hpp"
#include "isoalign/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace isoalign {

namespace {

void require_same_rows(const EmbeddingSet& a, const EmbeddingSet& b, const char* what) {
    if (a.rows() != b.rows() || a.dim() != b.dim()) {
        throw Error(ErrorKind::dimension, std::string(what) + ": shapes differ (" + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.dim()) + " vs " + std::to_string(b.rows()) + "x" +
                                              std::to_string(b.dim()) + ")");
    }
    if (a.rows() == 0) throw Error(ErrorKind::invalid_argument, std::string(what) + ": empty sets");
}

const std::vector<Label>& labels_of(const EmbeddingSet& s, const char* what) {
    if (!s.labels) throw Error(ErrorKind::structural, std::string(what) + ": labels required");
    return *s.labels;
}

void accumulate_accuracy(MetricsReport& r, const std::vector<Label>& truth) {
    std::map<Label, std::pair<std::size_t, std::size_t>> per; // hits, total
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool hit = r.predictions[i] == truth[i];
        hits += hit;
        auto& p = per[truth[i]];
        p.first += hit;
        ++p.second;
    }
    r.n_queries = truth.size();
    r.top1_accuracy = truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
    for (const auto& [c, p] : per) r.per_class_accuracy[c] = static_cast<double>(p.first) / static_cast<double>(p.second);
}

Label majority(const std::vector<kernels::Index>& idx, const std::vector<Label>& labels) {
    std::map<Label, std::size_t> counts;
    for (auto i : idx) ++counts[labels[i]];
    Label best = 0;
    std::size_t best_n = 0;
    for (const auto& [c, n] : counts) { // ascending label, so ties keep the lowest
        if (n > best_n) {
            best = c;
            best_n = n;
        }
    }
    return best;
}

} // namespace

RowMatrix unit_rows(const RowMatrix& rows) {
    RowMatrix out = rows;
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
    return out;
}

MetricsReport paired_cosine(const EmbeddingSet& a, const EmbeddingSet& b) {
    require_same_rows(a, b, "paired_cosine");
    Vector cos = kernels::parallel::row_dots(unit_rows(a.data), unit_rows(b.data));
    MetricsReport r;
    r.n_queries = a.rows();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < cos.size(); ++i) sum += cos[i];
    r.mean_cosine = sum / static_cast<double>(cos.size());
    double var = 0.0;
    for (Eigen::Index i = 0; i < cos.size(); ++i) var += (cos[i] - r.mean_cosine) * (cos[i] - r.mean_cosine);
    r.std_cosine = std::sqrt(var / static_cast<double>(cos.size()));
    return r;
}

MetricsReport paired_l2(const EmbeddingSet& a, const EmbeddingSet& b) {
    require_same_rows(a, b, "paired_l2");
    MetricsReport r;
    r.n_queries = a.rows();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.data.rows(); ++i) sum += (a.data.row(i) - b.data.row(i)).norm();
    r.mean_l2 = sum / static_cast<double>(a.rows());
    return r;
}

MetricsReport class_retrieval_top1(const EmbeddingSet& queries, const EmbeddingSet& gallery, bool exclude_self) {
    const auto& ql = labels_of(queries, "class_retrieval_top1");
    const auto& gl = labels_of(gallery, "class_retrieval_top1");
    if (queries.dim() != gallery.dim()) throw Error(ErrorKind::dimension, "class_retrieval_top1: dimension mismatch");
    if (gallery.rows() == 0 || (exclude_self && gallery.rows() < 2)) {
        throw Error(ErrorKind::invalid_argument, "class_retrieval_top1: gallery has no candidates");
    }
    if (exclude_self && queries.rows() != gallery.rows()) {
        throw Error(ErrorKind::invalid_argument, "exclude_self requires queries and gallery to be the same rows");
    }
    auto nn = kernels::parallel::nearest(unit_rows(queries.data), unit_rows(gallery.data), exclude_self);
    MetricsReport r;
    r.predictions.resize(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) r.predictions[i] = gl[nn[i]];
    accumulate_accuracy(r, ql);
    return r;
}

MetricsReport zero_shot(const EmbeddingSet& images, const ClassPrototypes& prototypes) {
    const auto& truth = labels_of(images, "zero_shot");
    if (images.dim() != static_cast<std::size_t>(prototypes.data.cols())) {
        throw Error(ErrorKind::dimension, "zero_shot: image and prototype dimensions differ");
    }
    if (prototypes.size() == 0) throw Error(ErrorKind::invalid_argument, "zero_shot: no prototypes");
    std::vector<std::size_t> order(prototypes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return prototypes.class_ids[a] < prototypes.class_ids[b]; });
    RowMatrix sorted(static_cast<Eigen::Index>(order.size()), prototypes.data.cols());
    std::vector<Label> ids(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        sorted.row(static_cast<Eigen::Index>(k)) = prototypes.data.row(static_cast<Eigen::Index>(order[k]));
        ids[k] = prototypes.class_ids[order[k]];
    }
    std::set<Label> covered(ids.begin(), ids.end());
    for (auto l : truth) {
        if (!covered.count(l)) throw Error(ErrorKind::structural, "zero_shot: label " + std::to_string(l) + " has no prototype");
    }
    auto nn = kernels::parallel::nearest(unit_rows(images.data), unit_rows(sorted));
    MetricsReport r;
    r.predictions.resize(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) r.predictions[i] = ids[nn[i]];
    accumulate_accuracy(r, truth);
    return r;
}

KernelMatrix multimodal_kernel(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.dim() != b.dim()) throw Error(ErrorKind::dimension, "multimodal_kernel: dimension mismatch");
    return {kernels::parallel::cross_gram(a.data, b.data), a.model_id + ":" + to_string(a.modality),
            b.model_id + ":" + to_string(b.modality)};
}

double cka(const KernelMatrix& k1, const KernelMatrix& k2) {
    if (k1.values.rows() != k2.values.rows() || k1.values.cols() != k2.values.cols()) {
        throw Error(ErrorKind::dimension, "cka: kernel shapes differ");
    }
    Matrix z1 = k1.values, z2 = k2.values;
    z1.rowwise() -= z1.colwise().mean();
    z2.rowwise() -= z2.colwise().mean();
    double cross, self1, self2;
    if (z1.rows() <= z1.cols()) {
        // Sample-space form: ‖Z₁ᵀZ₂‖²_F = ⟨Z₁Z₁ᵀ, Z₂Z₂ᵀ⟩_F.
        Matrix g1 = z1 * z1.transpose(), g2 = z2 * z2.transpose();
        cross = (g1.array() * g2.array()).sum();
        self1 = g1.norm();
        self2 = g2.norm();
    } else {
        cross = (z1.transpose() * z2).squaredNorm();
        self1 = (z1.transpose() * z1).norm();
        self2 = (z2.transpose() * z2).norm();
    }
    if (!(self1 > 0.0) || !(self2 > 0.0)) throw Error(ErrorKind::degenerate, "cka: a kernel has zero variance after centering");
    return std::clamp(cross / (self1 * self2), 0.0, 1.0);
}

double modality_gap(const EmbeddingSet& images, const EmbeddingSet& texts) {
    if (images.dim() != texts.dim()) throw Error(ErrorKind::dimension, "modality_gap: dimension mismatch");
    if (images.rows() == 0 || texts.rows() == 0) throw Error(ErrorKind::invalid_argument, "modality_gap: empty set");
    return (linalg::row_mean(images.data) - linalg::row_mean(texts.data)).norm();
}

TwoPathReport two_path_retrieval(const EmbeddingSet& src_img, const EmbeddingSet& src_txt, const EmbeddingSet& tgt_img,
                                 const EmbeddingSet& tgt_txt, const AlignmentMap& map, std::size_t k,
                                 const ApplyOptions& image_opts, const ApplyOptions& text_opts) {
    if (src_txt.rows() == 0 || tgt_txt.rows() == 0) throw Error(ErrorKind::invalid_argument, "two_path: empty text set");
    if (tgt_img.rows() == 0) throw Error(ErrorKind::invalid_argument, "two_path: empty target gallery");
    if (src_img.dim() != src_txt.dim() || tgt_img.dim() != tgt_txt.dim() || src_img.dim() != map.source_dim() ||
        tgt_img.dim() != map.target_dim()) {
        throw Error(ErrorKind::dimension, "two_path: inconsistent dimensions");
    }
    if (k == 0) throw Error(ErrorKind::invalid_argument, "two_path: k must be positive");
    const auto& gallery_labels = labels_of(tgt_img, "two_path");

    TwoPathReport r;
    r.k = std::min(k, tgt_img.rows());
    r.k_clamped = r.k != k;

    const RowMatrix gallery = unit_rows(tgt_img.data);
    // Direct path.
    RowMatrix mapped_img = unit_rows(apply_rows(map, src_img.data, image_opts));
    auto direct = kernels::parallel::top_k(mapped_img, gallery, r.k);
    // Text-mediated path.
    auto src_text_nn = kernels::parallel::nearest(unit_rows(src_img.data), unit_rows(src_txt.data));
    RowMatrix mapped_txt = unit_rows(apply_rows(map, src_txt.data, text_opts));
    auto tgt_text_nn = kernels::parallel::nearest(mapped_txt, unit_rows(tgt_txt.data));
    auto text_neighbours = kernels::parallel::top_k(unit_rows(tgt_txt.data), gallery, r.k);

    const std::size_t n = src_img.rows();
    r.overlap.resize(n);
    r.class_match.resize(n);
    double sum = 0.0;
    std::size_t matches = 0, direct_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = direct[i];
        const auto& b = text_neighbours[tgt_text_nn[src_text_nn[i]]];
        std::set<kernels::Index> sa(a.begin(), a.end()), sb(b.begin(), b.end());
        std::size_t inter = 0;
        for (auto x : sa) inter += sb.count(x);
        const std::size_t uni = sa.size() + sb.size() - inter;
        r.overlap[i] = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
        r.class_match[i] = majority(a, gallery_labels) == majority(b, gallery_labels);
        sum += r.overlap[i];
        matches += r.class_match[i];
        if (src_img.labels) direct_hits += majority(a, gallery_labels) == (*src_img.labels)[i];
    }
    r.mean_overlap = n ? sum / static_cast<double>(n) : 0.0;
    r.class_match_fraction = n ? static_cast<double>(matches) / static_cast<double>(n) : 0.0;
    r.direct_class_accuracy = src_img.labels && n ? static_cast<double>(direct_hits) / static_cast<double>(n)
                                                  : std::numeric_limits<double>::quiet_NaN();
    return r;
}

} // namespace isoalign
