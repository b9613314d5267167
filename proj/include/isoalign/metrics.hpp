#pragma once

// Evaluation metrics for aligned embedding spaces. Every similarity is a
// cosine; argmax ties resolve to the lowest index (or class id).

#include "isoalign/align.hpp"
#include "isoalign/embstore.hpp"

#include <map>
#include <string>
#include <vector>

namespace isoalign {

struct KernelMatrix {
    RowMatrix values;
    std::string row_source;
    std::string col_source;
};

struct MetricsReport {
    double mean_cosine = 0.0;
    double std_cosine = 0.0;
    double mean_l2 = 0.0;
    double top1_accuracy = 0.0;
    std::map<Label, double> per_class_accuracy;
    std::size_t n_queries = 0;
    std::vector<Label> predictions; // predicted class per query, for retrieval and zero-shot
};

MetricsReport paired_cosine(const EmbeddingSet& a, const EmbeddingSet& b);
MetricsReport paired_l2(const EmbeddingSet& a, const EmbeddingSet& b);

/// Top-1 class retrieval: a query is a hit when its nearest gallery row shares
/// its label. exclude_self drops gallery row i as a candidate for query i
/// (within-set checks where queries and gallery are the same rows).
MetricsReport class_retrieval_top1(const EmbeddingSet& queries, const EmbeddingSet& gallery, bool exclude_self = false);

/// Zero-shot classification against class prototypes.
MetricsReport zero_shot(const EmbeddingSet& images, const ClassPrototypes& prototypes);

KernelMatrix multimodal_kernel(const EmbeddingSet& a, const EmbeddingSet& b);

/// Linear CKA with each kernel matrix read as a feature matrix (rows are
/// samples): ‖Z₁ᵀZ₂‖²_F / (‖Z₁ᵀZ₁‖_F ‖Z₂ᵀZ₂‖_F) after column centering.
double cka(const KernelMatrix& k1, const KernelMatrix& k2);

/// ‖mean(images) − mean(texts)‖₂.
double modality_gap(const EmbeddingSet& images, const EmbeddingSet& texts);

struct TwoPathReport {
    std::vector<double> overlap;    // Jaccard overlap of the two k-sets, per query
    std::vector<bool> class_match;  // majority classes agree, per query
    double mean_overlap = 0.0;
    double class_match_fraction = 0.0;
    // Direct-path majority class equals the query's own label; NaN when the
    // source images carry no labels.
    double direct_class_accuracy = 0.0;
    std::size_t k = 0;
    bool k_clamped = false;
};

/// Compares direct retrieval (map the image, take its k nearest target
/// images) against text-mediated retrieval (nearest source text, map it,
/// nearest target text, that text's k nearest target images).
TwoPathReport two_path_retrieval(const EmbeddingSet& src_img, const EmbeddingSet& src_txt, const EmbeddingSet& tgt_img,
                                 const EmbeddingSet& tgt_txt, const AlignmentMap& map, std::size_t k,
                                 const ApplyOptions& image_opts = {}, const ApplyOptions& text_opts = {});

/// Rows scaled to unit norm; throws DegenerateRowError on near-zero rows.
RowMatrix unit_rows(const RowMatrix& rows);

} // namespace isoalign
