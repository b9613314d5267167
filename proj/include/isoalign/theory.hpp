#pragma once

// Numerical checks of the identifiability results: Sym(d)-spanning
// diagnostics, perturbation bounds for anchor-identified maps, the
// margin/noise retrieval guarantee, and PMI invariance under curation of a
// discrete joint distribution. Logs are natural logs, so PMI shifts are in nats.

#include "isoalign/align.hpp"
#include "isoalign/metrics.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace isoalign::theory {

constexpr double kBoundTolerance = 1e-9;

struct BoundReport {
    double epsilon = 0.0;       // max kernel discrepancy over the checked pairs
    double epsilon_prime = 0.0; // text-side discrepancy on image anchors
    double delta_f = 0.0;       // max ‖f̃(x̄ⱼ) − Q f(x̄ⱼ)‖ over anchors
    double sigma_min_gtilde = 0.0;
    double sigma_min_f = 0.0;
    double bound_value = 0.0;
    double observed_max = 0.0;
    double rho = 0.0;             // projection bound, subspace variant only
    double unprojected_max = 0.0; // subspace variant: residual without projection
    bool satisfied = false;       // observed_max <= bound_value + kBoundTolerance
};

struct SpanningReport {
    std::size_t rank = 0;
    std::size_t required = 0; // d(d+1)/2
    bool spanning = false;
    double kappa_lower = 0.0; // sampled lower estimate of κ_S; +inf when not spanning
};

/// Rows of xxᵀ in symmetric coordinates (off-diagonals scaled by √2) so the
/// Euclidean inner product matches the Frobenius one.
RowMatrix sym_features(const RowMatrix& rows);
Matrix sym_from_features(const Vector& v, Eigen::Index d);

SpanningReport sym_spanning(const RowMatrix& rows, std::uint64_t seed = 0, std::size_t samples = 1000);

/// max_{i,j} |⟨fA_i, gA_j⟩ − ⟨fB_i, gB_j⟩|.
double kernel_discrepancy(const RowMatrix& f_a, const RowMatrix& g_a, const RowMatrix& f_b, const RowMatrix& g_b);
double kernel_discrepancy(const EmbeddingSet& f_a, const EmbeddingSet& g_a, const EmbeddingSet& f_b,
                          const EmbeddingSet& g_b);

/// Checks ‖f̃(x) − A f(x)‖ ≤ √d̃·ε/σ_min(G̃) with A fit from the anchors and ε
/// measured on the given image pairs against the text anchors.
BoundReport check_linear_bound(const AnchorSet& anchors, const RowMatrix& f_source, const RowMatrix& f_target);

/// Checks ‖Qᵀg̃(y) − g(y)‖ ≤ √d·(ε′ + δ_f)/σ_min(F) for square image anchors
/// F (source, d×d) and F̃ (target, d̃×d). ε′ and δ_f are measured unless given.
BoundReport check_text_bound(const Matrix& f_anchor, const Matrix& f_anchor_target, const AlignmentMap& map,
                             const RowMatrix& g_source, const RowMatrix& g_target,
                             std::optional<double> epsilon_prime = std::nullopt,
                             std::optional<double> delta_f = std::nullopt);

/// Checks ‖Proj_U(g − Qᵀg̃)‖ ≤ ρ = √r/σ_min(F)·(ε + δ_f) where U is spanned by
/// the r anchor columns of F. ε and δ_f are measured on the anchors unless given.
BoundReport subspace_projection_bound(const Matrix& f_anchor, const Matrix& f_anchor_target, const AlignmentMap& map,
                                      const RowMatrix& g_source, const RowMatrix& g_target,
                                      std::optional<double> epsilon = std::nullopt,
                                      std::optional<double> delta_f = std::nullopt);

struct MarginReport {
    double gamma = 0.0;
    double eta = 0.0;
    bool guaranteed = false; // gamma > 2·eta
    bool retrieval_correct = false;
};

/// basis: orthonormal d×r basis of the image span. prototypes_a/b: K class
/// prompts in source/target space, row c matched to row c.
MarginReport margin_noise(const Matrix& basis, const AlignmentMap& map, const RowMatrix& prototypes_a,
                          const RowMatrix& prototypes_b);

struct DiscreteJoint {
    Matrix p; // |X| × |Y|
    std::optional<Vector> u; // curation weight on X
    std::optional<Vector> v; // curation weight on Y

    void validate() const;
};

/// p^(a) ∝ u(x) v(y) p(x, y), renormalized, without weights.
DiscreteJoint curate(const DiscreteJoint& joint);

/// K(x, y) = log p(x, y) − log p_X(x) − log p_Y(y) of the joint, or of its
/// curation when use_curation is set.
KernelMatrix pmi_matrix(const DiscreteJoint& joint, bool use_curation);

/// (max_x |E[v|x] − E[v]|, max_y |E[u|y] − E[u]|) under the base joint.
std::pair<double, double> curation_bias_residual(const DiscreteJoint& joint);

struct ShiftReport {
    double delta = 0.0;
    double max_residual = 0.0;
};

/// delta = mean(k2 − k1), the constant carrying k1 into k2.
ShiftReport check_constant_shift(const KernelMatrix& k1, const KernelMatrix& k2);

/// max |K^(a) − K⋆ + log E[v|x] + log E[u|y] − log Z| over all cells; this
/// identity holds for every positive joint and weights.
double curation_identity_residual(const DiscreteJoint& joint);

/// |Σ p(x,y)·exp(−K(x,y)) − 1|.
double pmi_normalization_residual(const DiscreteJoint& joint);

} // namespace isoalign::theory
