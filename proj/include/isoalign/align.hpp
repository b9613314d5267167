#pragma once

// Alignment maps between two embedding spaces.
//
// A map sends a source row z (dimension d) to Q(z − μ_s) + μ_t (dimension d̃).
// Orthogonal maps have orthonormal columns (QᵀQ = I_d, d ≤ d̃) and come from
// the closed-form Procrustes solution Q = U·I_{d̃×d}·Vᵀ where UΣVᵀ is the SVD
// of the cross-covariance M = X̃ᵀX of paired target/source rows. Reflections
// are allowed.
//
// MAP1 layout (little-endian):
//   "MAP1" | version u32 = 1 | d̃ u32 | d u32 | kind u8 (0 orth, 1 linear)
//   | flags u8 (bit 0: means present) | reserved u16
//   | Q row-major f64 (d̃·d) | [μ_s (d f64), μ_t (d̃ f64)]
// Provenance and fit statistics go to a JSON sidecar `<path>.json`.

#include "isoalign/embstore.hpp"
#include "isoalign/linalg.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace isoalign {

enum class MapKind : std::uint8_t { orthogonal = 0, linear = 1 };
enum class FitModality { image, text, anchors, synthetic };

std::string to_string(MapKind k);
std::string to_string(FitModality m);
FitModality fit_modality_from_string(const std::string& s);

struct FitStats {
    double residual = 0.0;  // ‖X̃ − QX‖_F on the (centered) fitting rows
    double sigma_min = 0.0; // smallest singular value of the matrix that determined Q
    std::size_t n = 0;      // number of fitting pairs
};

struct AlignmentMap {
    Matrix q; // d̃ × d
    std::optional<Vector> mu_source;
    std::optional<Vector> mu_target;
    MapKind kind = MapKind::orthogonal;
    FitModality fit_modality = FitModality::image;
    std::string source_model;
    std::string target_model;
    FitStats stats;

    std::size_t source_dim() const { return static_cast<std::size_t>(q.cols()); }
    std::size_t target_dim() const { return static_cast<std::size_t>(q.rows()); }
    bool has_means() const { return mu_source.has_value(); }

    void validate() const;

    static AlignmentMap identity(std::size_t d);
};

struct AnchorSet {
    Matrix g;       // d × d̃, source text anchors as columns
    Matrix g_tilde; // d̃ × d̃, target text anchors as columns
    Matrix f;       // d × r, source image anchors as columns

    void validate() const;
};

AlignmentMap fit_orthogonal(const RowMatrix& source, const RowMatrix& target, bool centered);
AlignmentMap fit_orthogonal(const EmbeddingSet& source, const EmbeddingSet& target, bool centered);

/// Least squares argmin ‖X̃ − QX‖² + ridge·‖Q‖², any d and d̃.
AlignmentMap fit_linear(const RowMatrix& source, const RowMatrix& target, bool centered, double ridge = 0.0);
AlignmentMap fit_linear(const EmbeddingSet& source, const EmbeddingSet& target, bool centered, double ridge = 0.0);

struct ApplyOptions {
    std::optional<Vector> mu_source; // overrides the stored source mean
    std::optional<Vector> mu_target; // overrides the stored target mean
    bool renormalize = false;
};

RowMatrix apply_rows(const AlignmentMap& map, const RowMatrix& rows, const ApplyOptions& opts = {});
EmbeddingSet apply(const AlignmentMap& map, const EmbeddingSet& set, const ApplyOptions& opts = {});

/// A = G̃^{-ᵀ}Gᵀ, the linear map fixed by anchor kernel agreement.
AlignmentMap fit_from_anchors(const AnchorSet& anchors);

/// Nearest semi-orthogonal map: orthogonal polar factor of a linear map.
AlignmentMap polar_orthogonal(const AlignmentMap& map);

/// Map equivalent to applying `first` then `second`.
AlignmentMap compose(const AlignmentMap& first, const AlignmentMap& second);

AlignmentMap invert(const AlignmentMap& map);

void save_map(const AlignmentMap& map, const std::filesystem::path& path);
AlignmentMap load_map(const std::filesystem::path& path);

} // namespace isoalign
