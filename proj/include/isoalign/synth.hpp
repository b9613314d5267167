#pragma once

// Planted ground-truth generators. Every generator is a pure function of its
// parameters (including the seed).

#include "isoalign/align.hpp"
#include "isoalign/embstore.hpp"
#include "isoalign/theory.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isoalign::synth {

using theory::DiscreteJoint;

Matrix random_semi_orthogonal(std::size_t d, std::size_t d_tilde, std::uint64_t seed);

struct PlantedParams {
    std::size_t d = 8;
    std::size_t d_tilde = 8;
    std::size_t n_img = 64;
    std::size_t n_txt = 32;
    std::size_t classes = 4;
    double noise_sigma = 0.0;    // Gaussian row noise in model B, added before renormalization
    double gap_norm = 0.5;       // target distance between image and text cone centers
    double cap_angle_deg = 60.0; // class directions sit within this angle of their cone center
    double within_sigma = 0.1;   // per-coordinate spread of samples around their class direction
    std::uint64_t seed = 0;
    std::optional<Matrix> q_true; // planted map; drawn from the seed when absent
};

struct PlantedScenario {
    PlantedParams params;
    Matrix q_true; // d̃ × d, orthonormal columns
    EmbeddingSet f_a, g_a; // model A images / texts
    EmbeddingSet f_b, g_b; // model B images / texts
    RowMatrix g_b_clean;   // normalize(Q·g_a) before model-B noise
    double achieved_gap = 0.0;
    std::vector<std::string> warnings;
};

PlantedScenario make_planted(const PlantedParams& params);

struct ExactAnchorWorld {
    AnchorSet anchors;
    Matrix f_tilde; // target image anchors Q·F
    PlantedScenario scenario;
};

/// Anchors and a noise-free scenario sharing one planted orthogonal map.
/// Exact kernel agreement with an invertible G̃ on the unit sphere forces
/// d = d̃, so rectangular requests are rejected.
ExactAnchorWorld make_exact_anchor_world(std::size_t d, std::size_t d_tilde, std::uint64_t seed);

struct CurationScenario {
    DiscreteJoint p_star;
    std::vector<std::size_t> blocks_x, blocks_y;
    std::vector<std::pair<Vector, Vector>> weights; // (u, v) per synthetic dataset
    std::vector<DiscreteJoint> joints;              // p_star carrying each dataset's weights
};

/// Block-uniform p⋆ with weights whose within-block means are equal across
/// blocks. Each curation then has no cross-modal bias, so all curated PMIs
/// differ from the base PMI by a constant.
///
/// Block structure is what makes non-constant weights possible: for a generic
/// square p⋆ the condition P·v = c·p_X has only constant solutions v.
CurationScenario make_curation_world(std::size_t nx, std::size_t ny, std::size_t bx, std::size_t by,
                                     std::size_t n_datasets, std::uint64_t seed);

/// Strictly positive joint and weights with no structure.
DiscreteJoint make_generic_joint(std::size_t nx, std::size_t ny, std::uint64_t seed);

struct MarginWorld {
    Matrix basis;      // d × r orthonormal basis of the image span
    AlignmentMap map;  // planted orthogonal map
    RowMatrix prototypes_a; // K × d source class prompts
    RowMatrix prototypes_b; // K × d̃ target class prompts
};

/// Class prompts whose signal margin is gamma_target and whose cross-model
/// residual interaction is eta_target.
MarginWorld make_margin_world(std::size_t d, std::size_t r, std::size_t classes, double gamma_target, double eta_target,
                              std::uint64_t seed);

} // namespace isoalign::synth
