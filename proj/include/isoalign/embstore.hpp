#pragma once

// Embedding sets: ingestion, normalization, class prototypes, splits and the
// EMB1 binary format.
//
// EMB1 layout (little-endian):
//   "EMB1" | version u32 = 1 | n u32 | d u32 | dtype u8 (0 = f32, 1 = f64)
//   | flags u8 (bit 0: labels present) | reserved u16 = 0
//   | n·d row-major values | [n × u32 labels]
// Metadata lives in a JSON sidecar at `<path>.json`.

#include "isoalign/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace isoalign {

enum class Modality { image, text };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

using Label = std::uint32_t;

struct EmbeddingSet {
    RowMatrix data;
    std::optional<std::vector<Label>> labels;
    std::optional<std::map<Label, std::string>> class_names;
    std::string model_id;
    Modality modality = Modality::image;
    std::string dataset_id;
    bool normalized = false;

    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }
    bool has_labels() const { return labels.has_value(); }

    /// Throws on any violated invariant. Empty sets are allowed only when
    /// allow_empty is set (split outputs).
    void validate(bool allow_empty = false) const;
};

struct ClassPrototypes {
    RowMatrix data;
    std::vector<Label> class_ids;
    std::string source;

    std::size_t size() const { return class_ids.size(); }
};

struct SplitSpec {
    enum class Kind { by_fraction, by_classes };
    Kind kind = Kind::by_fraction;
    double train_fraction = 1.0;
    std::vector<Label> classes;
    std::uint64_t seed = 0;

    static SplitSpec fraction(double f, std::uint64_t seed) { return {Kind::by_fraction, f, {}, seed}; }
    static SplitSpec by_class(std::vector<Label> ids) { return {Kind::by_classes, 1.0, std::move(ids), 0}; }
};

struct Partition {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};

EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, Dtype dtype = Dtype::f64);

/// CSV rows: optional integer label, then coordinates. No header.
EmbeddingSet import_csv(const std::filesystem::path& path, bool first_column_is_label);

EmbeddingSet normalize(const EmbeddingSet& set, double epsilon = 1e-12);

/// True when every row norm is within tol of 1.
bool rows_unit_norm(const RowMatrix& rows, double tol = 1e-9);

ClassPrototypes class_prototypes(const EmbeddingSet& set);
EmbeddingSet prototypes_as_set(const ClassPrototypes& protos);
ClassPrototypes prototypes_from_set(const EmbeddingSet& set);

Partition split_indices(const EmbeddingSet& set, const SplitSpec& spec);
std::pair<EmbeddingSet, EmbeddingSet> split(const EmbeddingSet& set, const SplitSpec& spec);
EmbeddingSet select_rows(const EmbeddingSet& set, const std::vector<std::size_t>& rows);

/// Sorted distinct labels.
std::vector<Label> distinct_labels(const EmbeddingSet& set);

/// Paired sets must agree on row count and on labels when both carry them.
void check_paired(const EmbeddingSet& a, const EmbeddingSet& b);

} // namespace isoalign
