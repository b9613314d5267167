#include "isoalign/embstore.hpp"

#include "binary_io.hpp"
#include "isoalign/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace isoalign {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kFlagLabels = 0x1;

json sidecar_json(const EmbeddingSet& set) {
    json j;
    j["model_id"] = set.model_id;
    j["modality"] = to_string(set.modality);
    j["dataset_id"] = set.dataset_id;
    if (set.class_names) {
        json names = json::object();
        for (const auto& [id, name] : *set.class_names) names[std::to_string(id)] = name;
        j["class_names"] = names;
    }
    return j;
}

void merge_sidecar(EmbeddingSet& set, const std::filesystem::path& path) {
    auto side = detail::sidecar_path(path);
    if (!std::filesystem::exists(side)) return;
    std::ifstream in(side);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("sidecar " + side.string() + " does not parse: " + e.what(), 0);
    }
    if (!j.is_object()) throw FormatError("sidecar " + side.string() + " is not a JSON object", 0);
    try {
        if (j.contains("model_id")) set.model_id = j.at("model_id").get<std::string>();
        if (j.contains("dataset_id")) set.dataset_id = j.at("dataset_id").get<std::string>();
        if (j.contains("modality")) set.modality = modality_from_string(j.at("modality").get<std::string>());
        if (j.contains("class_names")) {
            std::map<Label, std::string> names;
            for (const auto& [key, value] : j.at("class_names").items()) {
                names[static_cast<Label>(std::stoul(key))] = value.get<std::string>();
            }
            set.class_names = std::move(names);
        }
    } catch (const json::exception& e) {
        throw FormatError("sidecar " + side.string() + ": " + e.what(), 0);
    } catch (const std::logic_error& e) {
        throw FormatError("sidecar " + side.string() + ": bad class id key", 0);
    }
}

} // namespace

std::string to_string(Modality m) { return m == Modality::image ? "image" : "text"; }

Modality modality_from_string(const std::string& s) {
    if (s == "image") return Modality::image;
    if (s == "text") return Modality::text;
    throw Error(ErrorKind::invalid_argument, "unknown modality '" + s + "'");
}

void EmbeddingSet::validate(bool allow_empty) const {
    if (data.cols() < 1) throw Error(ErrorKind::structural, "embedding dimension must be >= 1");
    if (!allow_empty && data.rows() < 1) throw Error(ErrorKind::structural, "embedding set is empty");
    if (!data.allFinite()) throw Error(ErrorKind::structural, "embedding set has non-finite entries");
    if (labels) {
        if (labels->size() != rows()) {
            throw Error(ErrorKind::structural, "label count " + std::to_string(labels->size()) + " != row count " +
                                                   std::to_string(rows()));
        }
        if (class_names) {
            for (auto l : *labels) {
                if (!class_names->count(l)) {
                    throw Error(ErrorKind::structural, "label " + std::to_string(l) + " has no class name");
                }
            }
        }
    }
    if (normalized && !rows_unit_norm(data, 1e-9)) {
        throw Error(ErrorKind::structural, "set flagged normalized but a row norm deviates from 1");
    }
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    auto r = detail::ByteReader::from_file(path);
    char magic[4];
    for (char& c : magic) c = r.get<char>("magic");
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) throw FormatError("bad magic, expected EMB1", 0);
    const std::size_t version_at = r.offset();
    auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) throw UnsupportedVersionError(version, version_at);
    auto n = r.get<std::uint32_t>("n");
    auto d = r.get<std::uint32_t>("d");
    const std::size_t dtype_at = r.offset();
    auto dtype = r.get<std::uint8_t>("dtype");
    const std::size_t flags_at = r.offset();
    auto flags = r.get<std::uint8_t>("flags");
    const std::size_t reserved_at = r.offset();
    auto reserved = r.get<std::uint16_t>("reserved");
    if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype), dtype_at);
    if (flags & ~kFlagLabels) throw FormatError("unknown flag bits", flags_at);
    if (reserved != 0) throw FormatError("reserved field must be zero", reserved_at);
    if (n == 0 || d == 0) throw FormatError("n and d must be positive", dtype_at - 8);

    const std::size_t width = dtype == 0 ? 4 : 8;
    const std::size_t count = std::size_t{n} * d;
    r.need(count * width, "data");
    EmbeddingSet set;
    set.data.resize(n, d);
    double* out = set.data.data();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        double v = dtype == 0 ? static_cast<double>(r.get<float>("data")) : r.get<double>("data");
        if (!std::isfinite(v)) throw FormatError("non-finite value", at);
        out[i] = v;
    }
    if (flags & kFlagLabels) {
        r.need(std::size_t{n} * 4, "labels");
        std::vector<Label> labels(n);
        for (auto& l : labels) l = r.get<std::uint32_t>("labels");
        set.labels = std::move(labels);
    }
    r.expect_end();
    merge_sidecar(set, path);
    set.validate();
    return set;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, Dtype dtype) {
    set.validate();
    if (set.rows() > UINT32_MAX || set.dim() > UINT32_MAX) throw Error(ErrorKind::invalid_argument, "set too large for EMB1");
    detail::ByteWriter w;
    w.bytes(kMagic, 4);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(set.dim()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(dtype));
    w.put<std::uint8_t>(set.labels ? kFlagLabels : 0);
    w.put<std::uint16_t>(0);
    const double* p = set.data.data();
    for (Eigen::Index i = 0; i < set.data.size(); ++i) {
        if (dtype == Dtype::f32)
            w.put<float>(static_cast<float>(p[i]));
        else
            w.put<double>(p[i]);
    }
    if (set.labels)
        for (auto l : *set.labels) w.put<std::uint32_t>(l);
    w.write_file(path);

    std::ofstream side(detail::sidecar_path(path), std::ios::trunc);
    if (!side) throw Error(ErrorKind::io, "cannot write sidecar for " + path.string());
    side << sidecar_json(set).dump(2) << "\n";
}

EmbeddingSet import_csv(const std::filesystem::path& path, bool first_column_is_label) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open: " + path.string());
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t line_at = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                if (first && first_column_is_label) {
                    long long v = std::stoll(cell, &used);
                    if (v < 0 || v > UINT32_MAX) throw std::out_of_range("label");
                    labels.push_back(static_cast<Label>(v));
                } else {
                    row.push_back(std::stod(cell, &used));
                }
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("junk");
            } catch (const std::logic_error&) {
                throw FormatError("bad CSV cell '" + cell + "'", line_at);
            }
            first = false;
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw FormatError("ragged CSV row", line_at);
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) throw FormatError("CSV has no coordinates", 0);
    EmbeddingSet set;
    set.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) set.data(i, j) = rows[i][j];
    if (first_column_is_label) set.labels = std::move(labels);
    set.validate();
    return set;
}

EmbeddingSet normalize(const EmbeddingSet& set, double epsilon) {
    if (!(epsilon > 0)) throw Error(ErrorKind::invalid_argument, "normalize: epsilon must be positive");
    EmbeddingSet out = set;
    std::vector<std::size_t> bad;
    for (Eigen::Index i = 0; i < out.data.rows(); ++i) {
        double n = out.data.row(i).norm();
        if (!(n > epsilon)) {
            bad.push_back(static_cast<std::size_t>(i));
            continue;
        }
        out.data.row(i) /= n;
    }
    if (!bad.empty()) throw DegenerateRowError(std::move(bad));
    out.normalized = true;
    return out;
}

bool rows_unit_norm(const RowMatrix& rows, double tol) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        if (std::abs(rows.row(i).norm() - 1.0) > tol) return false;
    return true;
}

std::vector<Label> distinct_labels(const EmbeddingSet& set) {
    if (!set.labels) throw Error(ErrorKind::structural, "set has no labels");
    std::set<Label> s(set.labels->begin(), set.labels->end());
    return {s.begin(), s.end()};
}

ClassPrototypes class_prototypes(const EmbeddingSet& set) {
    if (!set.labels) throw Error(ErrorKind::structural, "class_prototypes: set has no labels");
    auto ids = distinct_labels(set);
    ClassPrototypes out;
    out.data = RowMatrix::Zero(static_cast<Eigen::Index>(ids.size()), set.data.cols());
    out.class_ids = ids;
    out.source = set.model_id.empty() ? "prototypes" : set.model_id;
    std::map<Label, Eigen::Index> slot;
    for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = static_cast<Eigen::Index>(k);
    std::vector<std::size_t> counts(ids.size(), 0);
    for (std::size_t i = 0; i < set.rows(); ++i) {
        auto k = slot[(*set.labels)[i]];
        out.data.row(k) += set.data.row(static_cast<Eigen::Index>(i));
        ++counts[k];
    }
    std::vector<std::size_t> bad;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out.data.row(k) /= static_cast<double>(counts[k]);
        double n = out.data.row(k).norm();
        if (!(n > 1e-12)) {
            bad.push_back(ids[k]);
            continue;
        }
        out.data.row(k) /= n;
    }
    if (!bad.empty()) {
        std::string msg = "class mean has near-zero norm for class";
        for (auto b : bad) msg += " " + std::to_string(b);
        throw Error(ErrorKind::degenerate, msg);
    }
    return out;
}

EmbeddingSet prototypes_as_set(const ClassPrototypes& protos) {
    EmbeddingSet s;
    s.data = protos.data;
    s.labels = protos.class_ids;
    s.model_id = protos.source;
    s.modality = Modality::text;
    s.normalized = true;
    return s;
}

ClassPrototypes prototypes_from_set(const EmbeddingSet& set) {
    if (!set.labels) throw Error(ErrorKind::structural, "prototype file needs class ids as labels");
    std::set<Label> seen(set.labels->begin(), set.labels->end());
    if (seen.size() != set.labels->size()) {
        // Several prompts per class: reduce them to prototypes.
        return class_prototypes(set);
    }
    ClassPrototypes p;
    p.data = set.data;
    p.class_ids = *set.labels;
    p.source = set.model_id;
    for (Eigen::Index i = 0; i < p.data.rows(); ++i) {
        double n = p.data.row(i).norm();
        if (!(n > 1e-12)) throw DegenerateRowError({static_cast<std::size_t>(i)});
        p.data.row(i) /= n;
    }
    return p;
}

Partition split_indices(const EmbeddingSet& set, const SplitSpec& spec) {
    Partition part;
    const std::size_t n = set.rows();
    if (spec.kind == SplitSpec::Kind::by_fraction) {
        if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
            throw Error(ErrorKind::invalid_argument, "split fraction must lie in (0, 1]");
        }
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(spec.seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto cut = static_cast<std::size_t>(std::ceil(spec.train_fraction * static_cast<double>(n)));
        part.first.assign(idx.begin(), idx.begin() + std::min(cut, n));
        part.second.assign(idx.begin() + std::min(cut, n), idx.end());
        std::sort(part.first.begin(), part.first.end());
        std::sort(part.second.begin(), part.second.end());
        return part;
    }
    if (spec.classes.empty()) throw Error(ErrorKind::invalid_argument, "class split needs a non-empty class list");
    if (!set.labels) throw Error(ErrorKind::structural, "class split needs labels");
    std::set<Label> chosen(spec.classes.begin(), spec.classes.end());
    std::set<Label> present(set.labels->begin(), set.labels->end());
    for (auto c : chosen) {
        if (!present.count(c)) throw Error(ErrorKind::invalid_argument, "class " + std::to_string(c) + " not in labels");
    }
    for (std::size_t i = 0; i < n; ++i) ((chosen.count((*set.labels)[i])) ? part.first : part.second).push_back(i);
    return part;
}

EmbeddingSet select_rows(const EmbeddingSet& set, const std::vector<std::size_t>& rows) {
    EmbeddingSet out;
    out.data.resize(static_cast<Eigen::Index>(rows.size()), set.data.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= set.rows()) throw Error(ErrorKind::invalid_argument, "row index out of range");
        out.data.row(static_cast<Eigen::Index>(i)) = set.data.row(static_cast<Eigen::Index>(rows[i]));
    }
    if (set.labels) {
        std::vector<Label> l(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) l[i] = (*set.labels)[rows[i]];
        out.labels = std::move(l);
    }
    out.class_names = set.class_names;
    out.model_id = set.model_id;
    out.modality = set.modality;
    out.dataset_id = set.dataset_id;
    out.normalized = set.normalized;
    return out;
}

std::pair<EmbeddingSet, EmbeddingSet> split(const EmbeddingSet& set, const SplitSpec& spec) {
    auto part = split_indices(set, spec);
    return {select_rows(set, part.first), select_rows(set, part.second)};
}

void check_paired(const EmbeddingSet& a, const EmbeddingSet& b) {
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::dimension,
                    "paired sets differ in row count: " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
    }
    if (a.labels && b.labels && *a.labels != *b.labels) throw Error(ErrorKind::structural, "paired sets disagree on labels");
}

} // namespace isoalign
