#include "isoalign/align.hpp"

#include "binary_io.hpp"
#include "isoalign/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace isoalign {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kFlagMeans = 0x1;

double read_finite(detail::ByteReader& r, const char* what) {
    const std::size_t at = r.offset();
    double v = r.get<double>(what);
    if (!std::isfinite(v)) throw FormatError(std::string("non-finite value in ") + what, at);
    return v;
}

} // namespace

void save_map(const AlignmentMap& map, const std::filesystem::path& path) {
    map.validate();
    detail::ByteWriter w;
    w.bytes(kMagic, 4);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(map.q.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(map.q.cols()));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(map.kind));
    w.put<std::uint8_t>(map.has_means() ? kFlagMeans : 0);
    w.put<std::uint16_t>(0);
    for (Eigen::Index i = 0; i < map.q.rows(); ++i)
        for (Eigen::Index j = 0; j < map.q.cols(); ++j) w.put<double>(map.q(i, j));
    if (map.has_means()) {
        for (Eigen::Index i = 0; i < map.mu_source->size(); ++i) w.put<double>((*map.mu_source)[i]);
        for (Eigen::Index i = 0; i < map.mu_target->size(); ++i) w.put<double>((*map.mu_target)[i]);
    }
    w.write_file(path);

    json side;
    side["fit_modality"] = to_string(map.fit_modality);
    side["source_model"] = map.source_model;
    side["target_model"] = map.target_model;
    side["kind"] = to_string(map.kind);
    side["stats"] = {{"residual", map.stats.residual}, {"sigma_min", map.stats.sigma_min}, {"n", map.stats.n}};
    std::ofstream out(detail::sidecar_path(path), std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write sidecar for " + path.string());
    out << side.dump(2) << "\n";
}

AlignmentMap load_map(const std::filesystem::path& path) {
    auto r = detail::ByteReader::from_file(path);
    char magic[4];
    for (char& c : magic) c = r.get<char>("magic");
    if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) throw FormatError("bad magic, expected MAP1", 0);
    const std::size_t version_at = r.offset();
    auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) throw UnsupportedVersionError(version, version_at);
    const std::size_t dims_at = r.offset();
    auto dt = r.get<std::uint32_t>("d_tilde");
    auto d = r.get<std::uint32_t>("d");
    const std::size_t kind_at = r.offset();
    auto kind = r.get<std::uint8_t>("kind");
    const std::size_t flags_at = r.offset();
    auto flags = r.get<std::uint8_t>("flags");
    const std::size_t reserved_at = r.offset();
    auto reserved = r.get<std::uint16_t>("reserved");
    if (dt == 0 || d == 0) throw FormatError("dimensions must be positive", dims_at);
    if (kind > 1) throw FormatError("unknown map kind " + std::to_string(kind), kind_at);
    if (flags & ~kFlagMeans) throw FormatError("unknown flag bits", flags_at);
    if (reserved != 0) throw FormatError("reserved field must be zero", reserved_at);

    AlignmentMap m;
    m.kind = static_cast<MapKind>(kind);
    const std::size_t q_at = r.offset();
    r.need(std::size_t{dt} * d * 8, "Q");
    m.q.resize(dt, d);
    for (Eigen::Index i = 0; i < m.q.rows(); ++i)
        for (Eigen::Index j = 0; j < m.q.cols(); ++j) m.q(i, j) = read_finite(r, "Q");
    if (flags & kFlagMeans) {
        r.need((std::size_t{d} + dt) * 8, "means");
        Vector ms(d), mt(dt);
        for (Eigen::Index i = 0; i < ms.size(); ++i) ms[i] = read_finite(r, "mu_source");
        for (Eigen::Index i = 0; i < mt.size(); ++i) mt[i] = read_finite(r, "mu_target");
        m.mu_source = std::move(ms);
        m.mu_target = std::move(mt);
    }
    r.expect_end();
    try {
        m.validate();
    } catch (const Error& e) {
        throw FormatError(std::string("invalid map payload: ") + e.what(), q_at);
    }

    auto side = detail::sidecar_path(path);
    if (std::filesystem::exists(side)) {
        try {
            std::ifstream in(side);
            json j;
            in >> j;
            if (j.contains("fit_modality")) m.fit_modality = fit_modality_from_string(j.at("fit_modality").get<std::string>());
            if (j.contains("source_model")) m.source_model = j.at("source_model").get<std::string>();
            if (j.contains("target_model")) m.target_model = j.at("target_model").get<std::string>();
            if (j.contains("stats")) {
                const auto& s = j.at("stats");
                m.stats.residual = s.value("residual", 0.0);
                m.stats.sigma_min = s.value("sigma_min", 0.0);
                m.stats.n = s.value("n", std::size_t{0});
            }
        } catch (const json::exception& e) {
            throw FormatError("map sidecar " + side.string() + ": " + e.what(), 0);
        } catch (const Error& e) {
            throw FormatError("map sidecar " + side.string() + ": " + e.what(), 0);
        }
    }
    return m;
}

} // namespace isoalign
