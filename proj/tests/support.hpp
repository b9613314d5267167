#pragma once

#include "isoalign/align.hpp"
#include "isoalign/embstore.hpp"
#include "isoalign/error.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace test {

using namespace isoalign;

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("isoalign_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

inline std::vector<unsigned char> read_bytes(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

inline void write_bytes(const std::string& p, const std::vector<unsigned char>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline RowMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
    RowMatrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

inline RowMatrix random_unit_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    RowMatrix m = linalg::gaussian(n, d, rng);
    m.rowwise().normalize();
    return m;
}

inline EmbeddingSet make_set(RowMatrix data, std::vector<Label> labels = {}, const std::string& model = "m") {
    EmbeddingSet s;
    s.data = std::move(data);
    if (!labels.empty()) s.labels = std::move(labels);
    s.model_id = model;
    s.normalized = rows_unit_norm(s.data);
    return s;
}

inline Matrix rotation2(double degrees) {
    const double t = degrees * M_PI / 180.0;
    Matrix r(2, 2);
    r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return r;
}

template <typename F>
ErrorKind error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an isoalign::Error");
    return ErrorKind::invalid_argument;
}

} // namespace test
