#pragma once

// Little-endian byte buffers shared by the EMB1 and MAP1 codecs.

#include "isoalign/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

namespace isoalign::detail {

static_assert(std::endian::native == std::endian::little, "EMB1/MAP1 codecs assume a little-endian host");

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        auto c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes(&v, sizeof(T));
    }
    const std::vector<unsigned char>& buffer() const { return buf_; }

    void write_file(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot open for writing: " + path.string());
        out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
    }

private:
    std::vector<unsigned char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}

    static ByteReader from_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorKind::io, "cannot open: " + path.string());
        std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return ByteReader(std::move(buf));
    }

    template <typename T>
    T get(const char* what) {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void need(std::size_t n, const char* what) const {
        if (buf_.size() - pos_ < n) throw FormatError(std::string("truncated payload reading ") + what, pos_);
    }

    void expect_end() const {
        if (pos_ != buf_.size()) throw FormatError("trailing bytes after payload", pos_);
    }

    std::size_t offset() const { return pos_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) {
    auto s = p;
    s += ".json";
    return s;
}

} // namespace isoalign::detail
