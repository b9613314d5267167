#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace isoalign {

enum class ErrorKind {
    format,          // malformed file payload or header
    structural,      // well-formed bytes, inconsistent content (labels vs rows, ...)
    degenerate,      // near-zero rows or means that cannot be normalized
    dimension,       // shape mismatch between operands
    ill_conditioned, // singular or rank-deficient linear system
    not_invertible,  // map has no two-sided inverse
    invalid_argument,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(ErrorKind::format, what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnsupportedVersionError : public FormatError {
public:
    UnsupportedVersionError(std::uint32_t version, std::size_t offset)
        : FormatError("unsupported version " + std::to_string(version), offset), version_(version) {}
    std::uint32_t version() const noexcept { return version_; }

private:
    std::uint32_t version_;
};

class DegenerateRowError : public Error {
public:
    explicit DegenerateRowError(std::vector<std::size_t> rows);
    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

private:
    std::vector<std::size_t> rows_;
};

class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, double sigma_min)
        : Error(ErrorKind::ill_conditioned, what + " (sigma_min = " + std::to_string(sigma_min) + ")"),
          sigma_min_(sigma_min) {}
    double sigma_min() const noexcept { return sigma_min_; }

private:
    double sigma_min_;
};

inline DegenerateRowError::DegenerateRowError(std::vector<std::size_t> rows)
    : Error(ErrorKind::degenerate,
            [&] {
                std::string msg = "degenerate rows (norm below epsilon):";
                std::size_t shown = 0;
                for (auto r : rows) {
                    if (shown++ == 16) {
                        msg += " ...";
                        break;
                    }
                    msg += " " + std::to_string(r);
                }
                return msg;
            }()),
      rows_(std::move(rows)) {}

} // namespace isoalign
