#include "isoalign/kernels.hpp"

#include "isoalign/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <string>

namespace isoalign::kernels {

void configure_threads_from_env() {
    const char* env = std::getenv("ALIGN_NUM_THREADS");
    if (env == nullptr) return;
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) omp_set_num_threads(static_cast<int>(n));
}

int max_threads() { return omp_get_max_threads(); }

namespace {

inline double dot(const double* a, const double* b, Eigen::Index n) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += a[j] * b[j];
    return s;
}

void check_affine(const RowMatrix& rows, const Matrix& q, const Vector& mu_s, const Vector& mu_t) {
    if (rows.cols() != q.cols() || mu_s.size() != q.cols() || mu_t.size() != q.rows()) {
        throw Error(ErrorKind::dimension, "affine_rows: dimension mismatch");
    }
}

void check_same_dim(const RowMatrix& a, const RowMatrix& b, const char* what) {
    if (a.cols() != b.cols()) throw Error(ErrorKind::dimension, std::string(what) + ": dimension mismatch");
}

// Row-major copy of Q so each output coordinate is a contiguous dot product.
RowMatrix row_major(const Matrix& q) { return q; }

inline void affine_row(const double* z, const RowMatrix& q, const double* mu_s, const double* mu_t, double* centered,
                       double* out) {
    const Eigen::Index d = q.cols();
    for (Eigen::Index j = 0; j < d; ++j) centered[j] = z[j] - mu_s[j];
    for (Eigen::Index k = 0; k < q.rows(); ++k) out[k] = dot(q.row(k).data(), centered, d) + mu_t[k];
}

inline Index argmax_row(const double* query, const RowMatrix& gallery, Index skip) {
    Index best = gallery.rows();
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < gallery.rows(); ++j) {
        if (static_cast<Index>(j) == skip) continue;
        double s = dot(query, gallery.row(j).data(), gallery.cols());
        if (best == static_cast<Index>(gallery.rows()) || s > best_score) {
            best = j;
            best_score = s;
        }
    }
    return best;
}

std::vector<Index> top_k_row(const double* query, const RowMatrix& gallery, std::size_t k, std::vector<double>& scores,
                             std::vector<Index>& order) {
    const auto m = static_cast<std::size_t>(gallery.rows());
    scores.resize(m);
    order.resize(m);
    for (std::size_t j = 0; j < m; ++j) scores[j] = dot(query, gallery.row(j).data(), gallery.cols());
    std::iota(order.begin(), order.end(), Index{0});
    const std::size_t kk = std::min(k, m);
    std::partial_sort(order.begin(), order.begin() + kk, order.end(), [&](Index a, Index b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return {order.begin(), order.begin() + kk};
}

constexpr Index kNoSkip = static_cast<Index>(-1);

} // namespace

namespace serial {

RowMatrix affine_rows(const RowMatrix& rows, const Matrix& q, const Vector& mu_source, const Vector& mu_target) {
    check_affine(rows, q, mu_source, mu_target);
    const RowMatrix qr = row_major(q);
    RowMatrix out(rows.rows(), q.rows());
    std::vector<double> centered(q.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        affine_row(rows.row(i).data(), qr, mu_source.data(), mu_target.data(), centered.data(), out.row(i).data());
    }
    return out;
}

std::vector<Index> nearest(const RowMatrix& queries, const RowMatrix& gallery, bool skip_same_index) {
    check_same_dim(queries, gallery, "nearest");
    std::vector<Index> out(queries.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        out[i] = argmax_row(queries.row(i).data(), gallery, skip_same_index ? static_cast<Index>(i) : kNoSkip);
    }
    return out;
}

std::vector<std::vector<Index>> top_k(const RowMatrix& queries, const RowMatrix& gallery, std::size_t k) {
    check_same_dim(queries, gallery, "top_k");
    std::vector<std::vector<Index>> out(queries.rows());
    std::vector<double> scores;
    std::vector<Index> order;
    for (Eigen::Index i = 0; i < queries.rows(); ++i) out[i] = top_k_row(queries.row(i).data(), gallery, k, scores, order);
    return out;
}

Vector row_dots(const RowMatrix& a, const RowMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::dimension, "row_dots: shape mismatch");
    Vector out(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i).data(), b.row(i).data(), a.cols());
    return out;
}

RowMatrix cross_gram(const RowMatrix& a, const RowMatrix& b) {
    check_same_dim(a, b, "cross_gram");
    RowMatrix out(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i).data(), b.row(j).data(), a.cols());
    return out;
}

} // namespace serial

namespace parallel {

RowMatrix affine_rows(const RowMatrix& rows, const Matrix& q, const Vector& mu_source, const Vector& mu_target) {
    check_affine(rows, q, mu_source, mu_target);
    const RowMatrix qr = row_major(q);
    RowMatrix out(rows.rows(), q.rows());
    const Eigen::Index n = rows.rows();
#pragma omp parallel
    {
        std::vector<double> centered(q.cols());
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) {
            affine_row(rows.row(i).data(), qr, mu_source.data(), mu_target.data(), centered.data(), out.row(i).data());
        }
    }
    return out;
}

std::vector<Index> nearest(const RowMatrix& queries, const RowMatrix& gallery, bool skip_same_index) {
    check_same_dim(queries, gallery, "nearest");
    std::vector<Index> out(queries.rows());
    const Eigen::Index n = queries.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        out[i] = argmax_row(queries.row(i).data(), gallery, skip_same_index ? static_cast<Index>(i) : kNoSkip);
    }
    return out;
}

std::vector<std::vector<Index>> top_k(const RowMatrix& queries, const RowMatrix& gallery, std::size_t k) {
    check_same_dim(queries, gallery, "top_k");
    std::vector<std::vector<Index>> out(queries.rows());
    const Eigen::Index n = queries.rows();
#pragma omp parallel
    {
        std::vector<double> scores;
        std::vector<Index> order;
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) out[i] = top_k_row(queries.row(i).data(), gallery, k, scores, order);
    }
    return out;
}

Vector row_dots(const RowMatrix& a, const RowMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::dimension, "row_dots: shape mismatch");
    Vector out(a.rows());
    const Eigen::Index n = a.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) out[i] = dot(a.row(i).data(), b.row(i).data(), a.cols());
    return out;
}

RowMatrix cross_gram(const RowMatrix& a, const RowMatrix& b) {
    check_same_dim(a, b, "cross_gram");
    RowMatrix out(a.rows(), b.rows());
    const Eigen::Index n = a.rows();
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i).data(), b.row(j).data(), a.cols());
    return out;
}

} // namespace parallel

} // namespace isoalign::kernels
