#pragma once

// Row-wise compute kernels used by alignment and evaluation.
//
// Every kernel has a serial reference in `serial::` and an OpenMP version in
// `parallel::`. Both evaluate each output element with the same sequential
// inner loop, so their results are bitwise identical for any thread count.

#include "isoalign/linalg.hpp"

#include <cstddef>
#include <vector>

namespace isoalign::kernels {

using Index = std::size_t;

/// Applies ALIGN_NUM_THREADS (if set and positive) as the OpenMP thread cap.
void configure_threads_from_env();
int max_threads();

namespace serial {

/// out_i = Q (z_i − mu_s) + mu_t for every row z_i.
RowMatrix affine_rows(const RowMatrix& rows, const Matrix& q, const Vector& mu_source, const Vector& mu_target);

/// For each query row, index of the gallery row with the largest inner product.
/// Ties go to the lowest gallery index. With skip_same_index, gallery row i is
/// not a candidate for query i.
std::vector<Index> nearest(const RowMatrix& queries, const RowMatrix& gallery, bool skip_same_index = false);

/// For each query, the k gallery indices with the largest inner products,
/// ordered by score descending then index ascending.
std::vector<std::vector<Index>> top_k(const RowMatrix& queries, const RowMatrix& gallery, std::size_t k);

/// ⟨a_i, b_i⟩ for paired rows.
Vector row_dots(const RowMatrix& a, const RowMatrix& b);

/// values(i, j) = ⟨a_i, b_j⟩.
RowMatrix cross_gram(const RowMatrix& a, const RowMatrix& b);

} // namespace serial

namespace parallel {

RowMatrix affine_rows(const RowMatrix& rows, const Matrix& q, const Vector& mu_source, const Vector& mu_target);
std::vector<Index> nearest(const RowMatrix& queries, const RowMatrix& gallery, bool skip_same_index = false);
std::vector<std::vector<Index>> top_k(const RowMatrix& queries, const RowMatrix& gallery, std::size_t k);
Vector row_dots(const RowMatrix& a, const RowMatrix& b);
RowMatrix cross_gram(const RowMatrix& a, const RowMatrix& b);

} // namespace parallel

} // namespace isoalign::kernels
