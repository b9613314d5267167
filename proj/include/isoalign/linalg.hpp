#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace isoalign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Embedding rows are stored row-major so each sample is contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

namespace linalg {

Vector singular_values(const Matrix& m);
double sigma_min(const Matrix& m);
double spectral_norm(const Matrix& m);

/// Orthogonal polar factor U·I·Vᵀ of a tall (rows >= cols) matrix.
Matrix polar_factor(const Matrix& m);

/// Orthonormal basis of the column space of a full-column-rank matrix.
Matrix orthonormal_columns(const Matrix& m);

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Vector random_unit(Eigen::Index dim, Rng& rng);

/// Mean of the rows, accumulated in index order.
Vector row_mean(const RowMatrix& rows);

/// Frobenius deviation ‖QᵀQ − I‖_F.
double orthogonality_defect(const Matrix& q);

bool all_finite(const RowMatrix& m);

/// Independent seed for sub-stream `stream` of `seed` (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace linalg
} // namespace isoalign
