#include "isoalign/linalg.hpp"

#include "isoalign/error.hpp"

namespace isoalign::linalg {

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) return Vector();
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues();
}

double sigma_min(const Matrix& m) {
    auto s = singular_values(m);
    return s.size() == 0 ? 0.0 : s.minCoeff();
}

double spectral_norm(const Matrix& m) {
    auto s = singular_values(m);
    return s.size() == 0 ? 0.0 : s.maxCoeff();
}

Matrix polar_factor(const Matrix& m) {
    if (m.rows() < m.cols()) {
        throw Error(ErrorKind::dimension, "polar factor needs rows >= cols");
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
}

Matrix orthonormal_columns(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    // Fix signs so the basis is a deterministic function of m.
    Matrix r = qr.matrixQR().topLeftCorner(m.cols(), m.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    return q;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
    return out;
}

Vector random_unit(Eigen::Index dim, Rng& rng) {
    for (;;) {
        Vector v = gaussian(dim, 1, rng);
        double n = v.norm();
        if (n > 1e-8) return v / n;
    }
}

Vector row_mean(const RowMatrix& rows) {
    Vector mean = Vector::Zero(rows.cols());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) mean += rows.row(i).transpose();
    if (rows.rows() > 0) mean /= static_cast<double>(rows.rows());
    return mean;
}

double orthogonality_defect(const Matrix& q) {
    return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

bool all_finite(const RowMatrix& m) { return m.allFinite(); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace isoalign::linalg
