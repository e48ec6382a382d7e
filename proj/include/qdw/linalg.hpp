#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <lapacke.h>

#include "qdw/model.hpp"

namespace qdw::linalg {

/// Real symmetric matrix in either dense (full, column-major) or lower-banded
/// (LAPACK band layout) storage.  The Hermite parity blocks are banded with
/// bandwidth 2 in block-local indexing; Sinc and LMM matrices are dense.
class SymmetricMatrix {
  public:
    enum class Storage { dense, banded };

    static SymmetricMatrix dense(int n) {
        SymmetricMatrix m;
        m.storage_ = Storage::dense;
        m.n_ = n;
        m.kd_ = n - 1;
        m.data_.assign(static_cast<std::size_t>(n) * n, 0.0);
        return m;
    }

    static SymmetricMatrix banded(int n, int bandwidth) {
        SymmetricMatrix m;
        m.storage_ = Storage::banded;
        m.n_ = n;
        m.kd_ = bandwidth;
        m.data_.assign(static_cast<std::size_t>(bandwidth + 1) * n, 0.0);
        return m;
    }

    int dimension() const { return n_; }
    int bandwidth() const { return kd_; }
    Storage storage() const { return storage_; }

    /// Sets A(i,j) = A(j,i) = v.
    void set(int i, int j, double v) {
        if (i < j) std::swap(i, j);
        if (storage_ == Storage::dense) {
            data_[static_cast<std::size_t>(j) * n_ + i] = v;
            data_[static_cast<std::size_t>(i) * n_ + j] = v;
        } else {
            if (i - j > kd_)
                throw std::invalid_argument("SymmetricMatrix: entry (" + std::to_string(i) + "," +
                                            std::to_string(j) + ") outside bandwidth " +
                                            std::to_string(kd_));
            data_[static_cast<std::size_t>(j) * (kd_ + 1) + (i - j)] = v;
        }
    }

    double get(int i, int j) const {
        if (i < j) std::swap(i, j);
        if (storage_ == Storage::dense) return data_[static_cast<std::size_t>(j) * n_ + i];
        if (i - j > kd_) return 0.0;
        return data_[static_cast<std::size_t>(j) * (kd_ + 1) + (i - j)];
    }

    double frobenius_norm() const {
        double sum = 0.0;
        for (int j = 0; j < n_; ++j)
            for (int i = j; i < std::min(n_, j + kd_ + 1); ++i) {
                const double v = get(i, j);
                sum += (i == j ? 1.0 : 2.0) * v * v;
            }
        return std::sqrt(sum);
    }

    /// y = A x.
    void apply(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < n_; ++i) y[i] = 0.0;
        for (int j = 0; j < n_; ++j) {
            const int imax = std::min(n_ - 1, j + kd_);
            y[j] += get(j, j) * x[j];
            for (int i = j + 1; i <= imax; ++i) {
                const double v = get(i, j);
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
    }

    const std::vector<double>& raw() const { return data_; }
    std::vector<double>& raw() { return data_; }

  private:
    Storage storage_ = Storage::dense;
    int n_ = 0;
    int kd_ = 0;
    std::vector<double> data_;
};

/// Lowest eigenpairs, values ascending, eigenvectors orthonormal in the
/// columns of `vectors` (column-major, dimension x count).
struct EigenPairs {
    int dimension = 0;
    int count = 0;
    std::vector<double> values;
    std::vector<double> vectors;

    std::span<const double> vector(int i) const {
        return {vectors.data() + static_cast<std::size_t>(i) * dimension,
                static_cast<std::size_t>(dimension)};
    }
};

/// Lowest `count` eigenpairs of a symmetric matrix.  Dense storage goes
/// through dsyevd, banded through dsbevd (divide and conquer in both cases).
inline EigenPairs eigen_spectrum(const SymmetricMatrix& m, int count) {
    const int n = m.dimension();
    if (count < 1 || count > n)
        throw std::invalid_argument("eigen_spectrum: count must be in [1, " + std::to_string(n) +
                                    "], got " + std::to_string(count));
    EigenPairs out;
    out.dimension = n;
    out.count = count;
    out.values.resize(n);
    int info = 0;
    if (m.storage() == SymmetricMatrix::Storage::dense) {
        std::vector<double> a = m.raw();
        info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, out.values.data());
        if (info == 0) {
            out.vectors.assign(a.begin(), a.begin() + static_cast<std::size_t>(n) * count);
        }
    } else {
        std::vector<double> ab = m.raw();
        std::vector<double> z(static_cast<std::size_t>(n) * n);
        info = LAPACKE_dsbevd(LAPACK_COL_MAJOR, 'V', 'L', n, m.bandwidth(), ab.data(),
                              m.bandwidth() + 1, out.values.data(), z.data(), n);
        if (info == 0) {
            out.vectors.assign(z.begin(), z.begin() + static_cast<std::size_t>(n) * count);
        }
    }
    if (info != 0)
        throw numeric_error("eigen_spectrum: LAPACK divide-and-conquer failed on a " +
                            std::to_string(n) + "x" + std::to_string(n) +
                            (m.storage() == SymmetricMatrix::Storage::dense ? " dense" : " banded") +
                            " matrix (info=" + std::to_string(info) + ")");
    out.values.resize(count);
    return out;
}

/// max_i ||A v_i - e_i v_i||_2 / ||A||_F over the first `howmany` returned pairs.
inline double max_relative_residual(const SymmetricMatrix& m, const EigenPairs& eig, int howmany) {
    const int n = m.dimension();
    const double scale = m.frobenius_norm();
    std::vector<double> y(n);
    double worst = 0.0;
    for (int i = 0; i < std::min(howmany, eig.count); ++i) {
        const auto v = eig.vector(i);
        m.apply(v, y);
        double r2 = 0.0;
        for (int j = 0; j < n; ++j) {
            const double r = y[j] - eig.values[i] * v[j];
            r2 += r * r;
        }
        worst = std::max(worst, std::sqrt(r2) / scale);
    }
    return worst;
}

}  // namespace qdw::linalg
