#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace xlmimo {

template <typename Real>
using CVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using CMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrixT = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using cdouble = std::complex<double>;
using CVector = CVectorT<double>;
using CMatrix = CMatrixT<double>;
using RVector = RVectorT<double>;
using RMatrix = RMatrixT<double>;
using Point3 = Eigen::Vector3d;

/// Dense row-major K x L table of per-link values (UE k, subarray l).
template <typename T>
class LinkGrid {
public:
    LinkGrid() = default;
    LinkGrid(int num_ues, int num_subarrays, const T& init = T{})
        : ues_(num_ues), subarrays_(num_subarrays),
          data_(static_cast<std::size_t>(num_ues) * static_cast<std::size_t>(num_subarrays), init) {}

    int num_ues() const { return ues_; }
    int num_subarrays() const { return subarrays_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(int k, int l) { return data_[index(k, l)]; }
    const T& operator()(int k, int l) const { return data_[index(k, l)]; }

    std::size_t index(int k, int l) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(subarrays_) +
               static_cast<std::size_t>(l);
    }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

private:
    int ues_ = 0;
    int subarrays_ = 0;
    std::vector<T> data_;
};

} // namespace xlmimo
