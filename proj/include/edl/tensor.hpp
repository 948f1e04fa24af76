/*
 * Copyright 2026 The EDL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <string>

#include "edl/errors.hpp"

namespace edl
{

using Index = Eigen::Index;

template <typename Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct SignalTag
{
};
struct CodeTag
{
};

// A dense H x W x channels tensor. Storage is an (H*W) x channels column-major
// array, so each channel is a contiguous column-major H x W plane and whole
// tensor arithmetic goes through array().
template <typename Scalar, typename Tag>
class Field
{
   public:
    using Storage = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using PlaneMap = Eigen::Map<Plane<Scalar>>;
    using ConstPlaneMap = Eigen::Map<const Plane<Scalar>>;
    using FlatMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
    using ConstFlatMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

    Field() = default;

    Field(Index rows, Index cols, Index channels) : rows_(rows), cols_(cols)
    {
        if (rows < 1 || cols < 1 || channels < 1)
        {
            throw ShapeError("tensor dimensions must be positive, got "
                             + shape_string(rows, cols, channels));
        }
        data_ = Storage::Zero(rows * cols, channels);
    }

    template <typename Derived>
    Field(Index rows, Index cols, const Eigen::ArrayBase<Derived>& data)
        : rows_(rows), cols_(cols), data_(data)
    {
        if (rows < 1 || cols < 1 || data_.cols() < 1 || data_.rows() != rows * cols)
        {
            throw ShapeError("storage does not match " + std::to_string(rows) + "x"
                             + std::to_string(cols) + " planes");
        }
    }

    static Field zeros_like(const Field& other)
    {
        return Field(other.rows(), other.cols(), other.channels());
    }

    static Field constant(Index rows, Index cols, Index channels, Scalar value)
    {
        Field f(rows, cols, channels);
        f.data_.setConstant(value);
        return f;
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    Index channels() const noexcept { return data_.cols(); }
    Index size() const noexcept { return data_.size(); }

    Storage& array() noexcept { return data_; }
    const Storage& array() const noexcept { return data_; }

    PlaneMap plane(Index c) { return PlaneMap(data_.col(c).data(), rows_, cols_); }
    ConstPlaneMap plane(Index c) const
    {
        return ConstPlaneMap(data_.col(c).data(), rows_, cols_);
    }

    FlatMap flat() { return FlatMap(data_.data(), data_.size()); }
    ConstFlatMap flat() const { return ConstFlatMap(data_.data(), data_.size()); }

    Scalar& operator()(Index i, Index j, Index c) { return data_(i + j * rows_, c); }
    Scalar operator()(Index i, Index j, Index c) const { return data_(i + j * rows_, c); }

    bool same_shape(const Field& other) const noexcept
    {
        return rows_ == other.rows_ && cols_ == other.cols_ && channels() == other.channels();
    }

    bool all_finite() const { return data_.allFinite(); }

    std::string shape() const { return shape_string(rows_, cols_, channels()); }

   private:
    static std::string shape_string(Index r, Index c, Index ch)
    {
        return "(" + std::to_string(r) + ", " + std::to_string(c) + ", " + std::to_string(ch)
               + ")";
    }

    Index rows_ = 0;
    Index cols_ = 0;
    Storage data_;
};

/// Input-side tensor (H x W x C).
template <typename Scalar>
using Signal = Field<Scalar, SignalTag>;

/// Sparse code tensor (H x W x D).
template <typename Scalar>
using Code = Field<Scalar, CodeTag>;

/// Reinterprets a tensor's storage under a different tag (same H, W, channels).
template <typename ToTag, typename Scalar, typename FromTag>
Field<Scalar, ToTag> retag(const Field<Scalar, FromTag>& f)
{
    return Field<Scalar, ToTag>(f.rows(), f.cols(), f.array());
}

template <typename Scalar, typename Tag>
Scalar dot(const Field<Scalar, Tag>& a, const Field<Scalar, Tag>& b)
{
    if (!a.same_shape(b))
    {
        throw ShapeError("dot: shape mismatch " + a.shape() + " vs " + b.shape());
    }
    return (a.array() * b.array()).sum();
}

template <typename Scalar, typename Tag>
Scalar l1_norm(const Field<Scalar, Tag>& f)
{
    return f.array().abs().sum();
}

template <typename Scalar, typename Tag>
Scalar squared_norm(const Field<Scalar, Tag>& f)
{
    return f.array().square().sum();
}

/// Fraction of entries that are exactly nonzero.
template <typename Scalar, typename Tag>
Scalar density(const Field<Scalar, Tag>& f)
{
    return static_cast<Scalar>((f.array() != Scalar(0)).count())
           / static_cast<Scalar>(f.size());
}

/// Convolution kernel bank with D output channels, C input channels and odd
/// k x k atoms. Kernel offsets p, q run over [-k0, k0]; atom(d, c)(p + k0, q + k0)
/// holds alpha_dc[p, q].
template <typename Scalar>
class Dictionary
{
   public:
    using Coeffs = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using AtomMap = Eigen::Map<Plane<Scalar>>;
    using ConstAtomMap = Eigen::Map<const Plane<Scalar>>;

    Dictionary() = default;

    Dictionary(Index out_channels, Index in_channels, Index kernel_size)
        : out_(out_channels), in_(in_channels), k_(kernel_size)
    {
        if (out_channels < 1 || in_channels < 1)
        {
            throw ShapeError("dictionary channel counts must be positive");
        }
        if (kernel_size < 1 || kernel_size % 2 == 0)
        {
            throw InvalidArgument("kernel size must be odd and positive, got "
                                  + std::to_string(kernel_size));
        }
        coeffs_ = Coeffs::Zero(out_ * in_ * k_ * k_);
    }

    static Dictionary zeros_like(const Dictionary& other)
    {
        return Dictionary(other.out_channels(), other.in_channels(), other.kernel_size());
    }

    Index out_channels() const noexcept { return out_; }
    Index in_channels() const noexcept { return in_; }
    Index kernel_size() const noexcept { return k_; }
    Index radius() const noexcept { return k_ / 2; }

    AtomMap atom(Index d, Index c) { return AtomMap(coeffs_.data() + offset(d, c), k_, k_); }
    ConstAtomMap atom(Index d, Index c) const
    {
        return ConstAtomMap(coeffs_.data() + offset(d, c), k_, k_);
    }

    /// Kernel value at centered offsets (p, q).
    Scalar at(Index d, Index c, Index p, Index q) const
    {
        return atom(d, c)(p + radius(), q + radius());
    }

    Coeffs& coeffs() noexcept { return coeffs_; }
    const Coeffs& coeffs() const noexcept { return coeffs_; }

    bool same_shape(const Dictionary& other) const noexcept
    {
        return out_ == other.out_ && in_ == other.in_ && k_ == other.k_;
    }

    bool all_finite() const { return coeffs_.allFinite(); }

   private:
    Index offset(Index d, Index c) const { return (d * in_ + c) * k_ * k_; }

    Index out_ = 0;
    Index in_ = 0;
    Index k_ = 0;
    Coeffs coeffs_;
};

/// Scales every output-channel block {alpha_d1, ..., alpha_dC} to unit
/// Frobenius norm. All-zero blocks are left untouched.
template <typename Scalar>
void normalize_atoms(Dictionary<Scalar>& dict)
{
    const Index block = dict.in_channels() * dict.kernel_size() * dict.kernel_size();
    for (Index d = 0; d < dict.out_channels(); ++d)
    {
        auto seg = dict.coeffs().segment(d * block, block);
        const Scalar norm = seg.norm();
        if (norm > Scalar(0))
        {
            seg /= norm;
        }
    }
}

template <typename Scalar, typename Tag, typename Rng>
void fill_normal(Field<Scalar, Tag>& f, Rng& rng, Scalar mean = 0, Scalar stddev = 1)
{
    std::normal_distribution<Scalar> dist(mean, stddev);
    for (Index n = 0; n < f.size(); ++n)
    {
        f.array().data()[n] = dist(rng);
    }
}

template <typename Scalar, typename Tag, typename Rng>
void fill_uniform(Field<Scalar, Tag>& f, Rng& rng, Scalar lo = 0, Scalar hi = 1)
{
    std::uniform_real_distribution<Scalar> dist(lo, hi);
    for (Index n = 0; n < f.size(); ++n)
    {
        f.array().data()[n] = dist(rng);
    }
}

/// Seeded Gaussian dictionary with unit-norm output-channel blocks.
template <typename Scalar, typename Rng>
Dictionary<Scalar> random_dictionary(Index out_channels, Index in_channels, Index kernel_size,
                                     Rng& rng)
{
    Dictionary<Scalar> dict(out_channels, in_channels, kernel_size);
    std::normal_distribution<Scalar> dist(0, 1);
    for (Index n = 0; n < dict.coeffs().size(); ++n)
    {
        dict.coeffs()[n] = dist(rng);
    }
    normalize_atoms(dict);
    return dict;
}

}  // namespace edl
