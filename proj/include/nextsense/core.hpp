// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared by every module: the resource-grid dimensions, the
// complex IQ tensor, 3-D positions and the exception hierarchy.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nextsense {

using cplx = std::complex<double>;

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an on-disk artifact is missing, truncated or fails its digest.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridDims {
    std::size_t num_subcarriers = 360;
    std::size_t num_symbols = 4;
    std::size_t num_snapshots = 100;
    double subcarrier_spacing_khz = 30.0;

    /// Throws ValidationError if any count is zero or the spacing is not a
    /// supported NR numerology.
    void validate() const;

    double subcarrier_spacing_hz() const { return subcarrier_spacing_khz * 1e3; }

    bool operator==(const GridDims&) const = default;
};

bool is_supported_subcarrier_spacing(double khz);

/// Complex samples indexed (subcarrier k, symbol s, snapshot n).
///
/// Storage is snapshot-major, then symbol, then subcarrier, which is also the
/// order of the on-disk iq.bin payload.
class IQTensor {
public:
    IQTensor() = default;
    IQTensor(std::size_t subcarriers, std::size_t symbols, std::size_t snapshots, cplx fill = {});

    std::size_t subcarriers() const { return k_; }
    std::size_t symbols() const { return s_; }
    std::size_t snapshots() const { return n_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t index(std::size_t k, std::size_t s, std::size_t n) const { return (n * s_ + s) * k_ + k; }

    cplx& operator()(std::size_t k, std::size_t s, std::size_t n) { return data_[index(k, s, n)]; }
    const cplx& operator()(std::size_t k, std::size_t s, std::size_t n) const { return data_[index(k, s, n)]; }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    /// The K*S block belonging to one snapshot.
    std::span<cplx> snapshot(std::size_t n) { return std::span<cplx>(data_).subspan(n * k_ * s_, k_ * s_); }
    std::span<const cplx> snapshot(std::size_t n) const
    {
        return std::span<const cplx>(data_).subspan(n * k_ * s_, k_ * s_);
    }

    bool same_shape(const IQTensor& other) const
    {
        return k_ == other.k_ && s_ == other.s_ && n_ == other.n_;
    }

    std::string shape_string() const;

    bool operator==(const IQTensor&) const = default;

private:
    std::size_t k_ = 0;
    std::size_t s_ = 0;
    std::size_t n_ = 0;
    std::vector<cplx> data_;
};

using Vec3 = std::array<double, 3>;

inline double norm3(const Vec3& v)
{
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

} // namespace nextsense
