// SPDX-License-Identifier: Apache-2.0
//
// Discrete Fourier transform pair used by the estimation and validation code.
//
// Convention: the forward DFT is unscaled,
//     V(k) = sum_l v(l) exp(-j 2 pi k l / K),
// and the inverse carries the 1/K factor,
//     v(l) = (1/K) sum_k V(k) exp(+j 2 pi k l / K),
// so dft(idft(v)) == v up to rounding.

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "nextsense/core.hpp"

namespace nextsense::dft {

enum class Direction { forward, inverse };

/// A reusable transform of one fixed length. Executing is thread-safe for
/// distinct plan objects; creating and destroying plans is serialized
/// internally.
class Plan {
public:
    Plan(std::size_t length, Direction direction);
    ~Plan();
    Plan(Plan&&) noexcept;
    Plan& operator=(Plan&&) noexcept;
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    std::size_t length() const { return length_; }

    /// in and out must both have length() elements; they may alias.
    void execute(std::span<const cplx> in, std::span<cplx> out);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t length_ = 0;
    Direction direction_ = Direction::forward;
};

std::vector<cplx> forward(std::span<const cplx> v);
std::vector<cplx> inverse(std::span<const cplx> v);

} // namespace nextsense::dft
