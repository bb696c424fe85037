// SPDX-License-Identifier: Apache-2.0
//
// The frequency-domain resource grid and the known pilot grid X(k, s) that is
// transmitted identically in every snapshot.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nextsense/core.hpp"

namespace nextsense::waveform {

/// Unit-modulus pilots, one per (subcarrier, symbol). Independent of the
/// snapshot count.
struct ReferenceSignal {
    std::size_t num_subcarriers = 0;
    std::size_t num_symbols = 0;
    double subcarrier_spacing_khz = 30.0;
    std::uint64_t seed = 0;
    std::vector<cplx> values; // symbol-major: values[s * K + k]

    const cplx& at(std::size_t k, std::size_t s) const { return values[s * num_subcarriers + k]; }

    bool operator==(const ReferenceSignal&) const = default;
};

/// QPSK pilot alphabet {1, j, -1, -j}. Every point has |x| == 1 exactly in
/// binary floating point, so Y / X is an exact operation.
inline constexpr std::size_t kAlphabetSize = 4;
cplx pilot_symbol(unsigned index);

/// Deterministic pilot grid keyed on seed. Element (k, s) is drawn from a
/// counter-based generator at counter s * K + k, so growing the grid never
/// changes the already-present elements.
ReferenceSignal generate_reference(std::uint64_t seed, const GridDims& dims);

/// Mean of |x|^2 over all elements. Throws ValidationError on empty input.
double grid_power(std::span<const cplx> samples);
double grid_power(const IQTensor& tensor);

/// Builds the noiseless transmit tensor: X replicated over every snapshot.
IQTensor replicate(const ReferenceSignal& x, std::size_t num_snapshots);

} // namespace nextsense::waveform
