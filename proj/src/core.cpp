// SPDX-License-Identifier: Apache-2.0

#include "nextsense/core.hpp"

namespace nextsense {

bool is_supported_subcarrier_spacing(double khz)
{
    return khz == 15.0 || khz == 30.0 || khz == 60.0 || khz == 120.0;
}

void GridDims::validate() const
{
    if (num_subcarriers < 1 || num_symbols < 1 || num_snapshots < 1) {
        throw ValidationError("grid dimensions must all be >= 1, got " + std::to_string(num_subcarriers) + "x" +
                              std::to_string(num_symbols) + "x" + std::to_string(num_snapshots));
    }
    if (!is_supported_subcarrier_spacing(subcarrier_spacing_khz)) {
        throw ValidationError("subcarrier spacing must be one of 15/30/60/120 kHz, got " +
                              std::to_string(subcarrier_spacing_khz));
    }
}

IQTensor::IQTensor(std::size_t subcarriers, std::size_t symbols, std::size_t snapshots, cplx fill)
    : k_(subcarriers), s_(symbols), n_(snapshots), data_(subcarriers * symbols * snapshots, fill)
{
}

std::string IQTensor::shape_string() const
{
    return std::to_string(k_) + "x" + std::to_string(s_) + "x" + std::to_string(n_);
}

} // namespace nextsense
