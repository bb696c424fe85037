// SPDX-License-Identifier: Apache-2.0

#include "nextsense/waveform.hpp"

#include "nextsense/rng.hpp"

namespace nextsense::waveform {

cplx pilot_symbol(unsigned index)
{
    switch (index & 3U) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

ReferenceSignal generate_reference(std::uint64_t seed, const GridDims& dims)
{
    dims.validate();
    ReferenceSignal ref;
    ref.num_subcarriers = dims.num_subcarriers;
    ref.num_symbols = dims.num_symbols;
    ref.subcarrier_spacing_khz = dims.subcarrier_spacing_khz;
    ref.seed = seed;
    ref.values.resize(dims.num_subcarriers * dims.num_symbols);
    const std::uint64_t key = derive_seed(seed, "pilot");
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
        // top bits of the mixed counter select the symbol
        ref.values[i] = pilot_symbol(static_cast<unsigned>(splitmix64(key + i) >> 62));
    }
    return ref;
}

double grid_power(std::span<const cplx> samples)
{
    if (samples.empty()) {
        throw ValidationError("grid_power of an empty tensor");
    }
    double acc = 0.0;
    for (const cplx& v : samples) {
        acc += std::norm(v);
    }
    return acc / static_cast<double>(samples.size());
}

double grid_power(const IQTensor& tensor)
{
    return grid_power(tensor.data());
}

IQTensor replicate(const ReferenceSignal& x, std::size_t num_snapshots)
{
    IQTensor t(x.num_subcarriers, x.num_symbols, num_snapshots);
    for (std::size_t n = 0; n < num_snapshots; ++n) {
        auto block = t.snapshot(n);
        std::copy(x.values.begin(), x.values.end(), block.begin());
    }
    return t;
}

} // namespace nextsense::waveform
