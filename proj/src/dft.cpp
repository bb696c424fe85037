// SPDX-License-Identifier: Apache-2.0

#include "nextsense/dft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace nextsense::dft {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

struct Plan::Impl {
    fftw_complex* buffer = nullptr;
    fftw_plan plan = nullptr;
};

Plan::Plan(std::size_t length, Direction direction)
    : impl_(std::make_unique<Impl>()), length_(length), direction_(direction)
{
    if (length == 0) {
        throw ValidationError("DFT length must be >= 1");
    }
    std::lock_guard lock(planner_mutex());
    impl_->buffer = fftw_alloc_complex(length);
    const int sign = direction == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    impl_->plan = fftw_plan_dft_1d(static_cast<int>(length), impl_->buffer, impl_->buffer, sign, FFTW_ESTIMATE);
}

Plan::~Plan()
{
    if (!impl_) {
        return;
    }
    std::lock_guard lock(planner_mutex());
    if (impl_->plan != nullptr) {
        fftw_destroy_plan(impl_->plan);
    }
    if (impl_->buffer != nullptr) {
        fftw_free(impl_->buffer);
    }
}

Plan::Plan(Plan&&) noexcept = default;
Plan& Plan::operator=(Plan&&) noexcept = default;

void Plan::execute(std::span<const cplx> in, std::span<cplx> out)
{
    if (in.size() != length_ || out.size() != length_) {
        throw ValidationError("DFT input/output length does not match plan length");
    }
    auto* buf = reinterpret_cast<cplx*>(impl_->buffer);
    std::copy(in.begin(), in.end(), buf);
    fftw_execute(impl_->plan);
    if (direction_ == Direction::inverse) {
        const double scale = 1.0 / static_cast<double>(length_);
        for (std::size_t i = 0; i < length_; ++i) {
            out[i] = buf[i] * scale;
        }
    } else {
        std::copy(buf, buf + length_, out.begin());
    }
}

std::vector<cplx> forward(std::span<const cplx> v)
{
    std::vector<cplx> out(v.size());
    Plan(v.size(), Direction::forward).execute(v, out);
    return out;
}

std::vector<cplx> inverse(std::span<const cplx> v)
{
    std::vector<cplx> out(v.size());
    Plan(v.size(), Direction::inverse).execute(v, out);
    return out;
}

} // namespace nextsense::dft
