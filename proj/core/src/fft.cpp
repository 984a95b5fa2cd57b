#include "fft.hpp"

#include "svph/errors.hpp"

#include <cstring>
#include <mutex>

namespace svph::detail {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

Fft2::Fft2(int n, Direction dir) : n_(n), sign_(dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD) {
    require(n > 0, "FFT size must be positive");
    std::lock_guard lock(planner_mutex());
    scratch_ = fftw_alloc_complex(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    plan_ = fftw_plan_dft_2d(n, n, scratch_, scratch_, sign_, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

Fft2::~Fft2() {
    std::lock_guard lock(planner_mutex());
    if (plan_) fftw_destroy_plan(plan_);
    if (scratch_) fftw_free(scratch_);
}

void Fft2::execute(std::vector<std::complex<double>>& data) const {
    const std::size_t count = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
    require(data.size() == count, "FFT buffer has the wrong size");
    // new-array execute (plan is FFTW_UNALIGNED); std::complex<double> is layout
    // compatible with fftw_complex
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_, buf, buf);
}

} // namespace svph::detail
