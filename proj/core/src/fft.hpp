#pragma once

// Thin RAII wrapper over FFTW for square complex transforms. Private to the
// core library.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

namespace svph::detail {

class Fft2 {
public:
    enum class Direction { forward, backward };

    Fft2(int n, Direction dir);
    ~Fft2();
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    [[nodiscard]] int n() const noexcept { return n_; }
    /// Unnormalized in-place transform of an n*n row-major buffer.
    void execute(std::vector<std::complex<double>>& data) const;

private:
    int n_;
    int sign_;
    fftw_plan plan_ = nullptr;
    fftw_complex* scratch_ = nullptr;
};

} // namespace svph::detail
