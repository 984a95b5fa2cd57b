#pragma once

#include "svph/torus.hpp"

#include <Eigen/Dense>

#include <complex>
#include <compare>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace svph {

using complex = std::complex<double>;

/// Integer frequency pair (k1 for x, k2 for theta).
struct Mode {
    int k1 = 0;
    int k2 = 0;
    auto operator<=>(const Mode&) const = default;
    Mode operator-() const noexcept { return {-k1, -k2}; }
};

struct FourierTerm {
    Mode mode;
    complex coeff;
};

/// Finite trigonometric polynomial sum_k c_k exp(2 pi i k.p) on the 2-torus.
///
/// Terms are kept sorted by mode with duplicates merged; exact zeros are
/// dropped. Real-valued functions are represented by Hermitian-symmetric
/// tables (c_{-k} = conj(c_k)); `value` returns the real part.
class FourierSeries {
public:
    FourierSeries() = default;
    explicit FourierSeries(std::vector<FourierTerm> terms);

    static FourierSeries constant(double c);
    /// amplitude * cos(2 pi (k1 x + k2 theta))
    static FourierSeries cosine(double amplitude, Mode k);
    /// amplitude * sin(2 pi (k1 x + k2 theta))
    static FourierSeries sine(double amplitude, Mode k);
    /// Interpolates a real function from samples on an n x n lattice and keeps
    /// modes with |k_i| <= band. Exact for trigonometric polynomials whose band
    /// is below n / 2.
    static FourierSeries from_function(const std::function<double(TorusPoint)>& fn, int band, int n);

    [[nodiscard]] std::span<const FourierTerm> terms() const noexcept { return terms_; }
    [[nodiscard]] bool empty() const noexcept { return terms_.empty(); }
    [[nodiscard]] complex coefficient(Mode k) const noexcept;
    /// max over terms of max(|k1|, |k2|); zero for constants and empty tables.
    [[nodiscard]] int band() const noexcept;
    [[nodiscard]] bool depends_on_x() const noexcept;
    [[nodiscard]] bool depends_on_theta() const noexcept;
    [[nodiscard]] bool is_hermitian(double tol = 1e-12) const noexcept;

    [[nodiscard]] complex complex_value(TorusPoint p) const noexcept;
    [[nodiscard]] double value(TorusPoint p) const noexcept { return complex_value(p).real(); }
    [[nodiscard]] double dx(TorusPoint p) const noexcept;
    [[nodiscard]] double dtheta(TorusPoint p) const noexcept;
    /// sup norm of the x-derivative estimated on an n x n lattice.
    [[nodiscard]] double sup_abs_dx(int n = 256) const;

    FourierSeries operator+(const FourierSeries& other) const;
    FourierSeries operator-(const FourierSeries& other) const;
    FourierSeries operator*(double s) const;
    /// Pointwise product (exact convolution of the two tables).
    [[nodiscard]] FourierSeries times(const FourierSeries& other) const;

private:
    std::vector<FourierTerm> terms_;
};

/// Square truncation {m : max(|m1|, |m2|) <= K} used by the Galerkin scheme.
class ModeBox {
public:
    ModeBox() = default;
    explicit ModeBox(int K) : K_(K) {}

    [[nodiscard]] int K() const noexcept { return K_; }
    [[nodiscard]] int side() const noexcept { return 2 * K_ + 1; }
    [[nodiscard]] std::size_t size() const noexcept {
        return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
    }
    [[nodiscard]] bool contains(Mode m) const noexcept {
        return m.k1 >= -K_ && m.k1 <= K_ && m.k2 >= -K_ && m.k2 <= K_;
    }
    [[nodiscard]] std::size_t index(Mode m) const noexcept {
        return static_cast<std::size_t>(m.k1 + K_) * static_cast<std::size_t>(side()) +
               static_cast<std::size_t>(m.k2 + K_);
    }
    [[nodiscard]] Mode mode(std::size_t i) const noexcept {
        int s = side();
        return {static_cast<int>(i / static_cast<std::size_t>(s)) - K_,
                static_cast<int>(i % static_cast<std::size_t>(s)) - K_};
    }
    [[nodiscard]] std::size_t zero_index() const noexcept { return index({0, 0}); }

private:
    int K_ = 0;
};

using CoeffVector = Eigen::VectorXcd;

/// Coefficients of `f` restricted to the box (modes outside are dropped).
CoeffVector to_coefficients(const FourierSeries& f, const ModeBox& box);
FourierSeries to_series(const CoeffVector& v, const ModeBox& box, double drop_below = 0.0);

/// sum_m v_m exp(2 pi i m.p)
complex synthesize(const CoeffVector& v, const ModeBox& box, TorusPoint p);

/// Row-major n x n lattice of values at (i/n, j/n) (x index first).
using Grid = std::vector<complex>;

/// Values of a box-coefficient vector on the n x n lattice; needs n >= 2K+1.
Grid coefficients_to_grid(const CoeffVector& v, const ModeBox& box, int n);
/// Lattice quadrature of the Fourier coefficients, restricted to the box.
CoeffVector grid_to_coefficients(const Grid& values, int n, const ModeBox& box);

/// Lebesgue integral of the function with coefficient vector v (its (0,0) mode).
complex lebesgue_mean(const CoeffVector& v, const ModeBox& box);
/// m(conj(h) v) by Parseval.
complex pairing(const CoeffVector& h, const CoeffVector& v);
/// m(tau * v) for a (possibly complex) table tau and a box vector v.
complex integrate_product(const FourierSeries& tau, const CoeffVector& v, const ModeBox& box);
/// Coefficients of tau * v truncated to the box.
CoeffVector multiply(const FourierSeries& tau, const CoeffVector& v, const ModeBox& box);

/// (sum_m (1 + |m|^2)^s |v_m|^2)^{1/2}
double sobolev_norm(const CoeffVector& v, const ModeBox& box, double s);

/// Exact integral of exp(2 pi i m.p) over [x0,x1) x [t0,t1).
complex rectangle_integral(Mode m, double x0, double x1, double t0, double t1);

} // namespace svph
