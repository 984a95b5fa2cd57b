#include "svph/fourier.hpp"

#include "fft.hpp"
#include "svph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace svph {

namespace {

complex unit_phase(Mode k, TorusPoint p) noexcept {
    // reduce the phase mod 1 before scaling so large modes keep their accuracy
    double phase = wrap_unit(static_cast<double>(k.k1) * p.x + static_cast<double>(k.k2) * p.theta);
    return std::polar(1.0, two_pi * phase);
}

int positive_mod(int a, int n) noexcept {
    int r = a % n;
    return r < 0 ? r + n : r;
}

} // namespace

FourierSeries::FourierSeries(std::vector<FourierTerm> terms) {
    std::map<Mode, complex> merged;
    for (const auto& t : terms) merged[t.mode] += t.coeff;
    terms_.reserve(merged.size());
    for (const auto& [mode, c] : merged)
        if (c != complex{0.0, 0.0}) terms_.push_back({mode, c});
}

FourierSeries FourierSeries::constant(double c) {
    return FourierSeries({{{0, 0}, complex{c, 0.0}}});
}

FourierSeries FourierSeries::cosine(double amplitude, Mode k) {
    if (k == Mode{0, 0}) return constant(amplitude);
    return FourierSeries({{k, complex{amplitude / 2, 0.0}}, {-k, complex{amplitude / 2, 0.0}}});
}

FourierSeries FourierSeries::sine(double amplitude, Mode k) {
    if (k == Mode{0, 0}) return {};
    // sin(a) = (e^{ia} - e^{-ia}) / 2i
    return FourierSeries({{k, complex{0.0, -amplitude / 2}}, {-k, complex{0.0, amplitude / 2}}});
}

FourierSeries FourierSeries::from_function(const std::function<double(TorusPoint)>& fn, int band, int n) {
    require(band >= 0 && n > 2 * band, "from_function needs n > 2*band");
    Grid g(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            g[static_cast<std::size_t>(i * n + j)] = fn({static_cast<double>(i) / n, static_cast<double>(j) / n});
    ModeBox box(band);
    auto v = grid_to_coefficients(g, n, box);
    // symmetrize so the table is exactly Hermitian
    std::vector<FourierTerm> terms;
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        complex c = 0.5 * (v[static_cast<Eigen::Index>(i)] + std::conj(v[static_cast<Eigen::Index>(box.index(-m))]));
        if (std::abs(c) > 1e-15) terms.push_back({m, c});
    }
    return FourierSeries(std::move(terms));
}

complex FourierSeries::coefficient(Mode k) const noexcept {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), k,
                               [](const FourierTerm& t, Mode m) { return t.mode < m; });
    return (it != terms_.end() && it->mode == k) ? it->coeff : complex{};
}

int FourierSeries::band() const noexcept {
    int b = 0;
    for (const auto& t : terms_) b = std::max({b, std::abs(t.mode.k1), std::abs(t.mode.k2)});
    return b;
}

bool FourierSeries::depends_on_x() const noexcept {
    return std::any_of(terms_.begin(), terms_.end(), [](const FourierTerm& t) { return t.mode.k1 != 0; });
}

bool FourierSeries::depends_on_theta() const noexcept {
    return std::any_of(terms_.begin(), terms_.end(), [](const FourierTerm& t) { return t.mode.k2 != 0; });
}

bool FourierSeries::is_hermitian(double tol) const noexcept {
    for (const auto& t : terms_)
        if (std::abs(coefficient(-t.mode) - std::conj(t.coeff)) > tol) return false;
    return true;
}

complex FourierSeries::complex_value(TorusPoint p) const noexcept {
    complex s{};
    for (const auto& t : terms_) s += t.coeff * unit_phase(t.mode, p);
    return s;
}

double FourierSeries::dx(TorusPoint p) const noexcept {
    complex s{};
    for (const auto& t : terms_) s += complex{0.0, two_pi * t.mode.k1} * t.coeff * unit_phase(t.mode, p);
    return s.real();
}

double FourierSeries::dtheta(TorusPoint p) const noexcept {
    complex s{};
    for (const auto& t : terms_) s += complex{0.0, two_pi * t.mode.k2} * t.coeff * unit_phase(t.mode, p);
    return s.real();
}

double FourierSeries::sup_abs_dx(int n) const {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m = std::max(m, std::abs(dx({static_cast<double>(i) / n, static_cast<double>(j) / n})));
    return m;
}

FourierSeries FourierSeries::operator+(const FourierSeries& other) const {
    std::vector<FourierTerm> all(terms_.begin(), terms_.end());
    all.insert(all.end(), other.terms_.begin(), other.terms_.end());
    return FourierSeries(std::move(all));
}

FourierSeries FourierSeries::operator-(const FourierSeries& other) const { return *this + other * -1.0; }

FourierSeries FourierSeries::operator*(double s) const {
    std::vector<FourierTerm> out(terms_.begin(), terms_.end());
    for (auto& t : out) t.coeff *= s;
    return FourierSeries(std::move(out));
}

FourierSeries FourierSeries::times(const FourierSeries& other) const {
    std::vector<FourierTerm> out;
    out.reserve(terms_.size() * other.terms_.size());
    for (const auto& a : terms_)
        for (const auto& b : other.terms_)
            out.push_back({{a.mode.k1 + b.mode.k1, a.mode.k2 + b.mode.k2}, a.coeff * b.coeff});
    return FourierSeries(std::move(out));
}

CoeffVector to_coefficients(const FourierSeries& f, const ModeBox& box) {
    CoeffVector v = CoeffVector::Zero(static_cast<Eigen::Index>(box.size()));
    for (const auto& t : f.terms())
        if (box.contains(t.mode)) v[static_cast<Eigen::Index>(box.index(t.mode))] = t.coeff;
    return v;
}

FourierSeries to_series(const CoeffVector& v, const ModeBox& box, double drop_below) {
    std::vector<FourierTerm> terms;
    for (std::size_t i = 0; i < box.size(); ++i) {
        complex c = v[static_cast<Eigen::Index>(i)];
        if (std::abs(c) > drop_below) terms.push_back({box.mode(i), c});
    }
    return FourierSeries(std::move(terms));
}

complex synthesize(const CoeffVector& v, const ModeBox& box, TorusPoint p) {
    // separable evaluation: e^{2 pi i m1 x} and e^{2 pi i m2 theta} tables
    const int K = box.K();
    const int s = box.side();
    std::vector<complex> ex(static_cast<std::size_t>(s)), et(static_cast<std::size_t>(s));
    for (int m = -K; m <= K; ++m) {
        ex[static_cast<std::size_t>(m + K)] = unit_phase({m, 0}, p);
        et[static_cast<std::size_t>(m + K)] = unit_phase({0, m}, p);
    }
    complex total{};
    for (int a = 0; a < s; ++a) {
        complex row{};
        for (int b = 0; b < s; ++b)
            row += v[static_cast<Eigen::Index>(a * s + b)] * et[static_cast<std::size_t>(b)];
        total += row * ex[static_cast<std::size_t>(a)];
    }
    return total;
}

Grid coefficients_to_grid(const CoeffVector& v, const ModeBox& box, int n) {
    require(n >= box.side(), "grid too coarse for the mode box");
    Grid g(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), complex{});
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        g[static_cast<std::size_t>(positive_mod(m.k1, n) * n + positive_mod(m.k2, n))] =
            v[static_cast<Eigen::Index>(i)];
    }
    detail::Fft2 fft(n, detail::Fft2::Direction::backward);
    fft.execute(g);
    return g;
}

CoeffVector grid_to_coefficients(const Grid& values, int n, const ModeBox& box) {
    require(values.size() == static_cast<std::size_t>(n) * static_cast<std::size_t>(n), "grid size mismatch");
    Grid g = values;
    detail::Fft2 fft(n, detail::Fft2::Direction::forward);
    fft.execute(g);
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    CoeffVector v(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        v[static_cast<Eigen::Index>(i)] =
            g[static_cast<std::size_t>(positive_mod(m.k1, n) * n + positive_mod(m.k2, n))] * scale;
    }
    return v;
}

complex lebesgue_mean(const CoeffVector& v, const ModeBox& box) {
    return v[static_cast<Eigen::Index>(box.zero_index())];
}

complex pairing(const CoeffVector& h, const CoeffVector& v) { return h.dot(v); }

complex integrate_product(const FourierSeries& tau, const CoeffVector& v, const ModeBox& box) {
    complex s{};
    for (const auto& t : tau.terms()) {
        Mode m = -t.mode;
        if (box.contains(m)) s += t.coeff * v[static_cast<Eigen::Index>(box.index(m))];
    }
    return s;
}

CoeffVector multiply(const FourierSeries& tau, const CoeffVector& v, const ModeBox& box) {
    CoeffVector out = CoeffVector::Zero(v.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        complex c = v[static_cast<Eigen::Index>(i)];
        if (c == complex{}) continue;
        Mode m = box.mode(i);
        for (const auto& t : tau.terms()) {
            Mode r{m.k1 + t.mode.k1, m.k2 + t.mode.k2};
            if (box.contains(r)) out[static_cast<Eigen::Index>(box.index(r))] += t.coeff * c;
        }
    }
    return out;
}

double sobolev_norm(const CoeffVector& v, const ModeBox& box, double s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        double w = std::pow(1.0 + m.k1 * m.k1 + m.k2 * m.k2, s);
        acc += w * std::norm(v[static_cast<Eigen::Index>(i)]);
    }
    return std::sqrt(acc);
}

complex rectangle_integral(Mode m, double x0, double x1, double t0, double t1) {
    auto axis = [](int k, double a, double b) -> complex {
        if (k == 0) return {b - a, 0.0};
        complex w{0.0, two_pi * k};
        return (std::exp(w * b) - std::exp(w * a)) / w;
    };
    return axis(m.k1, x0, x1) * axis(m.k2, t0, t1);
}

} // namespace svph
