#pragma once

#include "svph/fourier.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace svph {

using Rng = std::mt19937_64;

/// Independent generator for sample `index` of a run seeded with `seed`.
Rng substream(std::uint64_t seed, std::uint64_t index);

/// Initial law dm = f_m dLeb, sampled by rejection against `sup_bound`.
struct InitialMeasure {
    FourierSeries f_m = FourierSeries::constant(1.0);
    double sup_bound = 1.0;

    static InitialMeasure uniform() { return {}; }
    /// Validates f_m >= 0 on a lattice, Leb(f_m) = 1 within 1e-8 and
    /// sup_bound >= max f_m.
    static InitialMeasure from_density(FourierSeries f_m, double sup_bound);

    [[nodiscard]] bool is_uniform() const noexcept;
    [[nodiscard]] double density(TorusPoint p) const noexcept { return f_m.value(p); }
};

TorusPoint draw_initial(const InitialMeasure& m, Rng& rng, std::uint64_t* proposals = nullptr);

struct SampleStats {
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
    [[nodiscard]] double acceptance() const noexcept {
        return proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
    }
};

/// N i.i.d. points from m; sample i uses substream(seed, i).
std::vector<TorusPoint> sample_initial(const InitialMeasure& m, std::size_t N, std::uint64_t seed,
                                       SampleStats* stats = nullptr);

/// 64-bit fixed-point coordinates: x = X / 2^64. Integer wrap-around is the
/// reduction mod 1.
struct FixedPoint {
    std::uint64_t x = 0;
    std::uint64_t theta = 0;
};

inline std::uint64_t to_fixed(double v) noexcept {
    if (v > -1.0 && v < 1.0) return static_cast<std::uint64_t>(static_cast<std::int64_t>(v * 0x1p63)) << 1;
    double d = v - std::floor(v + 0.5); // [-1/2, 1/2)
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(d * 0x1p64));
}
inline double from_fixed(std::uint64_t v) noexcept { return static_cast<double>(v) * 0x1p-64; }
inline TorusPoint to_point(FixedPoint s) noexcept { return {from_fixed(s.x), from_fixed(s.theta)}; }

/// cos / sin of 2 pi phase for a 64-bit fixed-point phase. A 1024-entry
/// table (L1 resident) plus a Taylor step of degree 5; error ~ 1e-16.
class PhaseTable {
public:
    static constexpr int bits = 10;
    static const PhaseTable& instance();

    void cos_sin(std::uint64_t phase, double& c, double& s) const noexcept {
        const auto j = static_cast<std::size_t>(phase >> (64 - bits));
        const std::uint64_t rem = phase & ((std::uint64_t{1} << (64 - bits)) - 1);
        const double d = static_cast<double>(rem) * 3.4061215800865545e-19; // 2 pi / 2^64
        const double d2 = d * d;
        const double cd = 1.0 - d2 * (0.5 - d2 * (1.0 / 24.0));
        const double sd = d * (1.0 - d2 * (1.0 / 6.0 - d2 * (1.0 / 120.0)));
        const double tc = table_[2 * j], ts = table_[2 * j + 1];
        c = tc * cd - ts * sd;
        s = ts * cd + tc * sd;
    }

private:
    PhaseTable();
    std::vector<double> table_; // interleaved cos, sin
};

/// Real trigonometric polynomial evaluated on fixed-point coordinates through
/// the Hermitian half of its table.
class FastSeries {
public:
    FastSeries() = default;
    explicit FastSeries(const FourierSeries& f);

    [[nodiscard]] bool empty() const noexcept { return terms_.empty() && constant_ == 0.0; }
    [[nodiscard]] double value(FixedPoint s) const noexcept {
        double v = constant_;
        for (const auto& t : terms_) {
            double c, sn;
            table_->cos_sin(t.k1 * s.x + t.k2 * s.theta, c, sn);
            v += t.re2 * c - t.im2 * sn;
        }
        return v;
    }

private:
    struct Term {
        std::uint64_t k1, k2; // two's complement modes
        double re2, im2;      // 2 Re c, 2 Im c
    };
    const PhaseTable* table_ = nullptr;
    double constant_ = 0.0;
    std::vector<Term> terms_;
};

/// Uniform base-ell digits, several per 64-bit draw. Power-of-two bases
/// slice the word; other bases reject words at or above a multiple of ell^k
/// and read k base-ell digits from the rest, so every digit is exactly uniform.
class DigitStream {
public:
    DigitStream(std::uint64_t ell, Rng& rng);

    std::uint64_t next() {
        if (left_ == 0) refill();
        --left_;
        std::uint64_t d;
        if (shift_ >= 0) {
            d = buf_ & mask_;
            buf_ >>= shift_;
        } else {
            d = buf_ % ell_;
            buf_ /= ell_;
        }
        return d;
    }

private:
    void refill();

    Rng* rng_;
    std::uint64_t ell_;
    int shift_;            // log2(ell) for powers of two, else -1
    std::uint64_t mask_ = 0;
    int per_word_;
    std::uint64_t limit_ = 0; // accept words below this (non powers of two; 0 means all)
    std::uint64_t buf_ = 0;
    int left_ = 0;
};

/// Exact-in-law orbit stepping. Multiplying X by ell discards the top digit;
/// the digit entering at the bottom is drawn uniformly, which is the law of
/// the next base-ell digit of a Lebesgue-typical x.
class OrbitStepper {
public:
    explicit OrbitStepper(const MapSpec& spec);

    [[nodiscard]] std::uint64_t ell() const noexcept { return ell_; }
    /// Fixed-point lift of p with the bits below double precision randomized.
    [[nodiscard]] FixedPoint init(TorusPoint p, Rng& rng) const;
    void step(FixedPoint& s, DigitStream& digits) const {
        std::uint64_t x = ell_ * s.x + digits.next();
        if (has_f_) x += to_fixed(f_.value(s));
        if (has_omega_) s.theta += to_fixed(omega_.value(s));
        s.x = x;
    }

private:
    std::uint64_t ell_;
    FastSeries f_;
    FastSeries omega_; // already scaled by epsilon for fast-slow maps
    bool has_f_, has_omega_;
};

/// Observable evaluated on fixed-point coordinates (raw value, no offsets).
class FastObservable {
public:
    explicit FastObservable(const Observable& obs);
    [[nodiscard]] double value(FixedPoint s) const noexcept {
        double v = series_.value(s);
        if (sign_) return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        return v;
    }

private:
    FastSeries series_;
    bool sign_;
};

/// Bin of the 4 x 4 partition used by the orbit histograms. Bins are centred
/// on the lattice points {0, 1/4, 1/2, 3/4}^2: bin (a, b) covers
/// [a/4 - 1/8, a/4 + 1/8) x [b/4 - 1/8, b/4 + 1/8).
inline int histogram_cell(FixedPoint s) noexcept {
    constexpr std::uint64_t eighth = std::uint64_t{1} << 61;
    return static_cast<int>(((s.x + eighth) >> 62) * 4 + ((s.theta + eighth) >> 62));
}
using Histogram = std::array<double, 16>;

} // namespace svph
