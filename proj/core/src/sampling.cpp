#include "svph/sampling.hpp"

#include "svph/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace svph {

namespace {
__extension__ using uint128 = unsigned __int128;
} // namespace

Rng substream(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index); a single-word seed keeps
    // per-sample construction cheap
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return Rng(mix(mix(seed) ^ index));
}

InitialMeasure InitialMeasure::from_density(FourierSeries f_m, double sup_bound) {
    if (!f_m.is_hermitian(1e-12)) throw Error(ErrorCode::ValidationError, "initial density is not real-valued");
    const double mass = f_m.coefficient({0, 0}).real();
    if (std::abs(mass - 1.0) > 1e-8)
        throw Error(ErrorCode::ValidationError, "initial density must integrate to 1 (got " + std::to_string(mass) + ")");
    const int n = std::max(128, 8 * f_m.band() + 8);
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = f_m.value({(i + 0.5) / n, (j + 0.5) / n});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (lo < -1e-12) throw Error(ErrorCode::ValidationError, "initial density is negative somewhere");
    if (!(sup_bound >= hi))
        throw Error(ErrorCode::ValidationError,
                    "sup_bound " + std::to_string(sup_bound) + " is below max f_m = " + std::to_string(hi));
    return {std::move(f_m), sup_bound};
}

bool InitialMeasure::is_uniform() const noexcept {
    return f_m.terms().size() == 1 && f_m.terms().front().mode == Mode{0, 0} &&
           f_m.terms().front().coeff == complex{1.0, 0.0};
}

TorusPoint draw_initial(const InitialMeasure& m, Rng& rng, std::uint64_t* proposals) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool uniform = m.is_uniform();
    for (;;) {
        TorusPoint p{u(rng), u(rng)};
        if (proposals) ++*proposals;
        if (uniform || u(rng) * m.sup_bound < m.density(p)) return p;
    }
}

std::vector<TorusPoint> sample_initial(const InitialMeasure& m, std::size_t N, std::uint64_t seed, SampleStats* stats) {
    std::vector<TorusPoint> out(N);
    std::vector<std::uint64_t> tries(N, 0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) {
        Rng rng = substream(seed, i);
        out[i] = draw_initial(m, rng, &tries[i]);
    }
    if (stats) {
        stats->accepted = N;
        stats->proposals = 0;
        for (auto t : tries) stats->proposals += t;
    }
    return out;
}

const PhaseTable& PhaseTable::instance() {
    static const PhaseTable table;
    return table;
}

PhaseTable::PhaseTable() : table_(std::size_t{2} << bits) {
    const std::size_t n = std::size_t{1} << bits;
    for (std::size_t j = 0; j < n; ++j) {
        double a = two_pi * static_cast<double>(j) / static_cast<double>(n);
        table_[2 * j] = std::cos(a);
        table_[2 * j + 1] = std::sin(a);
    }
}

FastSeries::FastSeries(const FourierSeries& f) : table_(&PhaseTable::instance()) {
    for (const auto& t : f.terms()) {
        if (t.mode == Mode{0, 0}) {
            constant_ = t.coeff.real();
        } else if (t.mode > Mode{0, 0}) {
            terms_.push_back({static_cast<std::uint64_t>(static_cast<std::int64_t>(t.mode.k1)),
                              static_cast<std::uint64_t>(static_cast<std::int64_t>(t.mode.k2)),
                              2.0 * t.coeff.real(), 2.0 * t.coeff.imag()});
        }
    }
}

DigitStream::DigitStream(std::uint64_t ell, Rng& rng) : rng_(&rng), ell_(ell) {
    if (std::has_single_bit(ell)) {
        shift_ = std::countr_zero(ell);
        mask_ = ell - 1;
        per_word_ = shift_ == 0 ? 1 << 30 : 64 / shift_;
    } else {
        shift_ = -1;
        uint128 p = 1;
        per_word_ = 0;
        while (p * ell <= ~std::uint64_t{0}) {
            p *= ell;
            ++per_word_;
        }
        limit_ = static_cast<std::uint64_t>(p * (~std::uint64_t{0} / static_cast<std::uint64_t>(p)));
    }
}

void DigitStream::refill() {
    left_ = per_word_;
    if (shift_ == 0) {
        buf_ = 0;
        return;
    }
    do buf_ = (*rng_)();
    while (shift_ < 0 && buf_ >= limit_);
}

OrbitStepper::OrbitStepper(const MapSpec& spec)
    : ell_(static_cast<std::uint64_t>(spec.ell)),
      f_(spec.f_coeffs),
      omega_(spec.omega_coeffs * spec.omega_scale()),
      has_f_(!f_.empty()),
      has_omega_(!omega_.empty()) {}

FixedPoint OrbitStepper::init(TorusPoint p, Rng& rng) const {
    FixedPoint s{to_fixed(p.x), to_fixed(p.theta)};
    s.x += rng() >> 53;
    s.theta += rng() >> 53;
    return s;
}

FastObservable::FastObservable(const Observable& obs)
    : series_(obs.coeffs), sign_(obs.transform == ObservableTransform::sign) {}

} // namespace svph
