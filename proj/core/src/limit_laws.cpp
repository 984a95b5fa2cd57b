#include "svph/limit_laws.hpp"

#include "svph/errors.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numbers>
#include <sstream>

namespace svph {

namespace {

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

// population variance about the sample mean
double variance(const std::vector<double>& v) {
    const double mu = mean(v);
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = (v[i] - mu) * (v[i] - mu);
    return mean(d);
}

void check_degenerate(const std::vector<double>& c, const std::vector<double>& sigma, double tol) {
    require(c.size() == sigma.size() && !c.empty(), "weights and sigmas must have the same non-zero length");
    for (std::size_t k = 0; k < c.size(); ++k)
        if (c[k] > 0.0 && !(sigma[k] > tol)) {
            std::ostringstream msg;
            msg << "component " << k << " has sigma " << sigma[k] << " (weight " << c[k]
                << "); its limit law is a point mass";
            throw Error(ErrorCode::DegenerateComponent, msg.str());
        }
}

KsResult ks_sorted(const std::vector<double>& v, const std::vector<double>& c, const std::vector<double>& sigma) {
    KsResult r;
    const auto N = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double F = mixture_cdf(v[i], c, sigma);
        double d = std::max(F - static_cast<double>(i) / N, static_cast<double>(i + 1) / N - F);
        if (d > r.distance) {
            r.distance = d;
            r.at = v[i];
            r.std_error = std::sqrt(F * (1.0 - F) / N);
        }
    }
    return r;
}

// two-sided 97.5% Student t quantiles, df = 1..30
constexpr std::array<double, 30> t975 = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                         2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
                                         2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};

} // namespace

double normal_pdf(double z) noexcept { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

Observable center(const Observable& obs, const ErgodicDecomposition& dec) {
    Observable out = obs;
    out.centered_offsets.clear();
    out.basins = dec.basins;
    const ModeBox box = dec.box();
    for (int k = 0; k < dec.ell; ++k) {
        if (obs.spectral_compatible()) {
            out.centered_offsets.push_back(dec.acip_expectation(k, obs.coeffs));
            continue;
        }
        // transformed observable: midpoint quadrature against rho_k (nodes
        // would sit on the zero set of tau and bias the sign)
        const int n = std::max(256, 2 * box.side());
        const double h = 0.5 / n;
        CoeffVector shifted = dec.rho[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < box.size(); ++i) {
            Mode m = box.mode(i);
            shifted[static_cast<Eigen::Index>(i)] *= std::polar(1.0, 2.0 * std::numbers::pi * (m.k1 + m.k2) * h);
        }
        Grid rho = coefficients_to_grid(shifted, box, n);
        std::vector<double> terms(rho.size());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j);
                terms[idx] = obs.raw({static_cast<double>(i) / n + h, static_cast<double>(j) / n + h}) * rho[idx].real();
            }
        out.centered_offsets.push_back(mean(terms) / dec.rho_mass(k));
    }
    return out;
}

GreenKubo green_kubo(const Observable& obs, const ErgodicDecomposition& dec, const OperatorMatrix& M, int k, int J) {
    require(k >= 0 && k < dec.ell, "green_kubo: acip index out of range");
    require(J >= 1 && J <= 64, "green_kubo: J must be in [1, 64]");
    require(M.nu == 0.0 && M.K == dec.K, "green_kubo needs the twist-free matrix of the decomposition");
    require(obs.spectral_compatible(), "green_kubo needs an untransformed observable");

    const ModeBox box = dec.box();
    const CoeffVector& rho = dec.rho[static_cast<std::size_t>(k)];
    const double mass = dec.rho_mass(k);
    const double offset = dec.acip_expectation(k, obs.coeffs);

    auto correlations = [&](const FourierSeries& tau) {
        std::vector<double> C;
        CoeffVector v = multiply(tau, rho, box);
        C.push_back(integrate_product(tau, v, box).real() / mass);
        for (int j = 1; j <= J; ++j) {
            v = M.entries * v;
            C.push_back(integrate_product(tau, v, box).real() / mass);
        }
        return C;
    };
    auto sum = [](const std::vector<double>& C) {
        double s = C[0];
        for (std::size_t j = 1; j < C.size(); ++j) s += 2.0 * C[j];
        return s;
    };

    GreenKubo r;
    r.k = k;
    r.J = J;
    r.correlations = correlations(obs.coeffs - FourierSeries::constant(offset));
    r.sigma2 = sum(r.correlations);
    r.sigma2_raw = sum(correlations(obs.coeffs));

    // geometric decay of the terms after j = 5, ignoring round-off level terms
    const double scale = std::max(std::abs(r.correlations[0]), std::numeric_limits<double>::min());
    std::vector<double> xs, ys;
    for (int j = 6; j <= J; ++j) {
        double a = std::abs(r.correlations[static_cast<std::size_t>(j)]);
        if (a > 1e-10 * scale) {
            xs.push_back(j);
            ys.push_back(std::log(a));
        }
    }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        r.ratio = std::exp(sxy / sxx);
        if (r.ratio >= 1.0 - 1e-3) {
            std::ostringstream msg;
            msg << "correlations of acip " << k << " decay with ratio " << r.ratio << " after j = 5";
            throw Error(ErrorCode::NonDecayingCorrelations, msg.str());
        }
        r.tail = std::abs(r.correlations.back()) * r.ratio / (1.0 - r.ratio);
    }
    return r;
}

std::vector<double> BirkhoffSamples::centered(const Observable& obs, std::size_t j) const {
    const double n = static_cast<double>(n_list.at(j));
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) {
        double offset;
        int label = labels.empty() ? BasinGrid::unassigned : labels[i];
        if (obs.centered_offsets.size() == 1) offset = obs.centered_offsets.front();
        else if (label >= 0 && static_cast<std::size_t>(label) < obs.centered_offsets.size())
            offset = obs.centered_offsets[static_cast<std::size_t>(label)];
        else offset = obs.offset_for(starts[i]);
        out[i] = raw_at(i, j) - n * offset;
    }
    return out;
}

std::vector<double> BirkhoffSamples::label_fractions(int ell) const {
    std::vector<double> f(static_cast<std::size_t>(ell), 0.0);
    std::size_t assigned = 0;
    for (int l : labels)
        if (l >= 0 && l < ell) {
            f[static_cast<std::size_t>(l)] += 1.0;
            ++assigned;
        }
    for (auto& v : f) v /= static_cast<double>(std::max<std::size_t>(assigned, 1));
    return f;
}

double BirkhoffSamples::unassigned_fraction() const noexcept {
    if (labels.empty()) return 0.0;
    std::size_t u = 0;
    for (int l : labels) u += l < 0;
    return static_cast<double>(u) / static_cast<double>(labels.size());
}

std::vector<double> BirkhoffSamples::label_variances(const Observable& obs, std::size_t j, int ell) const {
    const double n = static_cast<double>(n_list.at(j));
    std::vector<double> v = centered(obs, j);
    std::vector<std::vector<double>> groups(static_cast<std::size_t>(ell));
    for (std::size_t i = 0; i < N; ++i) {
        int l = labels.empty() ? (ell == 1 ? 0 : -1) : labels[i];
        if (l >= 0 && l < ell) groups[static_cast<std::size_t>(l)].push_back(v[i] / std::sqrt(n));
    }
    std::vector<double> out;
    for (const auto& g : groups) out.push_back(g.size() > 1 ? variance(g) : std::numeric_limits<double>::quiet_NaN());
    return out;
}

BirkhoffSamples BirkhoffSamples::head(std::size_t count) const {
    require(count <= N, "head: count exceeds the sample size");
    BirkhoffSamples out;
    out.n_list = n_list;
    out.N = count;
    out.seed = seed;
    out.raw.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(count * n_list.size()));
    if (!labels.empty()) out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
    out.starts.assign(starts.begin(), starts.begin() + static_cast<std::ptrdiff_t>(count));
    out.init_stats = init_stats;
    return out;
}

BirkhoffSamples simulate_birkhoff(const MapSpec& spec, const Observable& obs, const InitialMeasure& m,
                                  const ErgodicDecomposition* dec, const BirkhoffOptions& opts) {
    require(!opts.n_list.empty() && opts.n_list.front() >= 1, "n_list must be non-empty with n >= 1");
    require(std::is_sorted(opts.n_list.begin(), opts.n_list.end()) &&
                std::adjacent_find(opts.n_list.begin(), opts.n_list.end()) == opts.n_list.end(),
            "n_list must be strictly increasing");
    require(opts.N >= 1, "N must be positive");

    BirkhoffSamples out;
    out.n_list = opts.n_list;
    out.N = opts.N;
    out.seed = opts.seed;
    const std::size_t L = opts.n_list.size();
    const std::size_t nmax = opts.n_list.back();
    out.raw.assign(opts.N * L, 0.0);
    out.labels.assign(opts.N, 0);
    out.starts.resize(opts.N);

    const bool classify = dec && dec->ell > 1;
    if (classify) require(dec->reference_histograms.size() == static_cast<std::size_t>(dec->ell),
                          "decomposition has no reference histograms");
    const std::size_t T = classify ? std::max(nmax, static_cast<std::size_t>(opts.label_len)) : nmax;
    const std::size_t window = std::min(T, static_cast<std::size_t>(std::max(opts.label_window, 1)));

    const OrbitStepper stepper(spec);
    const FastObservable tau(obs);
    std::vector<std::uint64_t> tries(opts.N, 0);
    // orbits are advanced in interleaved batches: a single orbit is bound by
    // the latency of theta -> omega(theta) -> theta
    constexpr std::size_t B = 8;
    const std::size_t batches = (opts.N + B - 1) / B;
#pragma omp parallel for schedule(dynamic, 32)
    for (std::size_t batch = 0; batch < batches; ++batch) {
        const std::size_t i0 = batch * B, nb = std::min(B, opts.N - i0);
        std::vector<Rng> rng;
        rng.reserve(nb);
        std::vector<DigitStream> digits;
        digits.reserve(nb);
        std::array<FixedPoint, B> s{};
        std::array<double, B> sum{};
        std::array<Histogram, B> h{};
        for (std::size_t b = 0; b < nb; ++b) {
            rng.push_back(substream(opts.seed, i0 + b));
            TorusPoint p = draw_initial(m, rng[b], &tries[i0 + b]);
            out.starts[i0 + b] = p;
            s[b] = stepper.init(p, rng[b]);
            digits.emplace_back(stepper.ell(), rng[b]);
        }
        std::size_t next = 0;
        for (std::size_t t = 0; t < T; ++t) {
            if (t < nmax) {
                for (std::size_t b = 0; b < nb; ++b) sum[b] += tau.value(s[b]);
                if (t + 1 == opts.n_list[next]) {
                    for (std::size_t b = 0; b < nb; ++b) out.raw[(i0 + b) * L + next] = sum[b];
                    ++next;
                }
            }
            if (classify && t >= T - window)
                for (std::size_t b = 0; b < nb; ++b) h[b][static_cast<std::size_t>(histogram_cell(s[b]))] += 1.0;
            if (t + 1 < T)
                for (std::size_t b = 0; b < nb; ++b) stepper.step(s[b], digits[b]);
        }
        if (!classify) continue;
        for (std::size_t b = 0; b < nb; ++b) {
            for (auto& v : h[b]) v /= static_cast<double>(window);
            int best = BasinGrid::unassigned;
            double dist = opts.label_threshold;
            for (int k = 0; k < dec->ell; ++k) {
                double d = l1_distance(h[b], dec->reference_histograms[static_cast<std::size_t>(k)]);
                if (d < dist) {
                    dist = d;
                    best = k;
                }
            }
            out.labels[i0 + b] = best;
        }
    }
    out.init_stats.accepted = opts.N;
    for (auto t : tries) out.init_stats.proposals += t;
    return out;
}

double mixture_cdf(double z, const std::vector<double>& c, const std::vector<double>& sigma) noexcept {
    double F = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) F += c[k] * (sigma[k] > 0.0 ? normal_cdf(z / sigma[k]) : (z >= 0.0 ? 1.0 : 0.0));
    return F;
}

KsResult ks_distance(std::vector<double> values, const std::vector<double>& c, const std::vector<double>& sigma) {
    require(!values.empty(), "ks_distance needs samples");
    std::sort(values.begin(), values.end());
    return ks_sorted(values, c, sigma);
}

std::pair<double, double> best_single_gaussian(const std::vector<double>& values) {
    require(!values.empty(), "best_single_gaussian needs samples");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
    const double rms = std::sqrt(mean(sq));
    if (!(rms > 0.0)) return {0.0, ks_sorted(v, {1.0}, {0.0}).distance};
    auto ks = [&](double s) { return ks_sorted(v, {1.0}, {s}).distance; };

    constexpr int grid = 41;
    const double lo = std::log(0.2 * rms), hi = std::log(2.0 * rms);
    int best = 0;
    double best_ks = INFINITY;
    for (int i = 0; i < grid; ++i) {
        double d = ks(std::exp(lo + (hi - lo) * i / (grid - 1)));
        if (d < best_ks) {
            best_ks = d;
            best = i;
        }
    }
    // golden section on log sigma between the grid neighbours
    const double step = (hi - lo) / (grid - 1);
    double a = lo + step * (best - 1), b = lo + step * (best + 1);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = ks(std::exp(x1)), f2 = ks(std::exp(x2));
    for (int it = 0; it < 30; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = ks(std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = ks(std::exp(x2));
        }
    }
    double s_best = std::exp(lo + step * best);
    if (std::min(f1, f2) < best_ks) {
        best_ks = std::min(f1, f2);
        s_best = std::exp(f1 < f2 ? x1 : x2);
    }
    return {s_best, best_ks};
}

std::vector<CltRow> clt_experiment(const BirkhoffSamples& samples, const Observable& centered,
                                   const std::vector<double>& c, const std::vector<double>& sigma,
                                   const CltOptions& opts) {
    check_degenerate(c, sigma, opts.degenerate_tol);
    std::vector<CltRow> rows;
    for (std::size_t j = 0; j < samples.n_list.size(); ++j) {
        CltRow row;
        row.n = samples.n_list[j];
        std::vector<double> v = samples.centered(centered, j);
        row.var_over_n = variance(v) / static_cast<double>(row.n);
        const double root = std::sqrt(static_cast<double>(row.n));
        for (auto& x : v) x /= root;
        row.ks = ks_distance(v, c, sigma);
        if (opts.best_single) {
            auto [s, d] = best_single_gaussian(v);
            row.best_single_sigma = s;
            row.best_single_ks = d;
        } else {
            row.best_single_sigma = std::numeric_limits<double>::quiet_NaN();
            row.best_single_ks = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
    }
    return rows;
}

PowerFit berry_esseen_fit(const std::vector<std::size_t>& n, const std::vector<double>& D) {
    require(n.size() == D.size() && n.size() >= 3, "berry_esseen_fit needs at least 3 (n, D) pairs");
    const std::size_t m = n.size();
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        require(n[i] > 0 && D[i] > 0.0, "berry_esseen_fit needs positive n and D");
        x[i] = std::log(static_cast<double>(n[i]));
        y[i] = std::log(D[i]);
    }
    const double mx = mean(x), my = mean(y);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, "berry_esseen_fit needs distinct n");
    const double slope = sxy / sxx, icpt = my - slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < m; ++i) rss += std::pow(y[i] - icpt - slope * x[i], 2);
    const auto df = static_cast<double>(m - 2);
    const double s2 = rss / df;
    PowerFit f;
    f.C = std::exp(icpt);
    f.exponent = -slope;
    f.exponent_stderr = std::sqrt(s2 / sxx);
    f.log_C_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(m) + mx * mx / sxx));
    const double t = m - 2 <= t975.size() ? t975[m - 3] : 1.96;
    f.exponent_lo = f.exponent - t * f.exponent_stderr;
    f.exponent_hi = f.exponent + t * f.exponent_stderr;
    return f;
}

LltResult llt_experiment(const BirkhoffSamples& samples, const Observable& centered, std::size_t j, TriangleBump g,
                         const std::vector<double>& z_grid, const std::vector<double>& c,
                         const std::vector<double>& sigma, double degenerate_tol) {
    check_degenerate(c, sigma, degenerate_tol);
    require(g.w > 0.0, "bump width must be positive");
    LltResult r;
    r.n = samples.n_list.at(j);
    const double root = std::sqrt(static_cast<double>(r.n));
    const std::vector<double> v = samples.centered(centered, j);
    std::vector<double> gv(v.size());
    for (double z : z_grid) {
        for (std::size_t i = 0; i < v.size(); ++i) gv[i] = g(v[i] - z);
        LltPoint p;
        p.z = z;
        p.lhs = root * mean(gv);
        p.std_error = root * std::sqrt(variance(gv) / static_cast<double>(v.size()));
        for (std::size_t k = 0; k < c.size(); ++k)
            p.rhs += g.integral() * c[k] * normal_pdf(z / (sigma[k] * root)) / sigma[k];
        r.sup_error = std::max(r.sup_error, p.error());
        r.sup_in_stderr = std::max(r.sup_in_stderr, p.in_stderr());
        r.points.push_back(p);
    }
    return r;
}

IntervalLlt interval_llt(const BirkhoffSamples& samples, const Observable& centered, double a, double b, double delta,
                         const std::vector<double>& c, const std::vector<double>& sigma, double degenerate_tol) {
    check_degenerate(c, sigma, degenerate_tol);
    require(b > a && b - a < 1.0, "interval_llt needs 0 < b - a < 1");
    require(delta > 2.0, "interval_llt needs delta > 2");
    IntervalLlt out;
    out.a = a;
    out.b = b;
    out.delta = delta;
    double limit = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        limit += c[k] * (normal_cdf(b / sigma[k]) - normal_cdf(a / sigma[k]));
        peak = std::max(peak, normal_pdf(a / sigma[k]));
    }
    for (std::size_t j = 0; j < samples.n_list.size(); ++j) {
        IntervalRow row;
        row.n = samples.n_list[j];
        const double n = static_cast<double>(row.n), root = std::sqrt(n);
        const std::vector<double> v = samples.centered(centered, j);
        std::size_t hits = 0;
        for (double x : v) hits += (x / root >= a && x / root <= b);
        row.prob = static_cast<double>(hits) / static_cast<double>(v.size());
        row.limit = limit;
        row.lhs = std::abs(row.prob - limit);
        row.std_error = std::sqrt(row.prob * (1.0 - row.prob) / static_cast<double>(v.size()));
        row.bound = peak / std::pow(n, 0.5 - 1.0 / delta) + (b - a) / root;
        row.ratio = row.lhs / row.bound;
        out.rows.push_back(row);
    }
    for (std::size_t j = 0; j + 1 < out.rows.size(); ++j) out.C_fit = std::max(out.C_fit, out.rows[j].ratio);
    const IntervalRow& last = out.rows.back();
    out.bounded = out.rows.size() >= 2 && last.lhs <= out.C_fit * last.bound + 3.0 * last.std_error;
    return out;
}

} // namespace svph
