#include "svph/hyperbolicity.hpp"

#include "svph/errors.hpp"
#include "svph/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

namespace svph {

void ConeParams::validate() const {
    if (!(chi_u > 0.0 && chi_u < 1.0)) throw Error(ErrorCode::ValidationError, "chi_u must lie in (0, 1)");
    if (!(chi_c > 0.0 && chi_c <= 1.0)) throw Error(ErrorCode::ValidationError, "chi_c must lie in (0, 1]");
}

double zeta(int r) {
    require(r >= 0 && r <= 20, "zeta(r) needs 0 <= r <= 20");
    double f = 1.0;
    for (int k = 2; k <= r + 1; ++k) f *= k;
    return 6.0 * f;
}

A15Report check_a1_a5(const MapSpec& spec, int grid) {
    require(grid >= 16, "check_a1_a5 needs grid >= 16");
    A15Report rep;
    const double s = spec.omega_scale();
    double sup_dx_omega = 0.0;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            TorusPoint p{static_cast<double>(i) / grid, static_cast<double>(j) / grid};
            sup_dx_omega = std::max(sup_dx_omega, std::abs(s * spec.omega_coeffs.dx(p)));
        }
    rep.sup_dx_omega = sup_dx_omega;
    rep.min_det = INFINITY;
    rep.a5_margin = INFINITY;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            TorusPoint p{static_cast<double>(i) / grid, static_cast<double>(j) / grid};
            Jacobian2 J = jacobian_unchecked(spec, p);
            rep.min_det = std::min(rep.min_det, J.det);
            double bound = std::max(2.0 * (1.0 + sup_dx_omega), std::abs(J.a12));
            rep.a5_margin = std::min(rep.a5_margin, J.a11 - bound);
        }
    rep.a1_ok = rep.min_det > 0.0;
    return rep;
}

bool ConeReport::a2_ok() const noexcept {
    return iota_star < 1.0 && lambda > 1.0 && lambda > lambda_c_plus;
}

namespace {

// 2x2 product kept as exp(log_scale) * M with max |entry| = 1.
struct ScaledMatrix {
    double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
    double log_scale = 0.0;
    double log_det = 0.0;

    void left_multiply(const Jacobian2& J) {
        double a = J.a11 * m11 + J.a12 * m21;
        double b = J.a11 * m12 + J.a12 * m22;
        double c = J.a21 * m11 + J.a22 * m21;
        double d = J.a21 * m12 + J.a22 * m22;
        double s = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
        m11 = a / s;
        m12 = b / s;
        m21 = c / s;
        m22 = d / s;
        log_scale += std::log(s);
        log_det += std::log(J.det);
    }
};

// min and max of |M v| over unit v with direction angle in [lo, hi] (hi - lo < pi).
std::pair<double, double> norm_range(double m11, double m12, double m21, double m22, double lo, double hi) {
    auto norm_at = [&](double a) {
        double c = std::cos(a), s = std::sin(a);
        return std::hypot(m11 * c + m12 * s, m21 * c + m22 * s);
    };
    double mn = std::min(norm_at(lo), norm_at(hi));
    double mx = std::max(norm_at(lo), norm_at(hi));
    // stationary directions of |Mv|^2 are the eigenvectors of M^T M
    double s11 = m11 * m11 + m21 * m21, s22 = m12 * m12 + m22 * m22, s12 = m11 * m12 + m21 * m22;
    double phi = 0.5 * std::atan2(2.0 * s12, s11 - s22);
    for (double a : {phi, phi + 0.5 * std::numbers::pi}) {
        double shifted = a + std::numbers::pi * std::ceil((lo - a) / std::numbers::pi);
        if (shifted <= hi) {
            double v = norm_at(shifted);
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
    }
    return {mn, mx};
}

double tail_slope(const std::vector<double>& logs, std::size_t from) {
    // least squares slope of logs[n-1] against n for n in [from, size]
    double sn = 0, sy = 0, snn = 0, sny = 0;
    std::size_t count = 0;
    for (std::size_t n = from; n <= logs.size(); ++n) {
        double x = static_cast<double>(n), y = logs[n - 1];
        sn += x;
        sy += y;
        snn += x * x;
        sny += x * y;
        ++count;
    }
    if (count < 2) return logs.empty() ? 0.0 : logs.back() / static_cast<double>(logs.size());
    double c = static_cast<double>(count);
    return (c * sny - sn * sy) / (c * snn - sn * sn);
}

} // namespace

ConeReport check_cones(const MapSpec& spec, const ConeParams& cones, int grid, int n_max, const ConeOptions& opts) {
    cones.validate();
    require(grid >= 2, "check_cones needs grid >= 2");
    require(n_max >= 1 && n_max <= 30, "check_cones needs 1 <= n_max <= 30");

    ConeReport rep;
    rep.r = opts.r;
    rep.zeta_r = zeta(opts.r);
    rep.a5_margin = check_a1_a5(spec, std::max(grid, 16)).a5_margin;

    const double chi_u = cones.chi_u, chi_c = cones.chi_c;
    const double alpha = std::numbers::phi - 1.0, beta = std::numbers::sqrt2 - 1.0;
    const double out_c = std::atan(1.0 / chi_c); // complement of C_c: |angle| < out_c

    std::vector<double> log_lm(static_cast<std::size_t>(n_max), INFINITY), log_lp(static_cast<std::size_t>(n_max), -INFINITY);
    std::vector<double> log_cm(static_cast<std::size_t>(n_max), INFINITY), log_cp(static_cast<std::size_t>(n_max), -INFINITY);
    double min_det = INFINITY, iota_u = 0.0, iota_c = 0.0;

    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            TorusPoint z{(i + alpha) / grid, (j + beta) / grid};
            Jacobian2 J = jacobian_unchecked(spec, z);
            min_det = std::min(min_det, J.det);

            for (double sgn : {-1.0, 1.0}) {
                double xi = J.a11 + J.a12 * sgn * chi_u;
                double eta = J.a21 + J.a22 * sgn * chi_u;
                double ratio = xi > 0.0 ? std::abs(eta / xi) / chi_u : INFINITY;
                if (!(ratio < 1.0)) {
                    std::ostringstream msg;
                    msg << "DF(" << z.x << ", " << z.theta << ") maps (1, " << sgn * chi_u
                        << ") to slope ratio " << ratio << " >= 1 (chi_u = " << chi_u << ")";
                    throw Error(ErrorCode::ConeNotInvariant, msg.str());
                }
                iota_u = std::max(iota_u, ratio);

                // (DF)^{-1} (sgn chi_c, 1) up to the positive factor 1/det
                double w_xi = J.a22 * sgn * chi_c - J.a12;
                double w_eta = -J.a21 * sgn * chi_c + J.a11;
                double rc = w_eta > 0.0 ? std::abs(w_xi / w_eta) / chi_c : INFINITY;
                iota_c = std::max(iota_c, rc);
            }

            ScaledMatrix P;
            TorusPoint w = z;
            for (int n = 1; n <= n_max; ++n) {
                P.left_multiply(jacobian_unchecked(spec, w));
                w = eval_map(spec, w);
                auto k = static_cast<std::size_t>(n - 1);
                auto [mn, mx] = norm_range(P.m11, P.m12, P.m21, P.m22, -out_c, out_c);
                log_lm[k] = std::min(log_lm[k], P.log_scale + std::log(mn));
                log_lp[k] = std::max(log_lp[k], P.log_scale + std::log(mx));
                // (P)^{-1} = exp(log_scale - log_det) adj(P^)
                auto [cmn, cmx] = norm_range(P.m22, -P.m12, -P.m21, P.m11, out_c, std::numbers::pi - out_c);
                double shift = P.log_scale - P.log_det;
                log_cm[k] = std::min(log_cm[k], shift + std::log(cmn));
                log_cp[k] = std::max(log_cp[k], shift + std::log(cmx));
            }
        }

    rep.a1_ok = min_det > 0.0;
    rep.iota_u = iota_u;
    rep.iota_c = iota_c;
    rep.iota_star = std::max(iota_u, iota_c);

    auto expv = [](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::exp(x); });
        return out;
    };
    rep.lambda_minus_n = expv(log_lm);
    rep.lambda_plus_n = expv(log_lp);
    rep.lambda_c_minus_n = expv(log_cm);
    rep.lambda_c_plus_n = expv(log_cp);

    const std::size_t from = std::max<std::size_t>(1, static_cast<std::size_t>((n_max + 1) / 2));
    rep.fit_from = from;
    const double s_lm = tail_slope(log_lm, from), s_lp = tail_slope(log_lp, from);
    const double s_cm = tail_slope(log_cm, from), s_cp = tail_slope(log_cp, from);
    rep.lambda = std::exp(s_lm);
    rep.Lambda = std::exp(s_lp);
    rep.lambda_c_minus = std::exp(s_cm);
    rep.lambda_c_plus = std::exp(s_cp);

    // smallest C_star making every sampled bound hold with the fitted rates
    double log_c = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_max); ++k) {
        double n = static_cast<double>(k + 1);
        log_c = std::max({log_c, n * s_lm - log_lm[k], log_lp[k] - n * s_lp, n * s_cm - log_cm[k],
                          log_cp[k] - n * s_cp});
    }
    rep.C_star = std::exp(log_c);
    rep.lambda_c = std::max({rep.lambda_c_plus, 1.0 / rep.lambda_c_minus, 1.0});
    rep.pinching_margin = s_lm - rep.zeta_r * s_cp;
    return rep;
}

double line_angle(double xi, double eta) noexcept {
    double a = std::atan2(eta, xi);
    if (a > 0.5 * std::numbers::pi) a -= std::numbers::pi;
    else if (a <= -0.5 * std::numbers::pi) a += std::numbers::pi;
    return a;
}

AngleInterval push_cone(const Jacobian2& J, double chi_u) noexcept {
    double a = line_angle(J.a11 - J.a12 * chi_u, J.a21 - J.a22 * chi_u);
    double b = line_angle(J.a11 + J.a12 * chi_u, J.a21 + J.a22 * chi_u);
    return {std::min(a, b), std::max(a, b)};
}

AngleInterval push_interval(const Jacobian2& J, const AngleInterval& iv) noexcept {
    auto image = [&](double t) {
        double c = std::cos(t), s = std::sin(t);
        return line_angle(J.a11 * c + J.a12 * s, J.a21 * c + J.a22 * s);
    };
    double a = image(iv.lo), b = image(iv.hi);
    return {std::min(a, b), std::max(a, b)};
}

AngleInterval image_cone_angles(const MapSpec& spec, TorusPoint z, int n, double chi_u) {
    require(n >= 1, "image_cone_angles needs n >= 1");
    return push_cone(jacobian_power(spec, z, static_cast<std::size_t>(n)), chi_u);
}

namespace {

struct Branch {
    AngleInterval cone;
    double weight; // |det D_z F^n|^{-1}
};

void enumerate(const MapSpec& spec, TorusPoint w, int depth, const Jacobian2& prefix, double chi_u,
               std::vector<Branch>& out) {
    if (depth == 0) {
        out.push_back({push_cone(prefix, chi_u), 1.0 / std::abs(prefix.det)});
        return;
    }
    for (TorusPoint y : preimages(spec, w)) {
        Jacobian2 next = prefix * jacobian_unchecked(spec, y);
        enumerate(spec, y, depth - 1, next, chi_u, out);
    }
}

// max over z1 of the weight of branches whose cones meet z1's cone
double max_nontransversal(const std::vector<Branch>& b) {
    const std::size_t m = b.size();
    std::vector<std::size_t> by_lo(m), by_hi(m);
    for (std::size_t i = 0; i < m; ++i) by_lo[i] = by_hi[i] = i;
    std::sort(by_lo.begin(), by_lo.end(), [&](auto i, auto j) { return b[i].cone.lo < b[j].cone.lo; });
    std::sort(by_hi.begin(), by_hi.end(), [&](auto i, auto j) { return b[i].cone.hi < b[j].cone.hi; });
    std::vector<double> lo_keys(m), hi_keys(m), lo_suffix(m + 1, 0.0), hi_prefix(m + 1, 0.0);
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        lo_keys[k] = b[by_lo[k]].cone.lo;
        hi_keys[k] = b[by_hi[k]].cone.hi;
        hi_prefix[k + 1] = hi_prefix[k] + b[by_hi[k]].weight;
        total += b[k].weight;
    }
    for (std::size_t k = m; k-- > 0;) lo_suffix[k] = lo_suffix[k + 1] + b[by_lo[k]].weight;
    double best = 0.0;
    for (const auto& z1 : b) {
        // disjoint: hi < z1.lo or lo > z1.hi
        auto below = static_cast<std::size_t>(std::lower_bound(hi_keys.begin(), hi_keys.end(), z1.cone.lo) - hi_keys.begin());
        auto above = static_cast<std::size_t>(std::upper_bound(lo_keys.begin(), lo_keys.end(), z1.cone.hi) - lo_keys.begin());
        best = std::max(best, total - hi_prefix[below] - lo_suffix[above]);
    }
    return best;
}

// max over lines L of the weight of cones containing L; attained at a left endpoint
double max_coverage(const std::vector<Branch>& b) {
    std::vector<std::pair<double, double>> events; // (angle, +w at lo / -w after hi)
    events.reserve(2 * b.size());
    for (const auto& z : b) {
        events.emplace_back(z.cone.lo, z.weight);
        events.emplace_back(z.cone.hi, -z.weight);
    }
    // closed intervals: process openings before closings at equal angles
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& c) {
        return a.first != c.first ? a.first < c.first : a.second > c.second;
    });
    double cur = 0.0, best = 0.0;
    for (const auto& [angle, w] : events) {
        cur += w;
        best = std::max(best, cur);
    }
    return best;
}

double max_on_grid(const std::vector<Branch>& b, int lines) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& z : b) {
        lo = std::min(lo, z.cone.lo);
        hi = std::max(hi, z.cone.hi);
    }
    double best = 0.0;
    for (int q = 0; q < lines; ++q) {
        double a = lines == 1 ? lo : lo + (hi - lo) * static_cast<double>(q) / (lines - 1);
        if (q == lines - 1) a = hi;
        double s = 0.0;
        for (const auto& z : b)
            if (z.cone.contains(a)) s += z.weight;
        best = std::max(best, s);
    }
    return best;
}

} // namespace

TransversalityRow transversality_sums(const MapSpec& spec, int n, std::size_t samples, const TransversalityOptions& opts) {
    require(n >= 1, "transversality_sums needs n >= 1");
    require(samples >= 1, "transversality_sums needs samples >= 1");
    require(opts.line_grid >= 2, "line grid needs at least two angles");
    const double leaves = std::pow(static_cast<double>(spec.degree), n);
    if (leaves * static_cast<double>(samples) > static_cast<double>(opts.budget)) {
        std::ostringstream msg;
        msg << "degree^n * samples = " << leaves * static_cast<double>(samples) << " exceeds budget " << opts.budget;
        throw Error(ErrorCode::BudgetExceeded, msg.str());
    }

    std::vector<TransversalityRow> per(samples);
    std::vector<std::exception_ptr> errors(samples);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < samples; ++s) {
        try {
            Rng rng = substream(opts.seed, s);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            TorusPoint y{u(rng), u(rng)};
            std::vector<Branch> branches;
            branches.reserve(static_cast<std::size_t>(leaves));
            enumerate(spec, y, n, Jacobian2{}, opts.chi_u, branches);
            per[s].N_F = max_nontransversal(branches);
            per[s].N_tilde = max_coverage(branches);
            per[s].N_tilde_grid = max_on_grid(branches, opts.line_grid);
            per[s].N_tilde_fine = max_on_grid(branches, 2 * opts.line_grid - 1);
            per[s].preimages_per_sample = branches.size();
        } catch (...) {
            errors[s] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    TransversalityRow row;
    row.n = n;
    for (const auto& p : per) {
        row.N_F = std::max(row.N_F, p.N_F);
        row.N_tilde = std::max(row.N_tilde, p.N_tilde);
        row.N_tilde_grid = std::max(row.N_tilde_grid, p.N_tilde_grid);
        row.N_tilde_fine = std::max(row.N_tilde_fine, p.N_tilde_fine);
        row.preimages_per_sample = p.preimages_per_sample;
    }
    row.rate = std::pow(row.N_tilde, 1.0 / n);
    return row;
}

TransversalityReport a6_rate(const MapSpec& spec, const std::vector<int>& n_range, std::size_t samples,
                             const TransversalityOptions& opts) {
    require(!n_range.empty(), "a6_rate needs a non-empty n range");
    require(std::is_sorted(n_range.begin(), n_range.end()) &&
                std::adjacent_find(n_range.begin(), n_range.end()) == n_range.end(),
            "a6_rate needs an increasing n range");
    TransversalityReport rep;
    rep.n_values = n_range;
    rep.samples = samples;
    rep.seed = opts.seed;
    rep.chi_u = opts.chi_u;
    for (int n : n_range) rep.rows.push_back(transversality_sums(spec, n, samples, opts));
    rep.a6_ok = rep.rows.back().rate < 1.0 - 1e-3;
    return rep;
}

} // namespace svph
