#include "svph/map.hpp"

#include "svph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svph {

std::string_view to_string(MapKind kind) noexcept {
    switch (kind) {
    case MapKind::skew_linear: return "skew_linear";
    case MapKind::skew_general: return "skew_general";
    case MapKind::fast_slow: return "fast_slow";
    }
    return "skew_linear";
}

MapKind map_kind_from_string(std::string_view name) {
    if (name == "skew_linear") return MapKind::skew_linear;
    if (name == "skew_general") return MapKind::skew_general;
    if (name == "fast_slow") return MapKind::fast_slow;
    throw Error(ErrorCode::ValidationError, "unknown map kind '" + std::string(name) + "'");
}

MapSpec make_map(MapKind kind, int ell, FourierSeries f_coeffs, FourierSeries omega_coeffs, double epsilon) {
    std::vector<std::string> problems;
    if (ell < 1) problems.emplace_back("ell must be a positive integer");
    if (kind == MapKind::skew_linear && !f_coeffs.empty())
        problems.emplace_back("skew_linear maps have f(x, theta) = ell x exactly; f_coeffs must be empty");
    if (kind == MapKind::fast_slow && !(epsilon >= 0.0)) problems.emplace_back("epsilon must be >= 0");
    if (!f_coeffs.is_hermitian(1e-12)) problems.emplace_back("f_coeffs is not Hermitian-symmetric");
    if (!omega_coeffs.is_hermitian(1e-12)) problems.emplace_back("omega_coeffs is not Hermitian-symmetric");
    if (!problems.empty()) {
        std::ostringstream msg;
        for (std::size_t i = 0; i < problems.size(); ++i) msg << (i ? "; " : "") << problems[i];
        throw Error(ErrorCode::ValidationError, msg.str());
    }

    MapSpec spec{kind, ell, std::move(f_coeffs), std::move(omega_coeffs), epsilon, ell};

    const int band = std::max(spec.f_coeffs.band(), spec.omega_coeffs.band());
    const int n = std::max(64, 4 * band + 8);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            TorusPoint p{(i + 0.5) / n, (j + 0.5) / n};
            if (!(jacobian_unchecked(spec, p).det > 0.0)) {
                std::ostringstream msg;
                msg << "det DF <= 0 at (" << p.x << ", " << p.theta << ")";
                throw Error(ErrorCode::ValidationError, msg.str());
            }
        }

    const double integral = degree_integral(spec);
    const double nearest = std::round(integral);
    if (std::abs(integral - nearest) > 1e-8 || static_cast<int>(nearest) != ell) {
        std::ostringstream msg;
        msg << "degree integral " << integral << " is not the integer " << ell;
        throw Error(ErrorCode::ValidationError, msg.str());
    }
    spec.degree = static_cast<int>(nearest);
    return spec;
}

std::pair<double, double> eval_lift(const MapSpec& spec, TorusPoint p) noexcept {
    double first = spec.ell * p.x;
    if (!spec.f_coeffs.empty()) first += spec.f_coeffs.value(p);
    double second = p.theta;
    if (!spec.omega_coeffs.empty()) second += spec.omega_scale() * spec.omega_coeffs.value(p);
    return {first, second};
}

TorusPoint eval_map(const MapSpec& spec, TorusPoint p) noexcept {
    auto [a, b] = eval_lift(spec, p);
    return make_point(a, b);
}

Jacobian2 jacobian_unchecked(const MapSpec& spec, TorusPoint p) noexcept {
    Jacobian2 j;
    j.a11 = spec.ell;
    j.a12 = 0.0;
    if (!spec.f_coeffs.empty()) {
        j.a11 += spec.f_coeffs.dx(p);
        j.a12 = spec.f_coeffs.dtheta(p);
    }
    const double s = spec.omega_scale();
    j.a21 = 0.0;
    j.a22 = 1.0;
    if (!spec.omega_coeffs.empty()) {
        j.a21 = s * spec.omega_coeffs.dx(p);
        j.a22 = 1.0 + s * spec.omega_coeffs.dtheta(p);
    }
    j.det = j.a11 * j.a22 - j.a12 * j.a21;
    return j;
}

Jacobian2 jacobian(const MapSpec& spec, TorusPoint p) {
    Jacobian2 j = jacobian_unchecked(spec, p);
    if (!(j.det > 0.0)) {
        std::ostringstream msg;
        msg << "det DF = " << j.det << " at (" << p.x << ", " << p.theta << ")";
        throw Error(ErrorCode::NonPositiveDeterminant, msg.str());
    }
    return j;
}

Jacobian2 operator*(const Jacobian2& a, const Jacobian2& b) noexcept {
    Jacobian2 r;
    r.a11 = a.a11 * b.a11 + a.a12 * b.a21;
    r.a12 = a.a11 * b.a12 + a.a12 * b.a22;
    r.a21 = a.a21 * b.a11 + a.a22 * b.a21;
    r.a22 = a.a21 * b.a12 + a.a22 * b.a22;
    r.det = a.det * b.det;
    return r;
}

double degree_integral(const MapSpec& spec) {
    const int band = std::max(spec.f_coeffs.band(), spec.omega_coeffs.band());
    const int n = std::max(16, 4 * band + 4);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            acc += jacobian_unchecked(spec, {static_cast<double>(i) / n, static_cast<double>(j) / n}).det;
    return acc / (static_cast<double>(n) * n);
}

namespace {

// Solve t + s omega(x, t) = theta (mod 1) for t; the left side is strictly
// increasing in t and gains exactly 1 over a period.
double solve_fiber(const MapSpec& spec, double x, double theta) {
    const double s = spec.omega_scale();
    if (spec.omega_coeffs.empty()) return theta;
    if (!spec.omega_coeffs.depends_on_theta()) return wrap_unit(theta - s * spec.omega_coeffs.value({x, 0.0}));

    auto g = [&](double t) { return t + s * spec.omega_coeffs.value({x, t}); };
    auto dg = [&](double t) { return 1.0 + s * spec.omega_coeffs.dtheta({x, t}); };
    const double g0 = g(0.0);
    const double target = theta + std::ceil(g0 - theta);
    double lo = 0.0, hi = 1.0;
    double t = std::clamp(target - g0, 0.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        double r = g(t) - target;
        if (std::abs(r) < 1e-15) break;
        if (r > 0) hi = t; else lo = t;
        double next = t - r / dg(t);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) < 1e-17) break;
        t = next;
    }
    return wrap_unit(t);
}

std::pair<double, double> residual(const MapSpec& spec, TorusPoint y, TorusPoint p) {
    auto [a, b] = eval_lift(spec, y);
    return {wrap_signed(a - p.x), wrap_signed(b - p.theta)};
}

} // namespace

namespace {

// Damped Newton on the lifted residual; returns the residual norm reached.
double newton_polish(const MapSpec& spec, TorusPoint& y, TorusPoint p) {
    auto r = residual(spec, y, p);
    double rn = std::hypot(r.first, r.second);
    for (int it = 0; it < 60 && rn > 1e-15; ++it) {
        Jacobian2 J = jacobian_unchecked(spec, y);
        if (!(J.det > 0.0)) break;
        double dx = (J.a22 * r.first - J.a12 * r.second) / J.det;
        double dt = (-J.a21 * r.first + J.a11 * r.second) / J.det;
        double alpha = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h, alpha *= 0.5) {
            TorusPoint trial = make_point(y.x - alpha * dx, y.theta - alpha * dt);
            auto rt = residual(spec, trial, p);
            double rtn = std::hypot(rt.first, rt.second);
            if (rtn < rn) {
                y = trial;
                r = rt;
                rn = rtn;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return rn;
}

void add_root(std::vector<TorusPoint>& roots, TorusPoint y, double tol) {
    bool duplicate = std::any_of(roots.begin(), roots.end(), [&](TorusPoint q) {
        return toroidal_distance(q, y) < tol;
    });
    if (!duplicate) roots.push_back(y);
}

} // namespace

std::vector<TorusPoint> preimages(const MapSpec& spec, TorusPoint p, const PreimageOptions& opts) {
    std::vector<TorusPoint> roots;
    if (spec.linear_base()) {
        roots.reserve(static_cast<std::size_t>(spec.ell));
        for (int j = 0; j < spec.ell; ++j) {
            double x = (p.x + j) / spec.ell;
            roots.push_back(make_point(x, solve_fiber(spec, x, p.theta)));
        }
        return roots;
    }

    auto sorted = [&] {
        std::sort(roots.begin(), roots.end(), [](TorusPoint a, TorusPoint b) {
            return a.x != b.x ? a.x < b.x : a.theta < b.theta;
        });
        return roots;
    };

    // one seed per branch of the linear part; the seed lattice is the fallback
    if (opts.branch_seeds) {
        for (int j = 0; j < spec.ell; ++j) {
            double x = (p.x + j) / spec.ell;
            TorusPoint y = make_point(x, solve_fiber(spec, x, p.theta));
            if (newton_polish(spec, y, p) <= opts.residual_tol) add_root(roots, y, opts.dedupe_tol);
        }
        if (static_cast<int>(roots.size()) == spec.degree) return sorted();
        roots.clear();
    }

    const int G = opts.seed_grid > 0 ? opts.seed_grid : 8 * spec.degree;
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j) {
            TorusPoint y{(i + 0.5) / G, (j + 0.5) / G};
            if (newton_polish(spec, y, p) <= opts.residual_tol) add_root(roots, y, opts.dedupe_tol);
        }

    if (static_cast<int>(roots.size()) != spec.degree) {
        std::ostringstream msg;
        msg << "found " << roots.size() << " preimages, expected " << spec.degree << " (seed grid " << G << ")";
        throw Error(ErrorCode::RootCountMismatch, msg.str());
    }
    return sorted();
}

std::vector<TorusPoint> orbit(const MapSpec& spec, TorusPoint p, std::size_t n) {
    std::vector<TorusPoint> out;
    out.reserve(n + 1);
    out.push_back(p);
    for (std::size_t k = 0; k < n; ++k) out.push_back(eval_map(spec, out.back()));
    return out;
}

Jacobian2 jacobian_power(const MapSpec& spec, TorusPoint p, std::size_t n) {
    Jacobian2 acc;
    TorusPoint z = p;
    for (std::size_t k = 0; k < n; ++k) {
        acc = jacobian_unchecked(spec, z) * acc;
        z = eval_map(spec, z);
    }
    return acc;
}

} // namespace svph
