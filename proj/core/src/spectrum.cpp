#include "svph/spectrum.hpp"

#include "lapack.hpp"
#include "svph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace svph {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

std::vector<Index> order_by_modulus(const std::vector<complex>& w) {
    std::vector<Index> idx(w.size());
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
        double ma = std::abs(w[static_cast<std::size_t>(a)]), mb = std::abs(w[static_cast<std::size_t>(b)]);
        if (ma != mb) return ma > mb;
        return std::arg(w[static_cast<std::size_t>(a)]) < std::arg(w[static_cast<std::size_t>(b)]);
    });
    return idx;
}

void dense_solve(const MatrixXcd& M, int count, bool left, SpectralData& out) {
    const auto n = static_cast<lapack_int>(M.rows());
    MatrixXcd A = M, VL(left ? n : 1, left ? n : 1), VR(n, n);
    std::vector<complex> w(static_cast<std::size_t>(n));
    lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, left ? 'V' : 'N', 'V', n, A.data(), n, w.data(), VL.data(),
                                    left ? n : 1, VR.data(), n);
    if (info != 0) throw Error(ErrorCode::EigenSolverDiverged, "zgeev failed with info " + std::to_string(info));
    auto idx = order_by_modulus(w);
    out.right.resize(n, count);
    if (left) out.left.resize(n, count);
    for (int i = 0; i < count; ++i) {
        Index j = idx[static_cast<std::size_t>(i)];
        out.eigenvalues.push_back(w[static_cast<std::size_t>(j)]);
        out.right.col(i) = VR.col(j);
        if (left) out.left.col(i) = VL.col(j);
    }
    out.method = "dense-zgeev";
}

void krylov_solve(const MatrixXcd& M, int count, const SpectrumOptions& opts, SpectralData& out) {
    const Index n = M.rows();
    const double tol = 0.01 * opts.residual_factor * out.matrix_norm;
    const int basis = opts.krylov_dim > 0 ? opts.krylov_dim : std::max(2 * count + 20, 60);
    auto right = krylov_schur([&](const VectorXcd& x, VectorXcd& y) { y.noalias() = M * x; }, n, count, tol, basis,
                              opts.max_restarts);
    out.eigenvalues = right.eigenvalues;
    out.right = right.vectors;
    if (opts.left_vectors) {
        auto left = krylov_schur([&](const VectorXcd& x, VectorXcd& y) { y.noalias() = M.adjoint() * x; }, n, count,
                                 tol, basis, opts.max_restarts);
        out.left.resize(n, count);
        std::vector<bool> used(static_cast<std::size_t>(count), false);
        for (int i = 0; i < count; ++i) {
            int best = -1;
            double dist = INFINITY;
            for (int j = 0; j < count; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                double d = std::abs(std::conj(left.eigenvalues[static_cast<std::size_t>(j)]) -
                                    out.eigenvalues[static_cast<std::size_t>(i)]);
                if (d < dist) {
                    dist = d;
                    best = j;
                }
            }
            used[static_cast<std::size_t>(best)] = true;
            out.left.col(i) = left.vectors.col(best);
        }
    }
    out.method = "krylov-schur";
}

} // namespace

SpectralData spectrum(const MatrixXcd& M, int count, const SpectrumOptions& opts) {
    require(M.rows() == M.cols(), "spectrum needs a square matrix");
    require(count >= 1 && count <= M.rows(), "spectrum needs 1 <= count <= dimension");
    SpectralData out;
    out.matrix_norm = M.norm();

    const bool dense = opts.method == EigenMethod::dense ||
                       (opts.method == EigenMethod::automatic && M.rows() <= opts.dense_limit);
    if (dense) dense_solve(M, count, opts.left_vectors, out);
    else krylov_solve(M, count, opts, out);

    // re-sort (Krylov returns Schur order) and normalize
    auto idx = order_by_modulus(out.eigenvalues);
    std::vector<complex> vals;
    MatrixXcd R(M.rows(), count), L(opts.left_vectors ? M.rows() : 0, opts.left_vectors ? count : 0);
    for (int i = 0; i < count; ++i) {
        Index j = idx[static_cast<std::size_t>(i)];
        vals.push_back(out.eigenvalues[static_cast<std::size_t>(j)]);
        R.col(i) = out.right.col(j).normalized();
        if (opts.left_vectors) {
            VectorXcd l = out.left.col(j);
            complex s = l.dot(R.col(i)); // l^H r
            if (std::abs(s) < 1e-300)
                throw Error(ErrorCode::EigenSolverDiverged, "left and right eigenvectors are orthogonal");
            L.col(i) = l / std::conj(s);
        }
    }
    out.eigenvalues = std::move(vals);
    out.right = std::move(R);
    out.left = std::move(L);

    const double limit = opts.residual_factor * out.matrix_norm;
    for (int i = 0; i < count; ++i) {
        const complex lam = out.eigenvalues[static_cast<std::size_t>(i)];
        double r = (M * out.right.col(i) - lam * out.right.col(i)).norm();
        out.residuals.push_back(r);
        if (opts.left_vectors) {
            VectorXcd l = out.left.col(i);
            out.left_residuals.push_back((M.adjoint() * l - std::conj(lam) * l).norm() / l.norm());
        }
        if (!(r < limit)) {
            std::ostringstream msg;
            msg << "residual " << r << " for eigenvalue " << lam << " exceeds " << limit;
            throw Error(ErrorCode::EigenSolverDiverged, msg.str());
        }
    }

    out.peripheral_count = 0;
    for (const auto& lam : out.eigenvalues)
        if (std::abs(lam) > 1.0 - opts.gap_tol) ++out.peripheral_count;
    out.gap = out.peripheral_count < count ? std::abs(out.eigenvalues[static_cast<std::size_t>(out.peripheral_count)]) : 0.0;
    return out;
}

SpectralData spectrum(const OperatorMatrix& M, int count, const SpectrumOptions& opts) {
    return spectrum(M.entries, count, opts);
}

std::vector<double> symmetric_grid(double spacing, int half_count) {
    require(spacing > 0.0 && half_count >= 0, "symmetric_grid needs positive spacing");
    std::vector<double> g;
    for (int i = -half_count; i <= half_count; ++i) g.push_back(spacing * i);
    return g;
}

namespace {

double overlap(const VectorXcd& a, const VectorXcd& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

std::size_t grid_index(const std::vector<double>& grid, double nu) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::abs(grid[i] - nu) < 1e-12) return i;
    throw Error(ErrorCode::InvalidArgument, "nu grid lacks the stencil point " + std::to_string(nu));
}

// continuous branch of log along the path starting at the zero grid point
std::vector<complex> branch_log(const std::vector<complex>& lam, std::size_t zero) {
    std::vector<complex> out(lam.size());
    auto walk = [&](std::size_t from, int dir) {
        double prev = std::arg(lam[from]);
        out[from] = complex{std::log(std::abs(lam[from])), prev};
        for (std::size_t i = from;;) {
            if (dir < 0 && i == 0) break;
            if (dir > 0 && i + 1 == lam.size()) break;
            i = dir > 0 ? i + 1 : i - 1;
            double a = std::arg(lam[i]);
            a += two_pi * std::round((prev - a) / two_pi);
            out[i] = complex{std::log(std::abs(lam[i])), a};
            prev = a;
        }
    };
    walk(zero, -1);
    walk(zero, +1);
    return out;
}

} // namespace

TwistedCurve twisted_curve(const MapSpec& spec, const Observable& obs, const std::vector<double>& nu_grid, int K,
                           int Q, int ell, const TwistedCurveOptions& opts) {
    require(ell >= 1, "twisted_curve needs ell >= 1");
    require(nu_grid.size() >= 5, "twisted_curve needs at least five grid points");
    const std::size_t G = nu_grid.size();
    for (std::size_t i = 0; i < G; ++i)
        require(std::abs(nu_grid[i] + nu_grid[G - 1 - i]) < 1e-12, "nu grid must be symmetric about 0");
    const double spacing = nu_grid[1] - nu_grid[0];
    for (std::size_t i = 1; i < G; ++i)
        require(std::abs(nu_grid[i] - nu_grid[i - 1] - spacing) < 1e-12 && spacing > 0.0,
                "nu grid must be increasing and evenly spaced");
    require(spacing <= 0.05 + 1e-12, "nu grid spacing must be <= 0.05");

    TwistedCurve tc;
    tc.nu_grid = nu_grid;
    tc.h = opts.h > 0.0 ? opts.h : 2.0 * spacing;
    const std::size_t zero = grid_index(nu_grid, 0.0);

    const int candidates = std::min<int>(ell + opts.extra_candidates, static_cast<int>(ModeBox(K).size()));
    std::vector<SpectralData> spectra(G);
    std::vector<std::exception_ptr> errors(G);
    SpectrumOptions sopts = opts.spectrum;
    sopts.left_vectors = false;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < G; ++i) {
        try {
            spectra[i] = spectrum(assemble(spec, obs, nu_grid[i], K, Q), candidates, sopts);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    tc.branches.assign(static_cast<std::size_t>(ell), std::vector<complex>(G));
    std::vector<VectorXcd> seed(static_cast<std::size_t>(ell));
    for (int k = 0; k < ell; ++k) {
        tc.branches[static_cast<std::size_t>(k)][zero] = spectra[zero].eigenvalues[static_cast<std::size_t>(k)];
        seed[static_cast<std::size_t>(k)] = spectra[zero].right.col(k);
    }

    auto continue_from_zero = [&](int dir) {
        std::vector<VectorXcd> prev = seed;
        std::vector<complex> prev_val(static_cast<std::size_t>(ell));
        for (int k = 0; k < ell; ++k) prev_val[static_cast<std::size_t>(k)] = tc.branches[static_cast<std::size_t>(k)][zero];
        for (std::size_t i = zero;;) {
            if (dir < 0 && i == 0) break;
            if (dir > 0 && i + 1 == G) break;
            i = dir > 0 ? i + 1 : i - 1;
            const SpectralData& s = spectra[i];
            std::vector<bool> taken(s.eigenvalues.size(), false);
            for (int k = 0; k < ell; ++k) {
                auto kk = static_cast<std::size_t>(k);
                int best = -1;
                double best_ov = -1.0, best_dist = INFINITY;
                for (std::size_t c = 0; c < s.eigenvalues.size(); ++c) {
                    if (taken[c]) continue;
                    double ov = overlap(prev[kk], s.right.col(static_cast<Index>(c)));
                    double dist = std::abs(s.eigenvalues[c] - prev_val[kk]);
                    if (ov > best_ov + 1e-9 || (std::abs(ov - best_ov) <= 1e-9 && dist < best_dist)) {
                        best = static_cast<int>(c);
                        best_ov = ov;
                        best_dist = dist;
                    }
                }
                tc.min_overlap = std::min(tc.min_overlap, best_ov);
                if (best < 0 || best_ov < opts.overlap_threshold) {
                    std::ostringstream msg;
                    msg << "branch " << k << " overlap " << best_ov << " < " << opts.overlap_threshold
                        << " at nu = " << nu_grid[i];
                    throw Error(ErrorCode::BranchMatchingFailed, msg.str());
                }
                taken[static_cast<std::size_t>(best)] = true;
                tc.branches[kk][i] = s.eigenvalues[static_cast<std::size_t>(best)];
                prev[kk] = s.right.col(best);
                prev_val[kk] = s.eigenvalues[static_cast<std::size_t>(best)];
            }
        }
    };
    continue_from_zero(-1);
    continue_from_zero(+1);
    tc.matched = true;

    const double h = tc.h;
    const std::size_t ip1 = grid_index(nu_grid, h), ip2 = grid_index(nu_grid, 2 * h);
    const std::size_t im1 = grid_index(nu_grid, -h), im2 = grid_index(nu_grid, -2 * h);
    const std::size_t jp1 = grid_index(nu_grid, h / 2), jm1 = grid_index(nu_grid, -h / 2);
    tc.richardson_ok = true;
    for (int k = 0; k < ell; ++k) {
        auto lg = branch_log(tc.branches[static_cast<std::size_t>(k)], zero);
        auto d1 = [&](std::size_t a2, std::size_t a1, std::size_t b1, std::size_t b2, double step) {
            return (-lg[a2] + 8.0 * lg[a1] - 8.0 * lg[b1] + lg[b2]) / (12.0 * step);
        };
        auto d2 = [&](std::size_t a2, std::size_t a1, std::size_t b1, std::size_t b2, double step) {
            return (-lg[a2] + 16.0 * lg[a1] - 30.0 * lg[zero] + 16.0 * lg[b1] - lg[b2]) / (12.0 * step * step);
        };
        complex first = d1(ip2, ip1, im1, im2, h);
        complex second = d2(ip2, ip1, im1, im2, h);
        complex second_half = d2(ip1, jp1, jm1, im1, h / 2);
        tc.mu_tau.push_back((first / complex{0.0, 1.0}).real());
        tc.sigma2.push_back(-second.real());
        tc.sigma2_half.push_back(-second_half.real());
        double delta = std::abs(second.real() - second_half.real());
        tc.richardson_delta.push_back(delta);
        if (!(delta <= opts.richardson_tol)) tc.richardson_ok = false;
    }
    return tc;
}

std::vector<DiskDiagnostic> unit_disk_diagnostic(const MapSpec& spec, const Observable& obs,
                                                 const std::vector<double>& nu_list, int K, int Q,
                                                 const SpectrumOptions& opts) {
    for (double nu : nu_list) require(nu != 0.0, "unit_disk_diagnostic excludes nu = 0");
    std::vector<DiskDiagnostic> out(nu_list.size());
    SpectrumOptions sopts = opts;
    sopts.left_vectors = false;
    std::vector<std::exception_ptr> errors(nu_list.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < nu_list.size(); ++i) {
        try {
            auto s = spectrum(assemble(spec, obs, nu_list[i], K, Q), 1, sopts);
            out[i].nu = nu_list[i];
            out[i].max_modulus = std::abs(s.eigenvalues.front());
            out[i].flagged = out[i].max_modulus >= 1.0 - 1e-4;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace svph
