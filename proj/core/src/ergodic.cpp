#include "svph/ergodic.hpp"

#include "svph/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace svph {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;

// A(k + K, i) = int_{i/G}^{(i+1)/G} e^{-2 pi i k x} dx
MatrixXcd cell_integrals(int K, int G) {
    MatrixXcd A(2 * K + 1, G);
    for (int k = -K; k <= K; ++k)
        for (int i = 0; i < G; ++i) {
            double a = static_cast<double>(i) / G, b = static_cast<double>(i + 1) / G;
            if (k == 0) {
                A(k + K, i) = b - a;
            } else {
                complex w{0.0, -two_pi * k};
                A(k + K, i) = (std::exp(w * b) - std::exp(w * a)) / w;
            }
        }
    return A;
}

CoeffVector hermitian_part(const CoeffVector& v, const ModeBox& box) {
    CoeffVector out(v.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        out[static_cast<Index>(i)] = 0.5 * (v[static_cast<Index>(i)] + std::conj(v[static_cast<Index>(box.index(-m))]));
    }
    return out;
}

bool is_root_of_unity(complex z) {
    complex p = z;
    for (int q = 1; q <= 24; ++q, p *= z)
        if (std::abs(p - 1.0) < 1e-3) return true;
    return false;
}

} // namespace

double ErgodicDecomposition::rho_mass(int k) const {
    return lebesgue_mean(rho.at(static_cast<std::size_t>(k)), box()).real();
}

complex ErgodicDecomposition::dual_apply(int k, const CoeffVector& f) const {
    return pairing(dual.at(static_cast<std::size_t>(k)), f);
}

double ErgodicDecomposition::acip_expectation(int k, const FourierSeries& phi) const {
    return integrate_product(phi, rho.at(static_cast<std::size_t>(k)), box()).real() / rho_mass(k);
}

Histogram orbit_histogram(const OrbitStepper& stepper, TorusPoint start, int burn, int len, Rng& rng) {
    Histogram h{};
    FixedPoint s = stepper.init(start, rng);
    DigitStream digits(stepper.ell(), rng);
    for (int t = 0; t < burn; ++t) stepper.step(s, digits);
    for (int t = 0; t < len; ++t) {
        h[static_cast<std::size_t>(histogram_cell(s))] += 1.0;
        stepper.step(s, digits);
    }
    for (auto& v : h) v /= std::max(len, 1);
    return h;
}

Histogram density_histogram(const CoeffVector& v, const ModeBox& box) {
    Histogram h{};
    const double mass = lebesgue_mean(v, box).real();
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double x0 = a / 4.0 - 0.125, t0 = b / 4.0 - 0.125;
            complex acc{};
            for (std::size_t i = 0; i < box.size(); ++i)
                acc += v[static_cast<Index>(i)] * rectangle_integral(box.mode(i), x0, x0 + 0.25, t0, t0 + 0.25);
            h[static_cast<std::size_t>(a * 4 + b)] = acc.real() / mass;
        }
    return h;
}

double l1_distance(const Histogram& a, const Histogram& b) noexcept {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

CoeffVector indicator_coefficients(const BasinGrid& basins, int k, const ModeBox& box) {
    const int G = basins.size, K = box.K();
    MatrixXcd A = cell_integrals(K, G);
    MatrixXcd mask = MatrixXcd::Zero(G, G);
    for (int i = 0; i < G; ++i)
        for (int j = 0; j < G; ++j)
            if (basins.labels[static_cast<std::size_t>(i) * static_cast<std::size_t>(G) + static_cast<std::size_t>(j)] == k)
                mask(i, j) = 1.0;
    MatrixXcd C = A * mask * A.transpose();
    CoeffVector v(static_cast<Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) {
        Mode m = box.mode(i);
        v[static_cast<Index>(i)] = C(m.k1 + K, m.k2 + K);
    }
    return v;
}

complex basin_integral(const CoeffVector& f, const ModeBox& box, const BasinGrid& basins, int k) {
    CoeffVector ind = indicator_coefficients(basins, k, box);
    // Leb(f 1_D) = sum_m f_m * (coefficient of 1_D at -m)
    complex acc{};
    for (std::size_t i = 0; i < box.size(); ++i)
        acc += f[static_cast<Index>(i)] * ind[static_cast<Index>(box.index(-box.mode(i)))];
    return acc / (1.0 - basins.unassigned_fraction());
}

ErgodicDecomposition decompose(const MapSpec& spec, const OperatorMatrix& M, const SpectralData& spectral,
                               const DecomposeOptions& opts) {
    require(opts.grid >= 4 && opts.orbit_len >= 1 && opts.burn >= 0, "decompose needs grid >= 4 and orbit_len >= 1");
    require(spectral.left.cols() == static_cast<Index>(spectral.eigenvalues.size()),
            "decompose needs left eigenvectors");
    require(static_cast<int>(spectral.eigenvalues.size()) >= spectral.peripheral_count + 1,
            "decompose needs count >= peripheral_count + 1");

    ErgodicDecomposition dec;
    dec.K = M.K;
    const ModeBox box(M.K);
    std::vector<int> unit; // indices of eigenvalues near 1
    for (std::size_t i = 0; i < spectral.eigenvalues.size(); ++i) {
        complex lam = spectral.eigenvalues[i];
        if (std::abs(lam) <= 1.0 - opts.gap_tol) continue;
        if (std::abs(lam - 1.0) <= opts.gap_tol) unit.push_back(static_cast<int>(i));
        else dec.peripheral_extras.push_back(lam);
    }
    for (complex z : dec.peripheral_extras) dec.extras_roots_of_unity = dec.extras_roots_of_unity && is_root_of_unity(z);
    dec.ell = static_cast<int>(unit.size());
    for (int i : unit) dec.eigenvalues.push_back(spectral.eigenvalues[static_cast<std::size_t>(i)]);
    if (dec.ell == 0) throw Error(ErrorCode::DecompositionInconsistent, "no eigenvalue near 1");

    // orbit histograms of every grid cell
    const int G = opts.grid;
    const std::size_t cells = static_cast<std::size_t>(G) * static_cast<std::size_t>(G);
    std::vector<Histogram> hist(cells);
    const OrbitStepper stepper(spec);
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < cells; ++c) {
        Rng rng = substream(opts.seed, c);
        // a uniform point of the cell; dyadic centres would feed the doubling
        // a long run of zero digits
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double ux = u(rng), ut = u(rng);
        TorusPoint start{(static_cast<double>(c / static_cast<std::size_t>(G)) + ux) / G,
                         (static_cast<double>(c % static_cast<std::size_t>(G)) + ut) / G};
        hist[c] = orbit_histogram(stepper, start, opts.burn, opts.orbit_len, rng);
    }

    // leader clustering against running cluster means
    std::vector<Histogram> centers;
    std::vector<std::size_t> sizes;
    std::vector<int> cluster(cells, -1);
    for (std::size_t c = 0; c < cells; ++c) {
        int best = -1;
        double dist = INFINITY;
        for (std::size_t q = 0; q < centers.size(); ++q) {
            double d = l1_distance(hist[c], centers[q]);
            if (d < dist) {
                dist = d;
                best = static_cast<int>(q);
            }
        }
        if (best < 0 || dist >= opts.threshold) {
            centers.push_back(hist[c]);
            sizes.push_back(1);
            cluster[c] = static_cast<int>(centers.size() - 1);
        } else {
            auto q = static_cast<std::size_t>(best);
            ++sizes[q];
            for (std::size_t b = 0; b < 16; ++b) centers[q][b] += (hist[c][b] - centers[q][b]) / static_cast<double>(sizes[q]);
            cluster[c] = best;
        }
    }
    // merge clusters whose means are closer than the threshold (leader
    // clustering splits a single noisy cloud)
    std::vector<int> parent(centers.size());
    for (std::size_t q = 0; q < centers.size(); ++q) parent[q] = static_cast<int>(q);
    for (bool merged = true; merged;) {
        merged = false;
        double dist = opts.threshold;
        std::size_t a = 0, b = 0;
        for (std::size_t p = 0; p < centers.size(); ++p)
            for (std::size_t q = p + 1; q < centers.size(); ++q) {
                if (parent[p] != static_cast<int>(p) || parent[q] != static_cast<int>(q)) continue;
                double d = l1_distance(centers[p], centers[q]);
                if (d < dist) {
                    dist = d;
                    a = p;
                    b = q;
                    merged = true;
                }
            }
        if (!merged) break;
        double wa = static_cast<double>(sizes[a]), wb = static_cast<double>(sizes[b]);
        for (std::size_t i = 0; i < 16; ++i) centers[a][i] = (wa * centers[a][i] + wb * centers[b][i]) / (wa + wb);
        sizes[a] += sizes[b];
        sizes[b] = 0;
        parent[b] = static_cast<int>(a);
    }
    for (auto& c : cluster) {
        while (parent[static_cast<std::size_t>(c)] != c) c = parent[static_cast<std::size_t>(c)];
    }

    std::vector<int> significant(centers.size(), -1);
    int n_sig = 0;
    for (std::size_t q = 0; q < centers.size(); ++q)
        if (static_cast<double>(sizes[q]) >= opts.min_cluster_fraction * static_cast<double>(cells)) significant[q] = n_sig++;
    dec.orbit_clusters = n_sig;
    if (n_sig != dec.ell) {
        std::ostringstream msg;
        msg << "eigenvalue-1 multiplicity " << dec.ell << " but " << n_sig << " orbit clusters";
        if (!dec.peripheral_extras.empty()) msg << " (" << dec.peripheral_extras.size() << " other peripheral eigenvalues)";
        throw Error(ErrorCode::DecompositionInconsistent, msg.str());
    }

    // spectral projector onto the eigenvalue-1 space
    MatrixXcd R(static_cast<Index>(box.size()), dec.ell), L(static_cast<Index>(box.size()), dec.ell);
    for (int k = 0; k < dec.ell; ++k) {
        R.col(k) = spectral.right.col(unit[static_cast<std::size_t>(k)]);
        L.col(k) = spectral.left.col(unit[static_cast<std::size_t>(k)]);
    }
    // re-biorthonormalize within the block (needed when eigenvalue 1 is multiple)
    MatrixXcd gram = L.adjoint() * R;
    L = L * gram.inverse().adjoint();
    auto project_unit = [&](const CoeffVector& f) -> CoeffVector { return hermitian_part(R * (L.adjoint() * f), box); };

    auto grid_from = [&](const std::vector<int>& labels) {
        auto g = std::make_shared<BasinGrid>();
        g->size = G;
        g->labels = labels;
        g->mass.assign(static_cast<std::size_t>(dec.ell), 0.0);
        std::size_t assigned = 0;
        for (int l : labels)
            if (l >= 0) {
                g->mass[static_cast<std::size_t>(l)] += 1.0;
                ++assigned;
            }
        for (auto& m : g->mass) m /= static_cast<double>(std::max<std::size_t>(assigned, 1));
        return g;
    };

    std::vector<int> labels(cells);
    for (std::size_t c = 0; c < cells; ++c) labels[c] = significant[static_cast<std::size_t>(cluster[c])];
    auto provisional = grid_from(labels);
    for (int k = 0; k < dec.ell; ++k) {
        CoeffVector rho = project_unit(indicator_coefficients(*provisional, k, box));
        dec.candidate_histograms.push_back(density_histogram(rho, box));
    }

    // relabel against the candidate acip histograms; a candidate far from its
    // own orbit cluster (singular physical measure, smeared by truncation) is
    // replaced by the empirical cluster mean
    std::vector<Histogram> reference(static_cast<std::size_t>(dec.ell));
    for (std::size_t q = 0; q < centers.size(); ++q) {
        if (significant[q] < 0 || sizes[q] == 0) continue;
        auto k = static_cast<std::size_t>(significant[q]);
        double d = l1_distance(dec.candidate_histograms[k], centers[q]);
        dec.candidate_distance.push_back(d);
        dec.empirical_reference.push_back(d >= opts.threshold);
        reference[k] = d >= opts.threshold ? centers[q] : dec.candidate_histograms[k];
    }
    dec.reference_histograms = reference;
    for (std::size_t c = 0; c < cells; ++c) {
        int best = BasinGrid::unassigned;
        double dist = opts.threshold;
        for (int k = 0; k < dec.ell; ++k) {
            double d = l1_distance(hist[c], reference[static_cast<std::size_t>(k)]);
            if (d < dist) {
                dist = d;
                best = k;
            }
        }
        labels[c] = best;
    }
    auto basins = grid_from(labels);
    dec.unassigned_fraction = basins->unassigned_fraction();
    if (dec.unassigned_fraction >= 1.0)
        throw Error(ErrorCode::DecompositionInconsistent, "no grid cell matches a candidate acip histogram");
    dec.mass = basins->mass;
    dec.basins = basins;

    const double scale = 1.0 / (1.0 - dec.unassigned_fraction);
    for (int k = 0; k < dec.ell; ++k) {
        dec.rho.push_back(project_unit(indicator_coefficients(*basins, k, box)) * scale);
        dec.scale_factors.push_back(scale);
    }

    // dual functionals: combinations of left eigenvectors with dual_k(rho_m) = delta
    MatrixXcd B(dec.ell, dec.ell);
    for (int i = 0; i < dec.ell; ++i)
        for (int m = 0; m < dec.ell; ++m) B(i, m) = L.col(i).dot(dec.rho[static_cast<std::size_t>(m)]);
    MatrixXcd A = B.inverse();
    for (int k = 0; k < dec.ell; ++k) {
        CoeffVector h = CoeffVector::Zero(static_cast<Index>(box.size()));
        for (int i = 0; i < dec.ell; ++i) h += std::conj(A(k, i)) * L.col(i);
        dec.dual.push_back(h);
    }
    for (int k = 0; k < dec.ell; ++k)
        for (int m = 0; m < dec.ell; ++m) {
            complex v = dec.dual_apply(k, dec.rho[static_cast<std::size_t>(m)]);
            dec.biorthogonality_error = std::max(dec.biorthogonality_error, std::abs(v - (k == m ? 1.0 : 0.0)));
        }

    const int n_eval = std::max(opts.eval_grid, box.side());
    std::vector<Grid> values;
    for (int k = 0; k < dec.ell; ++k) {
        const CoeffVector& rho = dec.rho[static_cast<std::size_t>(k)];
        values.push_back(coefficients_to_grid(rho / dec.rho_mass(k), box, n_eval));
        dec.invariance_residual = std::max(dec.invariance_residual, (M.entries * rho - rho).norm() / rho.norm());
        double mn = INFINITY;
        for (const auto& v : values.back()) mn = std::min(mn, v.real());
        dec.min_density.push_back(mn);
        if (mn < -1e-6) dec.negativity_ok = false;
        if (opts.strict_negativity && mn < -1e-3) {
            std::ostringstream msg;
            msg << "density " << k << " dips to " << mn << " (truncation ringing above 1e-3)";
            throw Error(ErrorCode::DecompositionInconsistent, msg.str());
        }
    }
    for (int k = 0; k < dec.ell; ++k)
        for (int m = k + 1; m < dec.ell; ++m) {
            double acc = 0.0;
            for (std::size_t i = 0; i < values[0].size(); ++i)
                acc += std::abs(values[static_cast<std::size_t>(k)][i]) * std::abs(values[static_cast<std::size_t>(m)][i]);
            dec.support_overlap = std::max(dec.support_overlap, acc / static_cast<double>(values[0].size()));
        }
    return dec;
}

CoeffVector project(const CoeffVector& f, const ErgodicDecomposition& dec) {
    const ModeBox box = dec.box();
    CoeffVector out = CoeffVector::Zero(f.size());
    for (int j = 0; j < dec.ell; ++j) {
        double mass = dec.mass[static_cast<std::size_t>(j)];
        if (mass <= 0.0) continue;
        out += basin_integral(f, box, *dec.basins, j) / mass * dec.rho[static_cast<std::size_t>(j)];
    }
    return out;
}

CoeffVector spectral_project(const CoeffVector& f, const ErgodicDecomposition& dec) {
    CoeffVector out = CoeffVector::Zero(f.size());
    for (int k = 0; k < dec.ell; ++k) out += dec.dual_apply(k, f) * dec.rho[static_cast<std::size_t>(k)];
    return out;
}

CltWeights clt_weights(const ErgodicDecomposition& dec, const FourierSeries& f_m, double tol) {
    const ModeBox box = dec.box();
    const CoeffVector f = to_coefficients(f_m, box);
    require(std::abs(f_m.coefficient({0, 0}).real() - 1.0) < 1e-8, "clt_weights needs Leb(f_m) = 1");
    CltWeights w;
    for (int k = 0; k < dec.ell; ++k) {
        w.c.push_back(dec.rho_mass(k) * dec.dual_apply(k, f).real());
        w.basin_mass.push_back(basin_integral(f, box, *dec.basins, k).real());
        w.max_difference = std::max(w.max_difference, std::abs(w.c.back() - w.basin_mass.back()));
    }
    if (w.max_difference > tol) {
        std::ostringstream msg;
        msg << "weights c_k and basin masses differ by " << w.max_difference << " (> " << tol << ")";
        throw Error(ErrorCode::WeightMismatch, msg.str());
    }
    return w;
}

} // namespace svph
