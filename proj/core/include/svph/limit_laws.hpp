#pragma once

#include "svph/ergodic.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"
#include "svph/sampling.hpp"
#include "svph/transfer.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace svph {

/// Standard normal density and CDF.
double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;

/// Copy of obs with centered_offsets[k] = mu_k(tau) and the basin grid attached.
Observable center(const Observable& obs, const ErgodicDecomposition& dec);

struct GreenKubo {
    int k = 0;
    int J = 0;
    double sigma2 = 0.0;     // tau centred on basin k
    double sigma2_raw = 0.0; // same truncated sum with the uncentred tau
    double tail = 0.0;       // |C_J| g / (1 - g)
    double ratio = 0.0;      // fitted geometric decay g of |C_j| for j > 5 (0 when the terms vanish)
    std::vector<double> correlations; // C_0 .. C_J, centred
};

/// sigma_k^2 = C_0 + 2 sum_{j=1}^J C_j with C_j = m(tau_k M^j(tau_k rho_k)) / m(rho_k).
/// M must be the twist-free matrix. Throws NonDecayingCorrelations when the
/// terms beyond j = 5 do not decay geometrically.
GreenKubo green_kubo(const Observable& obs, const ErgodicDecomposition& dec, const OperatorMatrix& M, int k, int J = 32);

struct BirkhoffOptions {
    std::vector<std::size_t> n_list;
    std::size_t N = 100000;
    std::uint64_t seed = 1;
    int label_len = 3000;    // minimum orbit length when samples must be classified
    int label_window = 1000; // trailing window whose histogram classifies a sample
    double label_threshold = 0.2;
};

/// Raw Birkhoff sums tau_n(p_i) for every n in n_list along one orbit per sample.
struct BirkhoffSamples {
    std::vector<std::size_t> n_list;
    std::size_t N = 0;
    std::uint64_t seed = 0;
    std::vector<double> raw; // N x n_list, sample-major
    std::vector<int> labels; // acip of each sample, or BasinGrid::unassigned
    std::vector<TorusPoint> starts;
    SampleStats init_stats;

    [[nodiscard]] double raw_at(std::size_t i, std::size_t j) const noexcept { return raw[i * n_list.size() + j]; }
    /// tau_n(p_i) - n offset[label_i] for the n at position j.
    [[nodiscard]] std::vector<double> centered(const Observable& obs, std::size_t j) const;
    /// Fraction of samples per label (ell entries; unassigned samples excluded from the denominator).
    [[nodiscard]] std::vector<double> label_fractions(int ell) const;
    [[nodiscard]] double unassigned_fraction() const noexcept;
    /// Empirical variance of tau_n / sqrt(n) over the samples of each label (NaN for empty labels).
    [[nodiscard]] std::vector<double> label_variances(const Observable& obs, std::size_t j, int ell) const;
    /// The first `count` samples (identical to a run with N = count).
    [[nodiscard]] BirkhoffSamples head(std::size_t count) const;
};

/// Monte-Carlo orbits from m with the exact-in-law fixed-point stepper.
/// With dec and ell > 1, each sample is labelled by the histogram of its
/// trailing window against dec.reference_histograms.
BirkhoffSamples simulate_birkhoff(const MapSpec& spec, const Observable& obs, const InitialMeasure& m,
                                  const ErgodicDecomposition* dec, const BirkhoffOptions& opts);

/// sum_k c_k Phi(z / sigma_k); sigma_k = 0 is a unit step at 0.
double mixture_cdf(double z, const std::vector<double>& c, const std::vector<double>& sigma) noexcept;

struct KsResult {
    double distance = 0.0;
    double at = 0.0;        // location of the supremum
    double std_error = 0.0; // binomial standard error of the ECDF there
};

/// Kolmogorov-Smirnov distance of the sample against a mixture of centred Gaussians.
KsResult ks_distance(std::vector<double> values, const std::vector<double>& c, const std::vector<double>& sigma);

struct CltRow {
    std::size_t n = 0;
    KsResult ks;
    double var_over_n = 0.0;
    double best_single_sigma = 0.0; // NaN when not searched
    double best_single_ks = 0.0;
};

struct CltOptions {
    bool best_single = false;
    double degenerate_tol = 1e-3; // sigma_k below this (with c_k > 0) is degenerate
};

/// Per-n KS distance of tau_n / sqrt(n) against sum_k c_k Phi_{sigma_k}.
/// Throws DegenerateComponent when a weighted component has sigma_k ~ 0.
std::vector<CltRow> clt_experiment(const BirkhoffSamples& samples, const Observable& centered,
                                   const std::vector<double>& c, const std::vector<double>& sigma,
                                   const CltOptions& opts = {});

/// Best single centred Gaussian for the sample (grid search plus golden refinement).
std::pair<double, double> best_single_gaussian(const std::vector<double>& values);

struct PowerFit {
    double C = 0.0;
    double exponent = 0.0;
    double exponent_stderr = 0.0;
    double log_C_stderr = 0.0;
    double exponent_lo = 0.0; // 95% interval from Student t
    double exponent_hi = 0.0;
};

/// Least squares log D = log C - e log n.
PowerFit berry_esseen_fit(const std::vector<std::size_t>& n, const std::vector<double>& D);

/// Triangle bump g(t) = max(0, 1 - |t| / w); Leb(g) = w.
struct TriangleBump {
    double w = 1.0;
    [[nodiscard]] double operator()(double t) const noexcept {
        double a = 1.0 - std::abs(t) / w;
        return a > 0.0 ? a : 0.0;
    }
    [[nodiscard]] double integral() const noexcept { return w; }
};

struct LltPoint {
    double z = 0.0;
    double lhs = 0.0; // sqrt(n) mean g(tau_n - z)
    double rhs = 0.0; // Leb(g) sum_k c_k n(z / (sigma_k sqrt n)) / sigma_k
    double std_error = 0.0;
    [[nodiscard]] double error() const noexcept { return std::abs(lhs - rhs); }
    [[nodiscard]] double in_stderr() const noexcept { return std_error > 0.0 ? error() / std_error : 0.0; }
};

struct LltResult {
    std::size_t n = 0;
    std::vector<LltPoint> points;
    double sup_error = 0.0;
    double sup_in_stderr = 0.0;
};

LltResult llt_experiment(const BirkhoffSamples& samples, const Observable& centered, std::size_t j, TriangleBump g,
                         const std::vector<double>& z_grid, const std::vector<double>& c,
                         const std::vector<double>& sigma, double degenerate_tol = 1e-3);

struct IntervalRow {
    std::size_t n = 0;
    double prob = 0.0;   // empirical P(tau_n / sqrt n in [a, b])
    double limit = 0.0;  // sum_k c_k (Phi(b / sigma_k) - Phi(a / sigma_k))
    double lhs = 0.0;    // |prob - limit|
    double std_error = 0.0;
    double bound = 0.0;  // max_k n(a / sigma_k) / n^{1/2 - 1/delta} + (b - a) / sqrt n
    double ratio = 0.0;  // lhs / bound
};

struct IntervalLlt {
    double a = 0.0, b = 0.0, delta = 0.0;
    std::vector<IntervalRow> rows;
    double C_fit = 0.0;   // max ratio over every n but the largest
    bool bounded = false; // lhs at the largest n <= C_fit bound + 3 std_error
};

IntervalLlt interval_llt(const BirkhoffSamples& samples, const Observable& centered, double a, double b, double delta,
                         const std::vector<double>& c, const std::vector<double>& sigma, double degenerate_tol = 1e-3);

} // namespace svph
