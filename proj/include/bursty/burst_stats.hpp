#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bursty/sde_engine.hpp"

namespace bursty {

// One excursion above the threshold. Crossing times are linear
// interpolations between the samples that straddle the threshold, and size
// is the trapezoidal area of (x - h) over the piecewise-linear path.
struct Burst {
    double t_start;
    double t_end;
    double duration;
    double peak;
    double size;
};

class BurstSequence {
public:
    BurstSequence() = default;
    BurstSequence(double threshold, std::vector<Burst> bursts);

    double threshold() const { return threshold_; }
    const std::vector<Burst>& bursts() const { return bursts_; }
    std::size_t size() const { return bursts_.size(); }
    bool empty() const { return bursts_.empty(); }
    const Burst& operator[](std::size_t i) const { return bursts_[i]; }

    std::vector<double> durations() const;
    std::vector<double> peaks() const;
    std::vector<double> sizes() const;
    // theta_i = t_start(i+1) - t_end(i).
    std::vector<double> inter_burst_times() const;
    // tau_i = t_start(i+1) - t_start(i) = T_i + theta_i.
    std::vector<double> waiting_times() const;

    // Appends another realization's bursts (merging parallel runs).
    void append(const BurstSequence& other);

private:
    double threshold_ = 0.0;
    std::vector<Burst> bursts_;
};

// Incremental detector; feed samples in time order. An excursion that is
// already in progress at the first sample, or still open at the last one,
// never produces a Burst.
class BurstDetector {
public:
    explicit BurstDetector(double threshold);

    void push(double t, double x);
    const std::vector<Burst>& bursts() const { return bursts_; }
    std::vector<Burst> take() { return std::move(bursts_); }
    double threshold() const { return h_; }

private:
    double h_;
    bool have_prev_ = false;
    double t_prev_ = 0.0;
    double x_prev_ = 0.0;
    bool open_ = false;
    Burst current_{};
    std::vector<Burst> bursts_;
};

BurstSequence detect_bursts(std::span<const double> t, std::span<const double> x, double h);
BurstSequence detect_bursts(const Path& path, double h);

// Density estimate on logarithmic bins. Bin i spans [edges[i], edges[i+1]).
struct LogHistogram {
    std::vector<double> edges;
    std::vector<double> density;
    std::vector<double> counts;  // summed weights; plain counts when unweighted
    double total = 0.0;
    std::size_t samples = 0;

    std::size_t bins() const { return density.size(); }
    double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
    double center(std::size_t i) const;  // geometric
};

inline constexpr int kDefaultBinsPerDecade = 10;

// Edges lie on the grid 10^(k / bins_per_decade). Requires at least 10
// positive samples.
LogHistogram log_binned_density(std::span<const double> samples, int bins_per_decade = kDefaultBinsPerDecade);

// Same, restricted to samples >= lower_edge with the first edge exactly at
// lower_edge; the density is conditional on that restriction.
LogHistogram log_binned_density_from(std::span<const double> samples, double lower_edge,
                                     int bins_per_decade = kDefaultBinsPerDecade);

// Weighted variant; used with residence times to estimate time averages
// from variable-step paths.
LogHistogram log_binned_density_weighted(std::span<const double> samples, std::span<const double> weights,
                                         int bins_per_decade = kDefaultBinsPerDecade);

// Time-weighted density of the path values (weight of sample i is
// t_{i+1} - t_i), i.e. the fraction of time spent per unit x.
LogHistogram time_weighted_density(const Path& path, int bins_per_decade = kDefaultBinsPerDecade);

struct PowerLawFit {
    double alpha = 0.0;
    double stderr_alpha = 0.0;
    double prefactor = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

// Least squares of log y on log x over points with lo <= x <= hi and y > 0.
// At least five such points are required.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi);

// Fit to the non-empty bins of a histogram.
PowerLawFit fit_power_law(const LogHistogram& hist, double lo, double hi);

struct ScatterBin {
    double x_lo;
    double x_hi;
    double x_center;  // geometric mean of the x values in the bin
    double y_mean;
    double y_std;
    std::size_t count;
};

// Conditional mean and standard deviation of y given log-binned x.
std::vector<ScatterBin> binned_scatter(std::span<const double> x, std::span<const double> y,
                                       int bins_per_decade = kDefaultBinsPerDecade);

// Power-law fit of bin means vs bin centers, using bins with at least
// min_count pairs.
PowerLawFit fit_scatter(const std::vector<ScatterBin>& bins, double lo, double hi, std::size_t min_count = 5);

struct PsdOptions {
    std::size_t grid_points = std::size_t{1} << 20;  // power of two
    std::size_t segments = 16;                        // Welch segments, 50% overlap
    double fit_lo = 0.0;                              // 0: two decades centered on
    double fit_hi = 0.0;                              //    the geometric mean frequency
    int bins_per_decade = kDefaultBinsPerDecade;
};

struct Spectrum {
    std::vector<double> freq;
    std::vector<double> power;
    double sample_dt = 0.0;
    double beta = 0.0;
    PowerLawFit fit;
};

// Welch estimate (Hann window, 50% overlap) of the one-sided PSD of a
// uniformly sampled series, with S(f) ~ f^-beta fitted on log-binned power.
Spectrum psd_uniform(std::span<const double> samples, double dt, const PsdOptions& opt = {});

// Streaming zero-order-hold resampler onto t_begin + i (t_end - t_begin) / n,
// i < n. Each grid point takes the last value pushed at or before it; points
// before the first sample take the first value.
class ZeroOrderHoldGrid {
public:
    ZeroOrderHoldGrid(double t_begin, double t_end, std::size_t points);

    void push(double t, double x);
    // Fills the remaining points with the last value and returns the grid.
    std::vector<double> finish();
    double step() const { return dt_; }

private:
    double t_begin_;
    double dt_;
    std::vector<double> grid_;
    std::size_t next_ = 0;
    bool have_ = false;
    double current_ = 0.0;
};

// Variable-step path resampled by zero-order hold onto grid_points uniform
// samples, then psd_uniform.
Spectrum psd_estimate(std::span<const double> t, std::span<const double> x, const PsdOptions& opt = {});
Spectrum psd_estimate(const Path& path, const PsdOptions& opt = {});

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct ExponentialTailFit {
    double rate = 0.0;
    double stderr_rate = 0.0;
    std::size_t points = 0;
};

// Maximum-likelihood decay rate of the samples exceeding t0, treating
// T - t0 as exponential.
ExponentialTailFit fit_exponential_tail(std::span<const double> samples, double t0);

// Hill estimate of the density exponent (1 + survival exponent) from the
// largest `fraction` of the samples.
double hill_density_exponent(std::vector<double> samples, double fraction);

}  // namespace bursty
