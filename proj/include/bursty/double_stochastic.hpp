#pragma once

// Double stochastic return model: q-Gaussian fluctuations whose scale r0 is
// driven by the window average of the complex SDE,
//
//   r0 = 1 + (r0_bar / tau_s) |integral of x over [t_s, t_s + tau_s]|,
//
// plus the trailing moving-average filter applied before burst analysis.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bursty/errors.hpp"
#include "bursty/rng.hpp"
#include "bursty/sde_engine.hpp"

namespace bursty {

struct QGaussianParams {
    double r0 = 1.0;
    double lambda2 = 5.0;

    void validate() const;
};

inline constexpr double kMinuteSeconds = 60.0;
inline constexpr double kHourSeconds = 3600.0;

struct ReturnModelParams {
    ComplexSdeParams complex;
    double r0_bar = 0.4;
    double tau_s = kEmpiricalSigmaTSq * kMinuteSeconds;  // one minute of real time
    double lambda2 = 5.0;

    void validate() const;
    std::string fingerprint() const;
};

// Gamma(l/2) / (r0 sqrt(pi) Gamma(l/2 - 1/2)) (r0^2 / (r0^2 + r^2))^(l/2).
double qgaussian_pdf(double r, const QGaussianParams& p);

// Student-t with d = lambda2 - 1 degrees of freedom, rescaled by r0 / sqrt(d).
template <class URBG>
double sample_qgaussian(const QGaussianParams& p, URBG& rng) {
    p.validate();
    const double d = p.lambda2 - 1.0;
    std::student_t_distribution<double> t(d);
    return p.r0 * t(rng) / std::sqrt(d);
}

// r0 for the window [t_s, t_s + tau_s] of a path, integrating the
// piecewise-linear interpolant.
double volatility_r0(const Path& path, double t_s, const ReturnModelParams& p);

struct ReturnSeries {
    std::vector<double> t_seconds;  // start of each sampling interval
    std::vector<double> r;
    std::uint64_t sde_seed = 0;
    std::uint64_t noise_seed = 0;
    double sample_dt = kMinuteSeconds;
    std::string fingerprint;
};

// Streams variable-step samples of x and emits one return per sampling
// interval once the interval's r0 window has been covered. Interval k starts
// at t0 + k * sample_dt * sigma_t^2, where t0 is the first sample time, and
// its draw comes from the keyed stream (noise_seed, k).
class ReturnModulator {
public:
    using Sink = std::function<void(std::uint64_t k, double t_seconds, double r)>;

    ReturnModulator(const ReturnModelParams& p, std::uint64_t noise_seed, double sample_dt, Sink sink);

    void push(double t_s, double x);
    std::uint64_t emitted() const { return next_end_; }

private:
    double start_point(std::uint64_t k) const { return t0_ + static_cast<double>(k) * step_s_; }
    double end_point(std::uint64_t k) const { return start_point(k) + p_.tau_s; }

    ReturnModelParams p_;
    std::uint64_t noise_seed_;
    double step_s_;
    Sink sink_;

    bool started_ = false;
    double t0_ = 0.0;
    double t_prev_ = 0.0;
    double x_prev_ = 0.0;
    long double cum_prev_ = 0.0L;
    std::uint64_t next_start_ = 0;
    std::uint64_t next_end_ = 0;
    std::vector<long double> pending_;  // cumulative integral at pending starts
    std::size_t pending_head_ = 0;
};

// Complex SDE path under cfg (cfg.seed drives x), modulated into returns.
ReturnSeries simulate_returns(const ReturnModelParams& p, const SimConfig& cfg, std::uint64_t noise_seed,
                              double sample_dt = kMinuteSeconds);

// Same modulation applied to an existing path.
ReturnSeries returns_from_path(const Path& path, const ReturnModelParams& p, std::uint64_t noise_seed,
                               double sample_dt = kMinuteSeconds);

// Trailing flat mean over `window` samples; output i averages inputs
// i .. i + window - 1, so it has size n - window + 1.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

// Window given in seconds for a series sampled every sample_dt seconds.
std::vector<double> moving_average(std::span<const double> series, double sample_dt, double window_seconds);

struct FilteredSeries {
    std::vector<double> t_seconds;  // end of each averaging window
    std::vector<double> value;
    double scale = 1.0;             // mean |r| the values were divided by
};

// |r| averaged over a trailing window and divided by its mean |r|.
FilteredSeries filtered_abs_returns(const ReturnSeries& series, double window_seconds = kHourSeconds);

}  // namespace bursty
