#include "bursty/double_stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace bursty {

void QGaussianParams::validate() const {
    if (!(std::isfinite(r0) && r0 > 0.0)) throw ValidationError("q-Gaussian r0 must be positive");
    if (!(std::isfinite(lambda2) && lambda2 > 1.0)) throw ValidationError("q-Gaussian lambda2 must exceed 1");
}

void ReturnModelParams::validate() const {
    complex.validate();
    if (!(std::isfinite(r0_bar) && r0_bar > 0.0)) throw ValidationError("r0_bar must be positive");
    if (!(std::isfinite(tau_s) && tau_s > 0.0)) throw ValidationError("tau_s must be positive");
    QGaussianParams{1.0, lambda2}.validate();
}

std::string ReturnModelParams::fingerprint() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, ";r0_bar=%.17g,tau_s=%.17g,lambda2=%.17g", r0_bar, tau_s, lambda2);
    return "returns:" + complex.fingerprint() + buf;
}

double qgaussian_pdf(double r, const QGaussianParams& p) {
    p.validate();
    if (!std::isfinite(r)) throw DomainError("qgaussian_pdf: r must be finite");
    const double half = 0.5 * p.lambda2;
    const double log_norm = std::lgamma(half) - std::lgamma(half - 0.5) - std::log(p.r0) -
                            0.5 * std::log(std::numbers::pi);
    const double u = r / p.r0;
    return std::exp(log_norm - half * std::log1p(u * u));
}

namespace {

// Integral of the piecewise-linear interpolant of (t, x) over [a, b].
double path_integral(std::span<const double> t, std::span<const double> x, double a, double b) {
    auto value_at = [&](std::size_t i, double s) {
        return x[i] + (x[i + 1] - x[i]) * (s - t[i]) / (t[i + 1] - t[i]);
    };
    auto it = std::upper_bound(t.begin(), t.end(), a);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    long double sum = 0.0L;
    for (; i + 1 < t.size() && t[i] < b; ++i) {
        const double lo = std::max(a, t[i]);
        const double hi = std::min(b, t[i + 1]);
        if (hi > lo) sum += 0.5L * (value_at(i, lo) + value_at(i, hi)) * (hi - lo);
    }
    return static_cast<double>(sum);
}

}  // namespace

double volatility_r0(const Path& path, double t_s, const ReturnModelParams& p) {
    p.validate();
    if (path.size() < 2) throw DomainError("volatility_r0: path needs at least two samples");
    if (!(t_s >= path.t_s.front()) || !(t_s + p.tau_s <= path.t_s.back())) {
        throw DomainError("volatility_r0: window lies outside the path");
    }
    const double integral = path_integral(path.t_s, path.x, t_s, t_s + p.tau_s);
    return 1.0 + p.r0_bar / p.tau_s * std::abs(integral);
}

ReturnModulator::ReturnModulator(const ReturnModelParams& p, std::uint64_t noise_seed, double sample_dt, Sink sink)
    : p_(p), noise_seed_(noise_seed), step_s_(p.complex.sigma_t_sq * sample_dt), sink_(std::move(sink)) {
    p_.validate();
    if (!(std::isfinite(sample_dt) && sample_dt > 0.0)) throw ValidationError("sample_dt must be positive");
}

void ReturnModulator::push(double t_s, double x) {
    if (!started_) {
        started_ = true;
        t0_ = t_prev_ = t_s;
        x_prev_ = x;
        pending_.push_back(0.0L);
        next_start_ = 1;
        return;
    }
    if (!(t_s > t_prev_)) throw DomainError("ReturnModulator: time must be strictly increasing");
    const double span = t_s - t_prev_;
    auto integral_to = [&](double c) {
        const double xc = x_prev_ + (x - x_prev_) * (c - t_prev_) / span;
        return cum_prev_ + 0.5L * (x_prev_ + xc) * (c - t_prev_);
    };
    for (;;) {
        const double cs = start_point(next_start_);
        const double ce = end_point(next_end_);
        if (std::min(cs, ce) > t_s) break;
        if (cs <= ce) {
            pending_.push_back(integral_to(cs));
            ++next_start_;
            continue;
        }
        const long double window = integral_to(ce) - pending_[pending_head_++];
        const double r0 = 1.0 + p_.r0_bar / p_.tau_s * std::abs(static_cast<double>(window));
        SplitMix64 rng(noise_seed_, next_end_);
        const double r = sample_qgaussian(QGaussianParams{r0, p_.lambda2}, rng);
        sink_(next_end_, start_point(next_end_) / p_.complex.sigma_t_sq, r);
        ++next_end_;
    }
    if (pending_head_ > 4096 && 2 * pending_head_ > pending_.size()) {
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pending_head_));
        pending_head_ = 0;
    }
    cum_prev_ += 0.5L * (x_prev_ + x) * span;
    t_prev_ = t_s;
    x_prev_ = x;
}

namespace {

ReturnSeries make_series(const ReturnModelParams& p, std::uint64_t sde_seed, std::uint64_t noise_seed,
                         double sample_dt) {
    ReturnSeries out;
    out.sde_seed = sde_seed;
    out.noise_seed = noise_seed;
    out.sample_dt = sample_dt;
    out.fingerprint = p.fingerprint();
    return out;
}

ReturnModulator::Sink collector(ReturnSeries& out) {
    return [&out](std::uint64_t, double t, double r) {
        out.t_seconds.push_back(t);
        out.r.push_back(r);
    };
}

}  // namespace

ReturnSeries simulate_returns(const ReturnModelParams& p, const SimConfig& cfg, std::uint64_t noise_seed,
                              double sample_dt) {
    ReturnSeries out = make_series(p, cfg.seed, noise_seed, sample_dt);
    ReturnModulator mod(p, noise_seed, sample_dt, collector(out));
    integrate(p.complex, cfg, [&](double t, double x) { mod.push(t, x); });
    return out;
}

ReturnSeries returns_from_path(const Path& path, const ReturnModelParams& p, std::uint64_t noise_seed,
                               double sample_dt) {
    ReturnSeries out = make_series(p, path.seed, noise_seed, sample_dt);
    ReturnModulator mod(p, noise_seed, sample_dt, collector(out));
    for (std::size_t i = 0; i < path.size(); ++i) mod.push(path.t_s[i], path.x[i]);
    return out;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
    if (window == 0) throw ValidationError("moving_average: window must cover at least one sample");
    std::vector<double> out;
    if (series.size() < window) return out;
    out.reserve(series.size() - window + 1);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < window; ++i) sum += series[i];
    out.push_back(static_cast<double>(sum / window));
    for (std::size_t i = window; i < series.size(); ++i) {
        sum += series[i];
        sum -= series[i - window];
        out.push_back(static_cast<double>(sum / window));
    }
    return out;
}

std::vector<double> moving_average(std::span<const double> series, double sample_dt, double window_seconds) {
    if (!(sample_dt > 0.0) || !std::isfinite(window_seconds)) {
        throw ValidationError("moving_average: sampling step and window must be positive");
    }
    const double steps = std::floor(window_seconds / sample_dt + 1e-9);
    if (steps < 1.0) throw ValidationError("moving_average: window is shorter than one sampling step");
    return moving_average(series, static_cast<std::size_t>(steps));
}

FilteredSeries filtered_abs_returns(const ReturnSeries& series, double window_seconds) {
    std::vector<double> abs_r(series.r.size());
    std::transform(series.r.begin(), series.r.end(), abs_r.begin(), [](double v) { return std::abs(v); });
    FilteredSeries out;
    out.value = moving_average(abs_r, series.sample_dt, window_seconds);
    if (out.value.empty()) throw DomainError("filtered_abs_returns: series shorter than the window");
    long double total = 0.0L;
    for (double v : abs_r) total += v;
    out.scale = static_cast<double>(total / abs_r.size());
    if (!(out.scale > 0.0)) throw NumericalError("filtered_abs_returns: mean |r| is zero");
    const std::size_t window = abs_r.size() - out.value.size() + 1;
    out.t_seconds.resize(out.value.size());
    for (std::size_t i = 0; i < out.value.size(); ++i) {
        out.value[i] /= out.scale;
        out.t_seconds[i] = series.t_seconds[i + window - 1] + series.sample_dt;
    }
    return out;
}

}  // namespace bursty
