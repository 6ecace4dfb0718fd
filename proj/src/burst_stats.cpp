#include "bursty/burst_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include <fftw3.h>

#include "bursty/errors.hpp"

namespace bursty {

BurstSequence::BurstSequence(double threshold, std::vector<Burst> bursts)
    : threshold_(threshold), bursts_(std::move(bursts)) {}

std::vector<double> BurstSequence::durations() const {
    std::vector<double> out;
    out.reserve(bursts_.size());
    for (const auto& b : bursts_) out.push_back(b.duration);
    return out;
}

std::vector<double> BurstSequence::peaks() const {
    std::vector<double> out;
    out.reserve(bursts_.size());
    for (const auto& b : bursts_) out.push_back(b.peak);
    return out;
}

std::vector<double> BurstSequence::sizes() const {
    std::vector<double> out;
    out.reserve(bursts_.size());
    for (const auto& b : bursts_) out.push_back(b.size);
    return out;
}

std::vector<double> BurstSequence::inter_burst_times() const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < bursts_.size(); ++i) {
        out.push_back(bursts_[i + 1].t_start - bursts_[i].t_end);
    }
    return out;
}

std::vector<double> BurstSequence::waiting_times() const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < bursts_.size(); ++i) {
        out.push_back(bursts_[i + 1].t_start - bursts_[i].t_start);
    }
    return out;
}

void BurstSequence::append(const BurstSequence& other) {
    bursts_.insert(bursts_.end(), other.bursts_.begin(), other.bursts_.end());
}

BurstDetector::BurstDetector(double threshold) : h_(threshold) {
    if (!std::isfinite(threshold)) throw ValidationError("burst threshold must be finite");
}

void BurstDetector::push(double t, double x) {
    if (!std::isfinite(t) || !std::isfinite(x)) throw DomainError("burst detection: non-finite sample");
    if (!have_prev_) {
        have_prev_ = true;
        t_prev_ = t;
        x_prev_ = x;
        return;
    }
    if (!(t > t_prev_)) throw DomainError("burst detection: time must be strictly increasing");
    const bool was_above = x_prev_ > h_;
    const bool is_above = x > h_;
    if (!was_above && is_above) {
        const double tc = t_prev_ + (t - t_prev_) * (h_ - x_prev_) / (x - x_prev_);
        open_ = true;
        current_ = Burst{tc, 0.0, 0.0, x, 0.5 * (x - h_) * (t - tc)};
    } else if (was_above && is_above) {
        if (open_) {
            current_.size += 0.5 * ((x_prev_ - h_) + (x - h_)) * (t - t_prev_);
            current_.peak = std::max(current_.peak, x);
        }
    } else if (was_above && !is_above) {
        if (open_) {
            const double tc = t_prev_ + (t - t_prev_) * (x_prev_ - h_) / (x_prev_ - x);
            current_.size += 0.5 * (x_prev_ - h_) * (tc - t_prev_);
            current_.t_end = tc;
            current_.duration = tc - current_.t_start;
            bursts_.push_back(current_);
            open_ = false;
        }
    }
    t_prev_ = t;
    x_prev_ = x;
}

BurstSequence detect_bursts(std::span<const double> t, std::span<const double> x, double h) {
    if (t.size() != x.size()) throw ValidationError("detect_bursts: t and x differ in length");
    if (t.size() < 2) throw ValidationError("detect_bursts: need at least two samples");
    BurstDetector detector(h);
    for (std::size_t i = 0; i < t.size(); ++i) detector.push(t[i], x[i]);
    return BurstSequence(h, detector.take());
}

BurstSequence detect_bursts(const Path& path, double h) { return detect_bursts(path.t_s, path.x, h); }

double LogHistogram::center(std::size_t i) const { return std::sqrt(edges[i] * edges[i + 1]); }

namespace {

long grid_index(double v, int bpd) {
    long k = static_cast<long>(std::floor(std::log10(v) * bpd));
    if (std::pow(10.0, static_cast<double>(k) / bpd) > v) --k;
    if (std::pow(10.0, static_cast<double>(k + 1) / bpd) <= v) ++k;
    return k;
}

void check_bpd(int bpd) {
    if (bpd < 1) throw ValidationError("bins_per_decade must be positive");
}

LogHistogram finish(LogHistogram hist) {
    hist.density.resize(hist.counts.size());
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        hist.density[i] = hist.total > 0.0 ? hist.counts[i] / (hist.total * hist.width(i)) : 0.0;
    }
    return hist;
}

LogHistogram grid_histogram(std::span<const double> samples, std::span<const double> weights, int bpd) {
    check_bpd(bpd);
    if (samples.size() < 10) throw ValidationError("log_binned_density: need at least 10 samples");
    long k_lo = 0;
    long k_hi = 0;
    bool first = true;
    for (double v : samples) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("log_binned_density: samples must be positive");
        const long k = grid_index(v, bpd);
        k_lo = first ? k : std::min(k_lo, k);
        k_hi = first ? k : std::max(k_hi, k);
        first = false;
    }
    LogHistogram hist;
    const std::size_t nbins = static_cast<std::size_t>(k_hi - k_lo + 1);
    hist.edges.resize(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i) {
        hist.edges[i] = std::pow(10.0, static_cast<double>(k_lo + static_cast<long>(i)) / bpd);
    }
    hist.counts.assign(nbins, 0.0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        hist.counts[static_cast<std::size_t>(grid_index(samples[i], bpd) - k_lo)] += w;
        hist.total += w;
    }
    hist.samples = samples.size();
    return finish(std::move(hist));
}

}  // namespace

LogHistogram log_binned_density(std::span<const double> samples, int bins_per_decade) {
    return grid_histogram(samples, {}, bins_per_decade);
}

LogHistogram log_binned_density_weighted(std::span<const double> samples, std::span<const double> weights,
                                         int bins_per_decade) {
    if (samples.size() != weights.size()) throw ValidationError("log_binned_density: weights size mismatch");
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("log_binned_density: weights must be non-negative");
    }
    return grid_histogram(samples, weights, bins_per_decade);
}

LogHistogram log_binned_density_from(std::span<const double> samples, double lower_edge, int bins_per_decade) {
    check_bpd(bins_per_decade);
    if (!(lower_edge > 0.0)) throw DomainError("log_binned_density: lower edge must be positive");
    std::vector<double> kept;
    for (double v : samples) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("log_binned_density: samples must be positive");
        if (v >= lower_edge) kept.push_back(v);
    }
    if (kept.size() < 10) throw ValidationError("log_binned_density: fewer than 10 samples above the lower edge");
    const double vmax = *std::max_element(kept.begin(), kept.end());
    const auto nbins = static_cast<std::size_t>(std::floor(std::log10(vmax / lower_edge) * bins_per_decade)) + 1;
    LogHistogram hist;
    hist.edges.resize(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i) {
        hist.edges[i] = lower_edge * std::pow(10.0, static_cast<double>(i) / bins_per_decade);
    }
    hist.counts.assign(nbins, 0.0);
    for (double v : kept) {
        auto it = std::upper_bound(hist.edges.begin(), hist.edges.end(), v);
        auto i = static_cast<std::size_t>(it - hist.edges.begin()) - 1;
        hist.counts[std::min(i, nbins - 1)] += 1.0;
    }
    hist.total = static_cast<double>(kept.size());
    hist.samples = kept.size();
    return finish(std::move(hist));
}

LogHistogram time_weighted_density(const Path& path, int bins_per_decade) {
    if (path.size() < 11) throw ValidationError("time_weighted_density: path too short");
    const std::size_t n = path.size() - 1;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = path.t_s[i + 1] - path.t_s[i];
    return log_binned_density_weighted(std::span<const double>(path.x).first(n), w, bins_per_decade);
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y, double lo, double hi) {
    if (x.size() != y.size()) throw ValidationError("fit_power_law: x and y differ in length");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] >= lo && x[i] <= hi && x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    const std::size_t n = lx.size();
    if (n < 5) throw ValidationError("fit_power_law: fewer than 5 usable points in range");
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw ValidationError("fit_power_law: x values are degenerate");
    PowerLawFit fit;
    fit.alpha = sxy / sxx;
    fit.prefactor = std::exp(my - fit.alpha * mx);
    const double ssr = std::max(0.0, syy - fit.alpha * sxy);
    fit.stderr_alpha = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.lo = std::exp(*std::min_element(lx.begin(), lx.end()));
    fit.hi = std::exp(*std::max_element(lx.begin(), lx.end()));
    fit.points = n;
    return fit;
}

PowerLawFit fit_power_law(const LogHistogram& hist, double lo, double hi) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
        if (hist.counts[i] > 0.0) {
            xs.push_back(hist.center(i));
            ys.push_back(hist.density[i]);
        }
    }
    return fit_power_law(xs, ys, lo, hi);
}

std::vector<ScatterBin> binned_scatter(std::span<const double> x, std::span<const double> y, int bins_per_decade) {
    check_bpd(bins_per_decade);
    if (x.size() != y.size()) throw ValidationError("binned_scatter: x and y differ in length");
    if (x.size() < 100) throw ValidationError("binned_scatter: need at least 100 pairs");
    struct Acc {
        double sum_lx = 0.0;
        double sum_y = 0.0;
        double sum_y2 = 0.0;
        std::size_t n = 0;
    };
    std::map<long, Acc> acc;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw DomainError("binned_scatter: x must be positive and finite");
        }
        auto& a = acc[grid_index(x[i], bins_per_decade)];
        a.sum_lx += std::log(x[i]);
        a.sum_y += y[i];
        a.sum_y2 += y[i] * y[i];
        ++a.n;
    }
    std::vector<ScatterBin> out;
    for (const auto& [k, a] : acc) {
        const double n = static_cast<double>(a.n);
        const double mean = a.sum_y / n;
        const double var = std::max(0.0, a.sum_y2 / n - mean * mean);
        out.push_back(ScatterBin{std::pow(10.0, static_cast<double>(k) / bins_per_decade),
                                 std::pow(10.0, static_cast<double>(k + 1) / bins_per_decade),
                                 std::exp(a.sum_lx / n), mean, std::sqrt(var), a.n});
    }
    return out;
}

PowerLawFit fit_scatter(const std::vector<ScatterBin>& bins, double lo, double hi, std::size_t min_count) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& b : bins) {
        if (b.count >= min_count) {
            xs.push_back(b.x_center);
            ys.push_back(b.y_mean);
        }
    }
    return fit_power_law(xs, ys, lo, hi);
}

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct FftwPlan {
    FftwPlan(std::size_t n, double* in, fftw_complex* out)
        : plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE)) {}
    ~FftwPlan() { fftw_destroy_plan(plan); }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    fftw_plan plan;
};

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : ptr(fftw_malloc(n)) {
        if (ptr == nullptr) throw NumericalError("fftw_malloc failed");
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    void* ptr;
};

}  // namespace

Spectrum psd_uniform(std::span<const double> samples, double dt, const PsdOptions& opt) {
    if (!(dt > 0.0)) throw ValidationError("psd: sampling step must be positive");
    if (!is_power_of_two(opt.segments)) throw ValidationError("psd: segments must be a power of two");
    const std::size_t n = samples.size();
    if (n < opt.segments * 64) throw ValidationError("psd: series too short for the requested segments");
    const std::size_t len = n / opt.segments;
    const std::size_t hop = len / 2;
    const std::size_t nseg = (n - len) / hop + 1;

    std::vector<double> window(len);
    double wsq = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
        wsq += window[i] * window[i];
    }

    FftwBuffer in_buf(sizeof(double) * len);
    FftwBuffer out_buf(sizeof(fftw_complex) * (len / 2 + 1));
    auto* in = static_cast<double*>(in_buf.ptr);
    auto* out = static_cast<fftw_complex*>(out_buf.ptr);
    FftwPlan plan(len, in, out);

    const std::size_t nf = len / 2;
    std::vector<double> power(nf, 0.0);
    for (std::size_t s = 0; s < nseg; ++s) {
        const std::size_t off = s * hop;
        const double mean = std::accumulate(samples.begin() + static_cast<std::ptrdiff_t>(off),
                                            samples.begin() + static_cast<std::ptrdiff_t>(off + len), 0.0) /
                            static_cast<double>(len);
        for (std::size_t i = 0; i < len; ++i) in[i] = (samples[off + i] - mean) * window[i];
        fftw_execute(plan.plan);
        for (std::size_t k = 1; k <= nf; ++k) {
            power[k - 1] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
    }

    Spectrum spec;
    spec.sample_dt = dt;
    spec.freq.resize(nf);
    spec.power.resize(nf);
    const double df = 1.0 / (static_cast<double>(len) * dt);
    for (std::size_t k = 1; k <= nf; ++k) {
        spec.freq[k - 1] = static_cast<double>(k) * df;
        const double one_sided = k == nf ? 1.0 : 2.0;
        spec.power[k - 1] = one_sided * power[k - 1] * dt / (wsq * static_cast<double>(nseg));
    }

    double lo = opt.fit_lo;
    double hi = opt.fit_hi;
    if (lo <= 0.0 || hi <= 0.0) {
        const double fc = std::sqrt(spec.freq.front() * spec.freq.back());
        lo = fc / 10.0;
        hi = fc * 10.0;
    }
    // Average the periodogram on log bins so every decade weighs the same.
    std::map<long, std::pair<double, std::pair<double, std::size_t>>> bins;
    for (std::size_t i = 0; i < nf; ++i) {
        auto& b = bins[grid_index(spec.freq[i], opt.bins_per_decade)];
        b.first += std::log(spec.freq[i]);
        b.second.first += spec.power[i];
        ++b.second.second;
    }
    std::vector<double> bf;
    std::vector<double> bp;
    for (const auto& [k, b] : bins) {
        const double cnt = static_cast<double>(b.second.second);
        bf.push_back(std::exp(b.first / cnt));
        bp.push_back(b.second.first / cnt);
    }
    spec.fit = fit_power_law(bf, bp, lo, hi);
    spec.beta = -spec.fit.alpha;
    return spec;
}

ZeroOrderHoldGrid::ZeroOrderHoldGrid(double t_begin, double t_end, std::size_t points)
    : t_begin_(t_begin), dt_((t_end - t_begin) / static_cast<double>(points)), grid_(points) {
    if (points == 0 || !(t_end > t_begin) || !std::isfinite(t_end - t_begin)) {
        throw ValidationError("resampling grid needs t_end > t_begin and at least one point");
    }
}

void ZeroOrderHoldGrid::push(double t, double x) {
    if (have_) {
        while (next_ < grid_.size() && t_begin_ + static_cast<double>(next_) * dt_ < t) grid_[next_++] = current_;
    }
    have_ = true;
    current_ = x;
}

std::vector<double> ZeroOrderHoldGrid::finish() {
    if (!have_) throw ValidationError("resampling grid received no samples");
    while (next_ < grid_.size()) grid_[next_++] = current_;
    return std::move(grid_);
}

Spectrum psd_estimate(std::span<const double> t, std::span<const double> x, const PsdOptions& opt) {
    if (t.size() != x.size()) throw ValidationError("psd: t and x differ in length");
    if (!is_power_of_two(opt.grid_points)) throw ValidationError("psd: grid_points must be a power of two");
    if (t.size() < 2 || !(t.back() > t.front())) throw ValidationError("psd: path too short");
    ZeroOrderHoldGrid grid(t.front(), t.back(), opt.grid_points);
    for (std::size_t i = 0; i < t.size(); ++i) grid.push(t[i], x[i]);
    const double dt = grid.step();
    return psd_uniform(grid.finish(), dt, opt);
}

Spectrum psd_estimate(const Path& path, const PsdOptions& opt) { return psd_estimate(path.t_s, path.x, opt); }

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ValidationError("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

ExponentialTailFit fit_exponential_tail(std::span<const double> samples, double t0) {
    double excess = 0.0;
    std::size_t n = 0;
    for (double v : samples) {
        if (v > t0) {
            excess += v - t0;
            ++n;
        }
    }
    if (n < 2) throw ValidationError("fit_exponential_tail: fewer than 2 samples beyond t0");
    ExponentialTailFit fit;
    fit.points = n;
    fit.rate = static_cast<double>(n) / excess;
    fit.stderr_rate = fit.rate / std::sqrt(static_cast<double>(n));
    return fit;
}

double hill_density_exponent(std::vector<double> samples, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("hill: fraction must lie in (0, 1)");
    const auto k = static_cast<std::size_t>(fraction * static_cast<double>(samples.size()));
    if (k < 2) throw ValidationError("hill: too few tail samples");
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(k), samples.end(),
                     std::greater<>());
    const double ref = samples[k];
    if (!(ref > 0.0)) throw DomainError("hill: tail samples must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::log(samples[i] / ref);
    return 1.0 + static_cast<double>(k) / sum;
}

}  // namespace bursty
