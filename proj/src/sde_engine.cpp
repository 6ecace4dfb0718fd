#include "bursty/sde_engine.hpp"

#include <cmath>
#include <cstdio>

#include "bursty/errors.hpp"

namespace bursty {

namespace {

std::string fmt_param(const char* name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%.17g", name, v);
    return buf;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Counts complete excursions above a threshold in a sample stream. An
// excursion already in progress when counting starts is ignored.
class ExcursionCounter {
public:
    explicit ExcursionCounter(double threshold) : threshold_(threshold) {}

    void push(double v) {
        const bool above = v > threshold_;
        if (!started_) {
            started_ = true;
        } else if (above && !above_) {
            open_ = true;
        } else if (!above && above_ && open_) {
            ++count_;
            open_ = false;
        }
        above_ = above;
    }

    std::uint64_t count() const { return count_; }

private:
    double threshold_;
    bool started_ = false;
    bool above_ = false;
    bool open_ = false;
    std::uint64_t count_ = 0;
};

template <class StepFn, class Observable>
SimStats run_loop(const SimConfig& cfg, const SampleSink& sink, StepFn&& step, Observable&& observe) {
    cfg.validate();
    Engine rng = make_engine(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const bool by_bursts = cfg.stop.kind == StopRule::Kind::Bursts;
    ExcursionCounter counter(cfg.stop.threshold);
    SimStats stats;

    // Returns true once the stop rule is satisfied.
    auto emit = [&](double t, double x) {
        sink(t, x);
        ++stats.samples;
        if (by_bursts) {
            counter.push(observe(x));
            return counter.count() >= cfg.stop.bursts;
        }
        return cfg.stop.kind == StopRule::Kind::Time && t >= cfg.stop.t_s_max;
    };

    double x = cfg.x0;
    long double t = 0.0L;
    bool pending = false;
    double pending_t = 0.0;
    double pending_x = 0.0;
    for (;;) {
        if (t >= cfg.burn_in) {
            const auto td = static_cast<double>(t);
            if (!pending) {
                pending = true;
                pending_t = td;
                pending_x = x;
            } else if (td > pending_t) {
                if (emit(pending_t, pending_x)) break;
                pending_t = td;
                pending_x = x;
            } else if (observe(x) > observe(pending_x)) {
                pending_x = x;
            }
        }
        if (cfg.stop.kind == StopRule::Kind::Steps && stats.steps >= cfg.stop.steps) {
            if (pending) emit(pending_t, pending_x);
            break;
        }
        if (stats.steps >= cfg.max_steps) {
            throw TruncationError("stop condition not reached within " +
                                  std::to_string(cfg.max_steps) + " steps");
        }
        Step s = step(x, gauss(rng));
        if (!std::isfinite(s.x_next) || !std::isfinite(s.dt_s) || !(s.dt_s > 0.0)) {
            throw NumericalError("non-finite state at step " + std::to_string(stats.steps));
        }
        if (std::abs(s.x_next) > cfg.x_ceiling) {
            s.x_next = cfg.x_ceiling * (cfg.x_ceiling / s.x_next);
        }
        x = s.x_next;
        t += s.dt_s;
        ++stats.steps;
    }
    stats.bursts = counter.count();
    stats.t_end = static_cast<double>(t);
    return stats;
}

}  // namespace

void SdeParams::validate() const {
    if (!finite_positive(eta)) throw ValidationError("eta must be positive");
    if (!(std::isfinite(lambda) && lambda > 1.0)) throw ValidationError("lambda must exceed 1");
    if (!finite_positive(x_min)) throw ValidationError("x_min must be positive");
    if (m < 1) throw ValidationError("m must be a positive integer");
    if (!finite_positive(sigma_t_sq)) throw ValidationError("sigma_t_sq must be positive");
}

std::string SdeParams::fingerprint() const {
    return "simple:" + fmt_param("eta", eta) + "," + fmt_param("lambda", lambda) + "," +
           fmt_param("x_min", x_min) + ",m=" + std::to_string(m) + "," +
           fmt_param("sigma_t_sq", sigma_t_sq);
}

void ComplexSdeParams::validate() const {
    if (!finite_positive(eta)) throw ValidationError("eta must be positive");
    if (!(std::isfinite(lambda) && lambda > 1.0)) throw ValidationError("lambda must exceed 1");
    if (!finite_positive(epsilon)) throw ValidationError("epsilon must be positive");
    if (!(std::isfinite(x_max_cap) && x_max_cap > 1.0)) throw ValidationError("x_max_cap must exceed 1");
    if (!finite_positive(sigma_t_sq)) throw ValidationError("sigma_t_sq must be positive");
}

std::string ComplexSdeParams::fingerprint() const {
    return "complex:" + fmt_param("eta", eta) + "," + fmt_param("lambda", lambda) + "," +
           fmt_param("epsilon", epsilon) + "," + fmt_param("x_max_cap", x_max_cap) + "," +
           fmt_param("sigma_t_sq", sigma_t_sq);
}

StopRule StopRule::after_bursts(std::uint64_t count, double threshold) {
    StopRule r;
    r.kind = Kind::Bursts;
    r.bursts = count;
    r.threshold = threshold;
    return r;
}

StopRule StopRule::at_time(double t_s_max) {
    StopRule r;
    r.kind = Kind::Time;
    r.t_s_max = t_s_max;
    return r;
}

StopRule StopRule::after_steps(std::uint64_t steps) {
    StopRule r;
    r.kind = Kind::Steps;
    r.steps = steps;
    return r;
}

void SimConfig::validate() const {
    if (!(kappa > 0.0 && kappa <= 0.5)) throw ValidationError("kappa must lie in (0, 0.5]");
    if (!std::isfinite(x0)) throw ValidationError("x0 must be finite");
    if (!(std::isfinite(burn_in) && burn_in >= 0.0)) throw ValidationError("burn_in must be >= 0");
    if (max_steps == 0) throw ValidationError("max_steps must be positive");
    if (!(x_ceiling > 1.0) || !std::isfinite(x_ceiling)) throw ValidationError("x_ceiling must be finite and exceed 1");
    if (stop.kind == StopRule::Kind::Bursts) {
        if (stop.bursts == 0) throw ValidationError("burst target must be positive");
        if (!std::isfinite(stop.threshold)) throw ValidationError("burst threshold must be finite");
    } else if (stop.kind == StopRule::Kind::Time) {
        if (!std::isfinite(stop.t_s_max)) throw ValidationError("stop time must be finite");
    } else if (stop.steps == 0 || stop.steps > max_steps) {
        throw ValidationError("step target must lie in [1, max_steps]");
    }
}

double drift_simple(double x, const SdeParams& p) {
    if (!(x > 0.0)) throw DomainError("drift_simple: x must be positive");
    const double restriction = 0.5 * p.m * std::pow(p.x_min / x, p.m);
    return (p.eta - 0.5 * p.lambda + restriction) * std::pow(x, 2.0 * p.eta - 1.0);
}

double diffusion_simple(double x, const SdeParams& p) {
    if (!(x > 0.0)) throw DomainError("diffusion_simple: x must be positive");
    return std::pow(x, p.eta);
}

Step step_adaptive(double x, const SdeParams& p, double kappa, double zeta) {
    if (!(x > 0.0)) throw DomainError("step_adaptive: x must be positive");
    const double k2 = kappa * kappa;
    const double bracket = p.eta - 0.5 * p.lambda + 0.5 * p.m * std::pow(p.x_min / x, p.m);
    Step s;
    s.dt_s = k2 * std::pow(x, 2.0 - 2.0 * p.eta);
    s.x_next = x + k2 * bracket * x + kappa * x * zeta;
    const double floor = reflecting_floor(p);
    if (s.x_next <= floor) {
        s.x_next = 2.0 * floor - s.x_next;
    }
    return s;
}

double drift_complex(double x, const ComplexSdeParams& p) {
    if (!std::isfinite(x)) throw DomainError("drift_complex: x must be finite");
    const double u = 1.0 + x * x;
    const double scaled = x / p.x_max_cap;
    const double den = p.epsilon * std::sqrt(u) + 1.0;
    return (p.eta - 0.5 * p.lambda - scaled * scaled) * std::pow(u, p.eta - 1.0) / (den * den) * x;
}

double diffusion_complex(double x, const ComplexSdeParams& p) {
    if (!std::isfinite(x)) throw DomainError("diffusion_complex: x must be finite");
    const double u = 1.0 + x * x;
    return std::pow(u, 0.5 * p.eta) / (p.epsilon * std::sqrt(u) + 1.0);
}

Step step_adaptive_complex(double x, const ComplexSdeParams& p, double kappa, double zeta) {
    const double dt = kappa * kappa / std::pow(1.0 + x * x, p.eta - 1.0);
    return {x + drift_complex(x, p) * dt + diffusion_complex(x, p) * std::sqrt(dt) * zeta, dt};
}

SimStats integrate(const SdeParams& p, const SimConfig& cfg, const SampleSink& sink) {
    p.validate();
    if (!(cfg.x0 > reflecting_floor(p))) throw ValidationError("x0 must lie above the reflecting floor");
    return run_loop(
        cfg, sink, [&](double x, double zeta) { return step_adaptive(x, p, cfg.kappa, zeta); },
        [](double x) { return x; });
}

SimStats integrate(const ComplexSdeParams& p, const SimConfig& cfg, const SampleSink& sink) {
    p.validate();
    return run_loop(
        cfg, sink, [&](double x, double zeta) { return step_adaptive_complex(x, p, cfg.kappa, zeta); },
        [](double x) { return std::abs(x); });
}

namespace {

template <class Params>
Path collect(const Params& p, const SimConfig& cfg) {
    Path path;
    const SimStats stats = integrate(p, cfg, [&](double t, double x) {
        path.t_s.push_back(t);
        path.x.push_back(x);
    });
    path.fingerprint = p.fingerprint();
    path.seed = cfg.seed;
    path.kappa = cfg.kappa;
    path.sigma_t_sq = p.sigma_t_sq;
    path.steps = stats.steps;
    return path;
}

}  // namespace

Path simulate(const SdeParams& p, const SimConfig& cfg) { return collect(p, cfg); }

Path simulate(const ComplexSdeParams& p, const SimConfig& cfg) { return collect(p, cfg); }

double stationary_pdf(double x, const SdeParams& p) {
    if (!(p.lambda > 1.0)) throw DomainError("stationary_pdf: lambda must exceed 1 for normalization");
    if (!(x > 0.0)) throw DomainError("stationary_pdf: x must be positive");
    const double a = (p.lambda - 1.0) / p.m;
    const double log_norm = std::log(static_cast<double>(p.m)) + (p.lambda - 1.0) * std::log(p.x_min) -
                            std::lgamma(a);
    return std::exp(log_norm - std::pow(p.x_min / x, p.m) - p.lambda * std::log(x));
}

double spectral_beta(const SdeParams& p) {
    if (p.eta == 1.0) throw DomainError("beta is defined only for eta != 1");
    return 1.0 + (p.lambda - 3.0) / (2.0 * (p.eta - 1.0));
}

double bessel_first_passage(double nu, double y0, double h_y, double dt, double t_max, Engine& rng,
                            bool bridge_correction) {
    if (!(y0 > 0.0 && y0 < h_y)) throw DomainError("bessel_first_passage: need 0 < y0 < h_y");
    if (!(dt > 0.0) || !(t_max > 0.0)) throw ValidationError("bessel_first_passage: dt and t_max must be positive");
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double drift = nu + 0.5;
    const double sqdt = std::sqrt(dt);
    double y = y0;
    double t = 0.0;
    while (t < t_max) {
        double next = y + drift / y * dt + sqdt * gauss(rng);
        if (next <= 0.0) next = -next;
        if (next >= h_y) {
            return t + dt * (h_y - y) / (next - y);
        }
        if (bridge_correction) {
            const double p_cross = std::exp(-2.0 * (h_y - y) * (h_y - next) / dt);
            if (unif(rng) < p_cross) return t + 0.5 * dt;
        }
        y = next;
        t += dt;
    }
    return -1.0;
}

}  // namespace bursty
