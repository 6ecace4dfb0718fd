#pragma once

// Variable-step Euler-Maruyama integration of the nonlinear SDE family
//
//   dx = (eta - lambda/2 + (m/2)(x_min/x)^m) x^(2 eta - 1) dt_s + x^eta dW_s
//
// and of the two-regime return SDE with an exponential cap at x_max_cap.
// Time is the dimensionless scaled time t_s = sigma_t^2 t.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bursty/rng.hpp"

namespace bursty {

// sigma_t^2 fitted to the absolute return of NYSE stocks, in 1/s.
inline constexpr double kEmpiricalSigmaTSq = 1.0e-5 / 6.0;

struct SdeParams {
    double eta = 2.5;
    double lambda = 4.0;
    double x_min = 1.0;
    int m = 2;
    double sigma_t_sq = kEmpiricalSigmaTSq;

    void validate() const;
    std::string fingerprint() const;
};

struct ComplexSdeParams {
    double eta = 2.5;
    double lambda = 3.6;
    double sigma_t_sq = kEmpiricalSigmaTSq;
    double epsilon = 0.017;
    double x_max_cap = 1.0e3;

    void validate() const;
    std::string fingerprint() const;
};

// Stop after `bursts` complete excursions above `threshold`, once scaled
// time reaches `t_s_max`, or after `steps` integration steps (burn-in
// included).
struct StopRule {
    enum class Kind { Bursts, Time, Steps };

    Kind kind = Kind::Time;
    std::uint64_t bursts = 0;
    double threshold = 0.0;
    double t_s_max = 0.0;
    std::uint64_t steps = 0;

    static StopRule after_bursts(std::uint64_t count, double threshold);
    static StopRule at_time(double t_s_max);
    static StopRule after_steps(std::uint64_t steps);
};

struct SimConfig {
    double kappa = 0.1;
    double x0 = 1.0;
    double burn_in = 1.0e3;
    std::uint64_t seed = 0;
    StopRule stop = StopRule::at_time(1.0e4);
    std::uint64_t max_steps = 10'000'000'000ULL;
    // Values (|x| for the complex model) above this are reflected in log
    // space. For nu <= 0 the variable-step walk of log x is not positive
    // recurrent and would otherwise overflow; the time spent this high is
    // negligible.
    double x_ceiling = 1.0e12;

    void validate() const;
};

// Variable-step samples of one realization. Samples before burn-in are not
// stored, so t_s starts at or after cfg.burn_in. Steps too short to advance
// t_s in double precision are merged into one sample holding the most
// extreme value.
struct Path {
    std::vector<double> t_s;
    std::vector<double> x;
    std::string fingerprint;
    std::uint64_t seed = 0;
    double kappa = 0.0;
    double sigma_t_sq = kEmpiricalSigmaTSq;
    std::uint64_t steps = 0;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }
    double seconds(std::size_t i) const { return t_s[i] / sigma_t_sq; }
};

struct Step {
    double x_next;
    double dt_s;
};

// Drift of the restricted SDE, in value per unit scaled time.
double drift_simple(double x, const SdeParams& p);
// x^eta.
double diffusion_simple(double x, const SdeParams& p);

// Smallest value the integrator may return; overshoots below it are reflected.
inline double reflecting_floor(const SdeParams& p) { return 1.0e-6 * p.x_min; }

// One step of the variable-step scheme: dt_s = kappa^2 x^(2-2 eta), chosen so
// the noise increment is kappa * x * zeta.
Step step_adaptive(double x, const SdeParams& p, double kappa, double zeta);

double drift_complex(double x, const ComplexSdeParams& p);
double diffusion_complex(double x, const ComplexSdeParams& p);

// dt_s = kappa^2 / (1 + x^2)^(eta - 1); plain Euler-Maruyama with that step.
Step step_adaptive_complex(double x, const ComplexSdeParams& p, double kappa, double zeta);

struct SimStats {
    std::uint64_t steps = 0;
    std::uint64_t samples = 0;
    std::uint64_t bursts = 0;
    double t_end = 0.0;
};

// Called for every retained (t_s, x) sample in order.
using SampleSink = std::function<void(double t_s, double x)>;

// Streaming integrators; the burst stop rule counts excursions of x (simple)
// or |x| (complex) above the threshold whose up-crossing lies after burn-in.
SimStats integrate(const SdeParams& p, const SimConfig& cfg, const SampleSink& sink);
SimStats integrate(const ComplexSdeParams& p, const SimConfig& cfg, const SampleSink& sink);

Path simulate(const SdeParams& p, const SimConfig& cfg);
Path simulate(const ComplexSdeParams& p, const SimConfig& cfg);

// Normalized stationary density of the restricted SDE.
double stationary_pdf(double x, const SdeParams& p);

// beta = 1 + (lambda - 3) / (2 (eta - 1)).
double spectral_beta(const SdeParams& p);

// Euler-Maruyama for the Bessel process dy = (nu + 1/2)/y dt + dW started at
// y0 < h_y. Returns the first time y reaches h_y, with the crossing located by
// linear interpolation inside the final step, or a negative value if
// t_max is reached first. With bridge_correction the probability that a
// Brownian bridge crossed h_y inside a step is also accounted for.
double bessel_first_passage(double nu, double y0, double h_y, double dt, double t_max,
                            Engine& rng, bool bridge_correction = false);

}  // namespace bursty
