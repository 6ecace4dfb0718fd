#pragma once

// First-passage theory of the nonlinear SDE through its Lamperti transform
// y = 1 / ((eta - 1) x^(eta - 1)), which maps dx = (eta - lambda/2) x^(2eta-1) dt
// + x^eta dW onto a Bessel process of index nu. A burst above h_x is an
// excursion of y below h_y = y(h_x), so burst durations are first hitting
// times of h_y from just below.

#include <cstddef>
#include <vector>

namespace bursty {

struct BesselIndex {
    double nu;
    double n_dim;  // always 2 (nu + 1)
};

// Requires eta > 1.
double lamperti(double x, double eta);
double lamperti_inverse(double y, double eta);
BesselIndex index_from(double eta, double lambda);

// 2 h_y^2 / j_{nu,1}^2: below it durations follow t^(-3/2), above it the
// density decays exponentially.
double crossover_time(double nu, double h_y);

inline constexpr std::size_t kDefaultTermCap = 10000;
// Series terms are kept while j_k^2 t_min / (2 h_y^2) stays below this.
inline constexpr double kTruncationExponent = 46.0;

struct FptSpec {
    double nu = 0.0;
    double h_y = 1.0;
    double t_min = 0.01;
    std::size_t k_terms = kDefaultTermCap;

    void validate() const;
};

// Density of the first time a Bessel process started at y0 < h_y reaches h_y.
double fpt_density(double nu, double y0, double h_y, double t, std::size_t k_cap = kDefaultTermCap);

// Burst-duration density as the limit y0 -> h_y of the first-passage density,
// p(t) = C1 sum_k j_k^2 exp(-j_k^2 t / (2 h_y^2)), normalized on [t_min, inf).
class BurstDurationSeries {
public:
    explicit BurstDurationSeries(const FptSpec& spec);

    double pdf(double t) const;
    // P(T > t | T >= t_min), closed form term by term.
    double survival(double t) const;
    double normalization() const { return c1_; }
    std::size_t terms() const { return rates_.size(); }
    const FptSpec& spec() const { return spec_; }

private:
    FptSpec spec_;
    std::vector<double> zeros_sq_;
    std::vector<double> rates_;
    double c1_ = 0.0;
};

// Sum over zeros replaced by an integral from j_{nu,1}:
// p(t) = C2 [h^2 j1 exp(-j1^2 t/(2h^2))/t + sqrt(pi/2) h^3 erfc(j1 sqrt(t)/(sqrt2 h))/t^(3/2)].
class BurstDurationClosed {
public:
    explicit BurstDurationClosed(const FptSpec& spec);

    double pdf(double t) const;
    double survival(double t) const;
    double normalization() const { return c2_; }
    double first_zero() const { return j1_; }
    const FptSpec& spec() const { return spec_; }

private:
    // Integral of the unnormalized density over [t, inf).
    double tail_mass(double t) const;

    FptSpec spec_;
    double j1_ = 0.0;
    double c2_ = 0.0;
};

double burst_pdf_series(const FptSpec& spec, double t);
double burst_pdf_closed(const FptSpec& spec, double t);

}  // namespace bursty
