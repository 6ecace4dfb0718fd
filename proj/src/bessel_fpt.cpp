#include "bursty/bessel_fpt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bursty/bessel_functions.hpp"
#include "bursty/errors.hpp"

namespace bursty {

namespace {

void require_superlinear(double eta, const char* what) {
    if (!(eta > 1.0) || !std::isfinite(eta)) {
        throw DomainError(std::string(what) + ": the Lamperti transform needs eta > 1");
    }
}

// Number of zeros that certainly covers j <= j_max.
std::size_t zeros_covering(double nu, double j_max) {
    return static_cast<std::size_t>(std::ceil(j_max / std::numbers::pi + 0.5 * std::fabs(nu))) + 2;
}

}  // namespace

double lamperti(double x, double eta) {
    require_superlinear(eta, "lamperti");
    if (!(x > 0.0)) throw DomainError("lamperti: x must be positive");
    return 1.0 / ((eta - 1.0) * std::pow(x, eta - 1.0));
}

double lamperti_inverse(double y, double eta) {
    require_superlinear(eta, "lamperti_inverse");
    if (!(y > 0.0)) throw DomainError("lamperti_inverse: y must be positive");
    return std::pow((eta - 1.0) * y, -1.0 / (eta - 1.0));
}

BesselIndex index_from(double eta, double lambda) {
    require_superlinear(eta, "index_from");
    const double nu = (lambda - 2.0 * eta + 1.0) / (2.0 * (eta - 1.0));
    return {nu, 2.0 * (nu + 1.0)};
}

double crossover_time(double nu, double h_y) {
    if (!(h_y > 0.0)) throw DomainError("crossover_time: h_y must be positive");
    const double j1 = bessel_first_zero(nu);
    return 2.0 * h_y * h_y / (j1 * j1);
}

void FptSpec::validate() const {
    if (!(h_y > 0.0) || !std::isfinite(h_y)) throw ValidationError("FptSpec: h_y must be positive");
    if (!(t_min > 0.0) || !std::isfinite(t_min)) throw ValidationError("FptSpec: t_min must be positive");
    if (k_terms < 1) throw ValidationError("FptSpec: k_terms must be at least 1");
    if (!(nu > -0.5)) throw ValidationError("FptSpec: nu must exceed -1/2 for a proper hitting time");
}

double fpt_density(double nu, double y0, double h_y, double t, std::size_t k_cap) {
    if (!(y0 > 0.0 && y0 < h_y)) throw DomainError("fpt_density: requires 0 < y0 < h_y");
    if (!(t > 0.0)) throw DomainError("fpt_density: t must be positive");
    if (!(nu > -0.5)) throw DomainError("fpt_density: nu must exceed -1/2");
    const double two_h2 = 2.0 * h_y * h_y;
    const double j_max = std::sqrt(kTruncationExponent * two_h2 / t);
    const std::size_t wanted = zeros_covering(nu, j_max);
    if (wanted > k_cap) {
        throw NumericalError("fpt_density: t=" + std::to_string(t) + " needs more than " +
                             std::to_string(k_cap) + " series terms");
    }
    const auto zeros = bessel_zeros(nu, wanted);
    const double ratio = y0 / h_y;
    double sum = 0.0;
    for (double j : zeros) {
        const double exponent = j * j * t / two_h2;
        if (exponent > kTruncationExponent + 10.0) break;
        sum += j * bessel_j(nu, ratio * j) / bessel_j(nu + 1.0, j) * std::exp(-exponent);
    }
    return std::pow(h_y, nu - 2.0) / std::pow(y0, nu) * sum;
}

BurstDurationSeries::BurstDurationSeries(const FptSpec& spec) : spec_(spec) {
    spec_.validate();
    const double two_h2 = 2.0 * spec_.h_y * spec_.h_y;
    const double j_max = std::sqrt(kTruncationExponent * two_h2 / spec_.t_min);
    const std::size_t wanted = std::min(spec_.k_terms, zeros_covering(spec_.nu, j_max));
    for (double j : bessel_zeros(spec_.nu, wanted)) {
        zeros_sq_.push_back(j * j);
        rates_.push_back(j * j / two_h2);
        if (rates_.back() * spec_.t_min > kTruncationExponent) break;
    }
    // int_{t_min}^inf j^2 exp(-a t) dt = j^2 exp(-a t_min) / a = 2 h^2 exp(-a t_min).
    double mass = 0.0;
    for (double a : rates_) mass += two_h2 * std::exp(-a * spec_.t_min);
    c1_ = 1.0 / mass;
}

double BurstDurationSeries::pdf(double t) const {
    if (!(t >= spec_.t_min)) throw DomainError("burst_pdf_series: t below t_min");
    double sum = 0.0;
    for (std::size_t k = 0; k < rates_.size(); ++k) sum += zeros_sq_[k] * std::exp(-rates_[k] * t);
    return c1_ * sum;
}

double BurstDurationSeries::survival(double t) const {
    if (!(t >= spec_.t_min)) throw DomainError("burst_pdf_series: t below t_min");
    const double two_h2 = 2.0 * spec_.h_y * spec_.h_y;
    double sum = 0.0;
    for (double a : rates_) sum += two_h2 * std::exp(-a * t);
    return c1_ * sum;
}

BurstDurationClosed::BurstDurationClosed(const FptSpec& spec) : spec_(spec) {
    spec_.validate();
    j1_ = bessel_first_zero(spec_.nu);
    c2_ = 1.0 / tail_mass(spec_.t_min);
}

// int_t^inf dt' int_{j1}^inf u^2 exp(-u^2 t'/(2h^2)) du = 2h^2 int_{j1}^inf exp(-u^2 t/(2h^2)) du
//   = h^3 sqrt(2 pi / t) erfc(j1 sqrt(t / (2 h^2))).
double BurstDurationClosed::tail_mass(double t) const {
    const double h = spec_.h_y;
    return h * h * h * std::sqrt(2.0 * std::numbers::pi / t) * std::erfc(j1_ * std::sqrt(t / (2.0 * h * h)));
}

double BurstDurationClosed::pdf(double t) const {
    if (!(t >= spec_.t_min)) throw DomainError("burst_pdf_closed: t below t_min");
    const double h = spec_.h_y;
    const double h2 = h * h;
    const double first = h2 * j1_ * std::exp(-j1_ * j1_ * t / (2.0 * h2)) / t;
    const double second = std::sqrt(0.5 * std::numbers::pi) * h2 * h *
                          std::erfc(j1_ * std::sqrt(t) / (std::numbers::sqrt2 * h)) / (t * std::sqrt(t));
    return c2_ * (first + second);
}

double BurstDurationClosed::survival(double t) const {
    if (!(t >= spec_.t_min)) throw DomainError("burst_pdf_closed: t below t_min");
    return c2_ * tail_mass(t);
}

double burst_pdf_series(const FptSpec& spec, double t) { return BurstDurationSeries(spec).pdf(t); }

double burst_pdf_closed(const FptSpec& spec, double t) { return BurstDurationClosed(spec).pdf(t); }

}  // namespace bursty
