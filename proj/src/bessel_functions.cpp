#include "bursty/bessel_functions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <shared_mutex>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "bursty/errors.hpp"

namespace bursty {

namespace {

constexpr double kPi = std::numbers::pi;

void check_order(double nu, double lo, const char* what) {
    if (!(nu > lo || (lo == kMinZeroOrder && nu == lo)) || !(nu <= kMaxBesselOrder)) {
        throw DomainError(std::string(what) + ": order " + std::to_string(nu) + " outside supported range");
    }
}

// Power series in extended precision. Returns nothing when cancellation
// between terms would cost more than five of the ~19 available digits.
std::optional<long double> series_j(double nu, double x) {
    const long double hx = 0.5L * x;
    const long double hx2 = hx * hx;
    long double term = std::exp(static_cast<long double>(nu) * std::log(hx) - std::lgamma(static_cast<long double>(nu) + 1.0L));
    long double sum = term;
    long double largest = std::fabs(term);
    for (int k = 0; k < 500; ++k) {
        term *= -hx2 / ((k + 1.0L) * (k + 1.0L + nu));
        sum += term;
        largest = std::max(largest, std::fabs(term));
        if (std::fabs(term) <= 1e-22L * std::fabs(sum) && k + 1 > hx) {
            break;
        }
    }
    if (largest > 1e5L * std::fabs(sum) && x >= 12.0) return std::nullopt;
    return sum;
}

// Hankel expansion J = sqrt(2/(pi x)) (P cos w - Q sin w). Returns nothing
// when the asymptotic series cannot reach full double precision at this x.
std::optional<long double> hankel_j(double nu, double x) {
    const long double mu = 4.0L * nu * nu;
    const long double eightx = 8.0L * x;
    long double p = 1.0L;
    long double q = 0.0L;
    long double term = 1.0L;
    bool converged = false;
    for (int k = 1; k < 200; ++k) {
        const long double odd = 2.0L * k - 1.0L;
        const long double next = term * (mu - odd * odd) / (k * eightx);
        if (odd * odd > mu && std::fabs(next) > std::fabs(term)) {
            break;
        }
        term = next;
        // Signs cycle +Q, -P, -Q, +P for k = 1, 2, 3, 4.
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            default: p += term; break;
        }
        if (std::fabs(term) < 1e-17L) {
            converged = true;
            break;
        }
    }
    if (!converged) return std::nullopt;
    const long double w = static_cast<long double>(x) - (0.5L * nu + 0.25L) * std::numbers::pi_v<long double>;
    return std::sqrt(2.0L / (std::numbers::pi_v<long double> * x)) * (p * std::cos(w) - q * std::sin(w));
}

// J_nu(x) = (1/pi) int_0^pi cos(nu t - x sin t) dt
//           - (sin(nu pi)/pi) int_0^inf exp(-x sinh t - nu t) dt.
double integral_j(double nu, double x) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    auto composite = [](auto&& f, double a, double b, int panels) {
        const double w = (b - a) / panels;
        double sum = 0.0;
        for (int i = 0; i < panels; ++i) sum += Rule::integrate(f, a + i * w, a + (i + 1) * w);
        return sum;
    };
    auto oscillatory = [&](double t) { return std::cos(nu * t - x * std::sin(t)); };
    const double first = composite(oscillatory, 0.0, kPi, 4 + static_cast<int>(std::ceil(0.5 * (x + std::fabs(nu)))));
    double second = 0.0;
    if (nu != std::round(nu)) {
        auto decaying = [&](double t) { return std::exp(-x * std::sinh(t) - nu * t); };
        const double upper = std::asinh(800.0 / x) + 1.0;
        second = std::sin(nu * kPi) * composite(decaying, 0.0, upper, 16);
    }
    return (first - second) / kPi;
}

double next_zero_in(double nu, double lo, double hi, double flo, double fhi) {
    auto f = [nu](double z) { return bessel_j(nu, z); };
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

// Scans forward from `from` in steps of `step` until J changes sign.
double scan_zero(double nu, double from, double step) {
    double a = from;
    double fa = bessel_j(nu, a);
    for (int i = 0; i < 100000; ++i) {
        const double b = a + step;
        const double fb = bessel_j(nu, b);
        if (fb == 0.0) return b;
        if ((fa < 0.0) != (fb < 0.0)) return next_zero_in(nu, a, b, fa, fb);
        a = b;
        fa = fb;
    }
    throw NumericalError("bessel_zeros: no sign change found");
}

// Consecutive zeros approach spacing pi monotonically (from below for
// nu < 1/2, from above for nu > 1/2), so the next zero lies between
// prev + pi and prev + last_spacing.
double next_zero(double nu, double prev, double spacing) {
    const double lo = prev + std::min(kPi, spacing) - 0.05;
    const double hi = prev + std::max(kPi, spacing) + 0.05;
    const double flo = bessel_j(nu, lo);
    const double fhi = bessel_j(nu, hi);
    if ((flo < 0.0) != (fhi < 0.0) && flo != 0.0 && fhi != 0.0) {
        return next_zero_in(nu, lo, hi, flo, fhi);
    }
    return scan_zero(nu, prev + 0.5, 0.5);
}

class ZeroCache {
public:
    std::vector<double> get(double nu, std::size_t k) {
        {
            std::shared_lock lock(mutex_);
            auto it = tables_.find(nu);
            if (it != tables_.end() && it->second.size() >= k) {
                return {it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(k)};
            }
        }
        std::unique_lock lock(mutex_);
        auto& zeros = tables_[nu];
        if (zeros.empty()) {
            zeros.push_back(scan_zero(nu, std::max(0.5, nu), 0.25));
        }
        while (zeros.size() < k) {
            const std::size_t n = zeros.size();
            const double spacing = n >= 2 ? zeros[n - 1] - zeros[n - 2] : kPi;
            zeros.push_back(n >= 2 ? next_zero(nu, zeros[n - 1], spacing) : scan_zero(nu, zeros[0] + 0.5, 0.5));
        }
        return {zeros.begin(), zeros.begin() + static_cast<std::ptrdiff_t>(k)};
    }

private:
    std::shared_mutex mutex_;
    std::map<double, std::vector<double>> tables_;
};

ZeroCache& zero_cache() {
    static ZeroCache cache;
    return cache;
}

}  // namespace

double bessel_j(double nu, double x) {
    check_order(nu, kMinBesselOrder, "bessel_j");
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("bessel_j: x must be finite and non-negative");
    if (x == 0.0) {
        if (nu == 0.0) return 1.0;
        if (nu > 0.0) return 0.0;
        throw DomainError("bessel_j: J_nu(0) is unbounded for negative order");
    }
    if (x < std::max(12.0, 2.0 * nu)) {
        if (const auto s = series_j(nu, x)) {
            return static_cast<double>(*s);
        }
        return integral_j(nu, x);
    }
    if (const auto h = hankel_j(nu, x)) {
        return static_cast<double>(*h);
    }
    return integral_j(nu, x);
}

std::vector<double> bessel_zeros(double nu, std::size_t k_terms) {
    check_order(nu, kMinZeroOrder, "bessel_zeros");
    if (k_terms == 0) throw DomainError("bessel_zeros: k_terms must be at least 1");
    return zero_cache().get(nu, k_terms);
}

double bessel_first_zero(double nu) { return bessel_zeros(nu, 1).front(); }

}  // namespace bursty
