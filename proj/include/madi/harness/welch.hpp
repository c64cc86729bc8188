#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace madi {

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction,
// 200-iteration cap, tolerance 1e-8.
inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    auto cf = [](double a_, double b_, double x_) {
        constexpr double tiny = 1e-30, tol = 1e-8;
        constexpr int max_iter = 200;
        double c = 1.0, d = 1.0 - (a_ + b_) * x_ / (a_ + 1.0);
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double f = d;
        for (int m = 1; m <= max_iter; ++m) {
            const double m2 = 2.0 * m;
            double num = m * (b_ - m) * x_ / ((a_ + m2 - 1.0) * (a_ + m2));
            d = 1.0 + num * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            f *= d * c;
            num = -(a_ + m) * (a_ + b_ + m) * x_ / ((a_ + m2) * (a_ + m2 + 1.0));
            d = 1.0 + num * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double delta = d * c;
            f *= delta;
            if (std::abs(delta - 1.0) < tol) break;
        }
        return f;
    };
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(ln_front) * cf(a, b, x) / a;
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) + b * std::log1p(-x) +
                          a * std::log(x)) *
                     cf(b, a, 1.0 - x) / b;
}

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

// Unequal-variances t-test, two-sided p from the Student-t distribution.
inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t na = a.size(), nb = b.size();
    if (na < 2 || nb < 2) throw std::invalid_argument("welch_t_test: need >= 2 samples per side");
    auto mean = [](const std::vector<double>& s) {
        double m = 0.0;
        for (double v : s) m += v;
        return m / static_cast<double>(s.size());
    };
    auto var = [](const std::vector<double>& s, double m) {
        double v = 0.0;
        for (double x : s) v += (x - m) * (x - m);
        return v / static_cast<double>(s.size() - 1);
    };
    const double ma = mean(a), mb = mean(b);
    const double va = var(a, ma), vb = var(b, mb);
    const double sa = va / static_cast<double>(na), sb = vb / static_cast<double>(nb);
    if (sa + sb <= 0.0) {
        if (ma == mb) return {0.0, static_cast<double>(na + nb - 2), 1.0};
        throw std::invalid_argument("welch_t_test: degenerate variance");
    }
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(sa + sb);
    r.df = (sa + sb) * (sa + sb) /
           (sa * sa / static_cast<double>(na - 1) + sb * sb / static_cast<double>(nb - 1));
    const double x = r.df / (r.df + r.t * r.t);
    r.p = incomplete_beta(r.df / 2.0, 0.5, x);
    if (r.p > 1.0) r.p = 1.0;
    if (r.p < 0.0) r.p = 0.0;
    return r;
}

}  // namespace madi
