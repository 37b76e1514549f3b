#include "ehpc/policies.hpp"

#include <algorithm>
#include <cmath>

namespace ehpc {

double clipped_greedy(double x, double e) {
    if (x < 0.0 || e < 0.0) throw std::domain_error("clipped_greedy: negative argument");
    return std::min(x, e);
}

int maximin_horizon(double x, double p) {
    if (p <= 0.0 || p >= 1.0) throw std::domain_error("maximin_horizon: p outside (0,1)");
    if (x < 0.0) throw std::domain_error("maximin_horizon: x < 0");
    constexpr int kMaxScan = 1'000'000; // finite by theory; caps parameter misuse
    double decay = 1.0;
    for (int i = 1; i <= kMaxScan; ++i) {
        decay *= 1.0 - p;
        if ((1.0 + p * (x + i)) * decay < 1.0) return i;
    }
    throw std::runtime_error("maximin_horizon: scan cap exceeded");
}

double maximin_policy(double x, double p) {
    const int m = maximin_horizon(x, p);
    const double sigma = p * (x + m) / (-std::expm1(m * std::log1p(-p))) - 1.0;
    return clip(sigma, 0.0, x);
}

double h1(double x, double e) {
    if (x < 0.0 || e < 0.0) throw std::domain_error("h1: negative argument");
    if (x < e) return rate(x);
    return rate(e) + rate_slope(e) * (x - e);
}

double h2(double x, double p) {
    if (x < 0.0) throw std::domain_error("h2: x < 0");
    double total = 0.0;
    double weight = 1.0;
    double residual = x;
    const int m = maximin_horizon(x, p);
    for (int i = 0; i < m; ++i) {
        const double u = maximin_policy(residual, p);
        total += weight * rate(u);
        weight *= 1.0 - p;
        residual -= u;
    }
    return total;
}

double rel_value(double b, const RelValueParams& params) {
    if (b < 0.0) throw std::domain_error("rel_value: b < 0");
    const double q = params.q;
    const double g = params.gamma_hat;
    // (1/q) log(1+gqb) cancels catastrophically as q -> 0; switch to the limit
    if (q < 1e-9) return g * b;
    return std::log1p(g * q * b) / q;
}

double rel_value_ext(double b, double gamma, const RelValueExtParams& params) {
    const double eff = params.slope * gamma + params.gamma0;
    if (eff <= 0.0) throw std::domain_error("rel_value_ext: nonpositive effective SNR");
    return rel_value(b, RelValueParams{params.q, eff});
}

double optimistic_policy(double b, double gamma, double c, const OptimisticParams& params) {
    // saturate at b so rounding in b + e - c (with e near c) cannot push the
    // lower bound above the upper bound
    const double b0 = std::min(lower_clip(b + params.e - c, 0.0), b);
    if (gamma <= 0.0) return b0;
    const double interior =
        (params.q * (b + params.e) - 1.0 / gamma + 1.0 / params.gamma_hat) / (1.0 + params.q);
    return clip(interior, b0, b);
}

double robust_policy(double b, double gamma, const RobustParams& params) {
    if (gamma <= 0.0) return 0.0;
    const double interior =
        (params.q * b - (1.0 - params.p) / gamma + 1.0 / params.gamma_hat) /
        (1.0 - params.p + params.q);
    return clip(interior, 0.0, b);
}

double problem3_objective(double u, double b, double gamma, double c,
                          const OptimisticParams& params) {
    if (u < 0.0 || u > b) throw std::domain_error("problem3_objective: u outside [0,b]");
    const RelValueParams h{params.q, params.gamma_hat};
    const double stored = b - u + std::min(params.e, c - b + u);
    return rate(gamma * u) + rel_value(stored, h);
}

double problem4_objective(double u, double b, double gamma, const RobustParams& params) {
    if (u < 0.0 || u > b) throw std::domain_error("problem4_objective: u outside [0,b]");
    const RelValueParams h{params.q, params.gamma_hat};
    // the p*rel_value(capacity) term is constant in u and omitted
    return rate(gamma * u) + (1.0 - params.p) * rel_value(b - u, h);
}

double linear_policy_orbit(double x, double q, double e, int n) {
    if (q <= 0.0 || q > 1.0) throw std::domain_error("linear_policy_orbit: q outside (0,1]");
    if (n < 0) throw std::domain_error("linear_policy_orbit: n < 0");
    const double fixed = e / q;
    return std::pow(1.0 - q, n) * (x - fixed) + fixed;
}

} // namespace ehpc
