#pragma once

#include "ehpc/core.hpp"

namespace ehpc {

// ---------------------------------------------------------------------------
// Parameter bundles
// ---------------------------------------------------------------------------

struct OptimisticParams {
    double e = 0.0;         // clipped-mean estimate of the next arrival
    double q = 0.5;         // effectively equivalent linear-policy slope
    double gamma_hat = 1.0; // effectively equivalent channel SNR coefficient
};

struct RobustParams {
    double p = 0.0; // DMCR estimate, p in [0,1)
    double q = 0.5;
    double gamma_hat = 1.0;
};

struct RelValueParams {
    double q = 0.5;
    double gamma_hat = 1.0;
};

struct RelValueExtParams {
    double q = 0.5;
    double gamma0 = 1.0; // intercept of the effective SNR map
    double slope = 0.0;  // weight on the observed lookahead SNR
};

// ---------------------------------------------------------------------------
// Quasi-static baselines (used as analytic oracles)
// ---------------------------------------------------------------------------

// optimal action under a constant arrival e: min(x, e)
double clipped_greedy(double x, double e);

// smallest horizon i >= 1 with [1 + p(x + i)](1-p)^i < 1
int maximin_horizon(double x, double p);

// optimal first allocation under Bernoulli(p) arrivals of full magnitude
double maximin_policy(double x, double p);

// relative value for one-point arrivals: r(x) below e, linear extension above
double h1(double x, double e);

// relative value for Bernoulli arrivals, evaluated as the finite sum of
// geometrically discounted rates along the maximin allocation
double h2(double x, double p);

// ---------------------------------------------------------------------------
// Approximate relative values
// ---------------------------------------------------------------------------

// (1/q) log(1 + gamma_hat*q*b), with the continuous limit gamma_hat*b as q->0
double rel_value(double b, const RelValueParams& params);

// same with effective SNR gamma_hat = slope*gamma + gamma0
double rel_value_ext(double b, double gamma, const RelValueExtParams& params);

// ---------------------------------------------------------------------------
// Clipped affine policies
// ---------------------------------------------------------------------------

// clip((q(b+e) - 1/gamma + 1/gamma_hat)/(1+q), max(b+e-c, 0), b)
double optimistic_policy(double b, double gamma, double c, const OptimisticParams& params);

// clip((qb - (1-p)/gamma + 1/gamma_hat)/(1-p+q), 0, b)
double robust_policy(double b, double gamma, const RobustParams& params);

// single-slot objectives maximized by the policies; exposed for the grid
// argmax oracles in tests
double problem3_objective(double u, double b, double gamma, double c,
                          const OptimisticParams& params);
double problem4_objective(double u, double b, double gamma, const RobustParams& params);

// n-fold iterate of phi(x) = (1-q)x + e in closed form: (1-q)^n (x - e/q) + e/q
double linear_policy_orbit(double x, double q, double e, int n);

} // namespace ehpc
