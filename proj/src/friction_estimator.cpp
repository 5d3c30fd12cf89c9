#include "iepb/friction_estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "iepb/filters.hpp"

namespace iepb {

EstimatorConfig EstimatorConfig::from_tyre(const TyreCurve& curve,
                                           double fz_nominal_n) {
    EstimatorConfig cfg;
    cfg.k1 = curve.initial_slope(fz_nominal_n);
    cfg.k0 = 0.0;
    cfg.delta1 = 0.25 * cfg.k1;
    cfg.delta2 = 0.25 * cfg.k1;
    cfg.delta3 = 0.10 * cfg.k1;
    cfg.delta4 = 0.10 * cfg.k1;
    return cfg;
}

double utilized_mu(double fx, double fz, double fz_guard, double prev,
                   bool* flagged) {
    if (!(fz > fz_guard)) {
        if (flagged) *flagged = true;
        return prev;
    }
    if (flagged) *flagged = false;
    return clamp(fx / fz, 0.0, 1.5);
}

double slope(double mu_x, double mu_x_prev, double lambda, double lambda_prev,
             double k_prev) {
    const double dl = lambda - lambda_prev;
    if (std::fabs(dl) <= 1e-6) return k_prev;
    return (mu_x - mu_x_prev) / dl;
}

double classify_and_update(EstimatorState& state, double k_t, double mu_x,
                           double lambda, const EstimatorConfig& cfg) {
    const double dl = lambda - state.lambda_prev;
    double mu_new = state.mu_hat;
    if (k_t >= cfg.k1 - cfg.delta1 && k_t <= cfg.k1 + cfg.delta2) {
        mu_new = mu_x + cfg.k1 * dl;                 // linear area
    } else if (k_t >= cfg.k0 + cfg.delta3 && k_t < cfg.k1 - cfg.delta1) {
        mu_new = mu_x + k_t * dl;                    // transitional area
    } else if (k_t >= -cfg.delta4 && k_t < cfg.k0 + cfg.delta3) {
        mu_new = state.mu_x_prev;                    // frictional area
    }
    // Slopes outside all bands hold the previous estimate.

    const double max_step = cfg.slew_per_s * cfg.t_ctrl;
    mu_new = clamp(mu_new, state.mu_hat - max_step, state.mu_hat + max_step);
    mu_new = clamp(mu_new, cfg.mu_min, cfg.mu_max);

    state.mu_x_prev = mu_x;
    state.lambda_prev = lambda;
    state.k_prev = k_t;
    state.mu_hat = mu_new;
    return mu_new;
}

double optimal_slip(double mu_hat_max) {
    return clamp(0.05 * mu_hat_max + 0.13, 0.1, 0.3);
}

FrictionEstimator::FrictionEstimator(const EstimatorConfig& cfg) : cfg_(cfg) {
    if (cfg.window < 2)
        throw std::invalid_argument("estimator window must be >= 2");
    if (!(cfg.k1 > cfg.k0) || cfg.k0 < 0.0)
        throw std::invalid_argument("estimator bands require k1 > k0 >= 0");
    state_.mu_hat = cfg.mu_hat_init;
}

double FrictionEstimator::window_slope() const {
    // Least-squares slope of mu_x over lambda across the window.
    const std::size_t n = lam_hist_.size();
    double sl = 0.0, sm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sl += lam_hist_[i];
        sm += mu_hist_[i];
    }
    const double ml = sl / n, mm = sm / n;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (lam_hist_[i] - ml) * (mu_hist_[i] - mm);
        var += (lam_hist_[i] - ml) * (lam_hist_[i] - ml);
    }
    if (var <= 1e-12) return state_.k_prev;
    return cov / var;
}

double FrictionEstimator::step(double fx, double fz, double lambda) {
    const double mu_x = utilized_mu(fx, fz, cfg_.fz_guard_n, state_.mu_x_prev,
                                    &state_.flagged);
    if (first_) {
        first_ = false;
        state_.mu_x_prev = mu_x;
        state_.lambda_prev = lambda;
        lam_hist_.push_back(lambda);
        mu_hist_.push_back(mu_x);
        return state_.mu_hat;
    }
    lam_hist_.push_back(lambda);
    mu_hist_.push_back(mu_x);
    while (static_cast<int>(lam_hist_.size()) > cfg_.window) {
        lam_hist_.pop_front();
        mu_hist_.pop_front();
    }
    const double k =
        lam_hist_.size() >= 3
            ? window_slope()
            : slope(mu_x, state_.mu_x_prev, lambda, state_.lambda_prev,
                    state_.k_prev);
    return classify_and_update(state_, k, mu_x, lambda, cfg_);
}

}  // namespace iepb
