#pragma once

#include <deque>

#include "iepb/tyre.hpp"

namespace iepb {

/// Slope-band classifier configuration for the mu-slip friction
/// estimator. The bands partition slopes into a linear region (near k1),
/// a transitional region, and a near-peak frictional region; slopes
/// outside all bands hold the previous estimate.
struct EstimatorConfig {
    double k1 = 27.0;   ///< linear-region slope of the mu-slip curve, 1/slip
    double k0 = 0.0;    ///< peak-region slope
    double delta1 = 6.75, delta2 = 6.75;  ///< linear band half-widths
    double delta3 = 2.7, delta4 = 2.7;    ///< transitional / frictional bounds
    double t_ctrl = 1e-3;
    double mu_min = 0.05, mu_max = 1.2;
    double slew_per_s = 2.0;      ///< max estimate change rate, 1/s
    int window = 5;               ///< least-squares slope window, samples
    double fz_guard_n = 100.0;    ///< below this load, hold and flag
    double mu_hat_init = 0.5;

    /// Band defaults tied to the same tyre curve the plant uses.
    static EstimatorConfig from_tyre(const TyreCurve& curve, double fz_nominal_n);
};

struct EstimatorState {
    double mu_x_prev = 0.0;
    double lambda_prev = 0.0;
    double k_prev = 0.0;
    double mu_hat = 0.5;
    bool flagged = false;  ///< load-guard hold on the last sample
};

/// Utilized friction coefficient F_x / F_z, clamped to [0, 1.5].
/// Loads below the guard hold the previous value and flag the sample.
double utilized_mu(double fx, double fz, double fz_guard, double prev,
                   bool* flagged);

/// Two-point slope of mu_x over slip; an unchanged slip keeps the
/// previous slope.
double slope(double mu_x, double mu_x_prev, double lambda, double lambda_prev,
             double k_prev);

/// Slope-band classification and peak-friction update. Returns the new
/// slew-limited, clamped estimate and advances the state.
double classify_and_update(EstimatorState& state, double k_t, double mu_x,
                           double lambda, const EstimatorConfig& cfg);

/// Desired rear slip from the estimated peak friction:
/// lambda_d = 0.05 mu + 0.13, clamped to [0.1, 0.3].
double optimal_slip(double mu_hat_max);

/// Per-control-period estimator with windowed least-squares slope
/// smoothing; degenerates to the two-point slope for a window of 2.
class FrictionEstimator {
public:
    explicit FrictionEstimator(const EstimatorConfig& cfg);

    /// Feed one control-period sample; returns the updated mu estimate.
    double step(double fx, double fz, double lambda);

    double mu_hat() const { return state_.mu_hat; }
    double lambda_d() const { return optimal_slip(state_.mu_hat); }
    const EstimatorState& state() const { return state_; }

private:
    double window_slope() const;

    EstimatorConfig cfg_;
    EstimatorState state_;
    std::deque<double> lam_hist_, mu_hist_;
    bool first_ = true;
};

}  // namespace iepb
