#pragma once

#include <cmath>

namespace iepb {

/// First-order low-pass filtered finite difference.
/// Returns 0 until two samples have been seen.
class FilteredDerivative {
public:
    explicit FilteredDerivative(double tau) : tau_(tau) {}

    double update(double x, double dt) {
        if (!has_prev_) {
            prev_ = x;
            has_prev_ = true;
            return 0.0;
        }
        const double raw = (x - prev_) / dt;
        prev_ = x;
        const double alpha = dt / (tau_ + dt);
        state_ += alpha * (raw - state_);
        return state_;
    }

    double value() const { return state_; }

    void reset() {
        has_prev_ = false;
        state_ = 0.0;
    }

private:
    double tau_;
    double prev_ = 0.0;
    double state_ = 0.0;
    bool has_prev_ = false;
};

/// First-order low-pass filter.
class LowPass {
public:
    explicit LowPass(double tau) : tau_(tau) {}

    double update(double x, double dt) {
        if (!init_) {
            state_ = x;
            init_ = true;
            return state_;
        }
        const double alpha = dt / (tau_ + dt);
        state_ += alpha * (x - state_);
        return state_;
    }

    double value() const { return state_; }

private:
    double tau_;
    double state_ = 0.0;
    bool init_ = false;
};

inline double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace iepb
