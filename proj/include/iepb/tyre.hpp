#pragma once

#include <cstddef>
#include <vector>

namespace iepb {

/// Magic Formula coefficient set for the longitudinal force curve.
/// The coefficients follow the 1989-style convention: the factor
/// formulas consume the vertical load in kN and the slip ratio in
/// percent. Public entry points below take SI units and convert.
struct TyreParams {
    double a0 = 0.0;
    double a1 = 1000.0;
    double a2 = 1.55;
    double a3 = 60.0;
    double a4 = 300.0;
    double a5 = 0.17;
    double a6 = 0.0;
    double a7 = 0.0;
    double a8 = 0.2;
};

struct MfFactors {
    double b;  ///< stiffness factor
    double c;  ///< shape factor
    double d;  ///< peak force, N
    double e;  ///< curvature factor
};

/// Curve factors at a given vertical load (kN). Throws std::domain_error
/// outside the supported range [0.5, 10] kN.
MfFactors mf_factors(const TyreParams& p, double fz_kn);

/// Base longitudinal force, N, at slip in percent [0, 100] and load in kN.
/// The base curve has unit peak friction coefficient with the default
/// coefficient set; the road friction scaling is applied in tyre_force.
double mf_base_force(const TyreParams& p, double slip_pct, double fz_kn);

/// Longitudinal force magnitude, N, from SI inputs: slip as a fraction in
/// [0, 1], vertical load in N, and road peak friction mu in [0.05, 1.2].
/// Returns 0 for zero load. The caller applies the braking sign.
double tyre_force(const TyreParams& p, double slip, double fz_n, double mu);

/// Trilinear lookup table over (load, mu, slip) plus the per-load peak
/// slip and initial slope consumed by the friction estimator.
/// Immutable after construction.
class TyreCurve {
public:
    /// Force, N, by trilinear interpolation. Queries are clamped to the
    /// grid bounds.
    double force(double slip, double fz_n, double mu) const;

    /// Slip (percent) at which the base force peaks, interpolated over
    /// the load grid.
    double peak_slip_pct(double fz_n) const;

    /// d(F/Fz)/d(lambda) at lambda -> 0, per unit slip fraction, forward
    /// difference over the first slip grid cell.
    double initial_slope(double fz_n) const;

    const std::vector<double>& load_grid_kn() const { return load_kn_; }
    const std::vector<double>& mu_grid() const { return mu_; }
    const std::vector<double>& slip_grid_pct() const { return slip_pct_; }

private:
    friend TyreCurve build_lookup(const TyreParams&, std::vector<double>,
                                  std::vector<double>, std::vector<double>);

    double at(std::size_t il, std::size_t im, std::size_t is) const {
        return values_[(il * mu_.size() + im) * slip_pct_.size() + is];
    }
    double load_interp(const std::vector<double>& table, double fz_n) const;

    std::vector<double> load_kn_;
    std::vector<double> mu_;
    std::vector<double> slip_pct_;
    std::vector<double> values_;       // N, [load][mu][slip]
    std::vector<double> peak_slip_;    // percent, per load node
    std::vector<double> init_slope_;   // 1/slip-fraction, per load node
};

/// Builds the lookup table. Grids must be strictly increasing; the slip
/// grid must cover [0, 100] %, the load grid [1, 8] kN and the mu grid
/// [0.05, 1.2]. Throws std::invalid_argument otherwise.
TyreCurve build_lookup(const TyreParams& p, std::vector<double> load_grid_kn,
                       std::vector<double> mu_grid,
                       std::vector<double> slip_grid_pct);

/// Default grids sized so the interpolation error stays below 1% of the
/// peak force.
TyreCurve build_default_lookup(const TyreParams& p);

}  // namespace iepb
