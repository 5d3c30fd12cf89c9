#include "iepb/vehicle.hpp"

namespace iepb {

AxleLoads axle_loads(const VehicleParams& p, double a_x) {
    const double L = p.wheelbase_m();
    const double c = p.mass_kg / (2.0 * L);
    AxleLoads l;
    l.fzf = c * (p.gravity * p.cg_to_rear_m - a_x * p.cg_height_m);
    l.fzr = c * (p.gravity * p.cg_to_front_m + a_x * p.cg_height_m);
    if (l.fzf < 0.0) {
        l.fzf = 0.0;
        l.clamped = true;
    }
    if (l.fzr < 0.0) {
        l.fzr = 0.0;
        l.clamped = true;
    }
    return l;
}

double slip_ratio(double v_x, double omega, double radius) {
    const double wr = omega * radius;
    if (v_x < kSpeedEps && wr < kSpeedEps) return 0.0;
    if (v_x >= wr) return (v_x - wr) / v_x;
    return (wr - v_x) / wr;
}

}  // namespace iepb
