#include "iepb/tyre.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iepb {

namespace {

// Factor arithmetic without the public range check; valid for any
// positive load.
MfFactors factors_unchecked(const TyreParams& p, double fz_kn) {
    MfFactors f;
    f.c = p.a2;
    f.d = p.a0 * fz_kn * fz_kn + p.a1 * fz_kn;
    f.b = (p.a3 * fz_kn * fz_kn + p.a4 * fz_kn) /
          (f.c * f.d * std::exp(p.a5 * fz_kn));
    f.e = p.a6 * fz_kn * fz_kn + p.a7 * fz_kn + p.a8;
    return f;
}

double mf_eval(const MfFactors& f, double slip_pct) {
    const double bl = f.b * slip_pct;
    const double inner = bl - f.e * (bl - std::atan(bl));
    return f.d * std::sin(f.c * std::atan(inner));
}

std::size_t cell_index(const std::vector<double>& grid, double x) {
    // Index of the left node of the cell containing x, clamped.
    if (x <= grid.front()) return 0;
    if (x >= grid.back()) return grid.size() - 2;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    return static_cast<std::size_t>(it - grid.begin()) - 1;
}

double cell_frac(const std::vector<double>& grid, std::size_t i, double x) {
    const double t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

void require_increasing(const std::vector<double>& g, const char* name) {
    if (g.size() < 2)
        throw std::invalid_argument(std::string(name) + " grid needs >= 2 nodes");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] <= g[i - 1])
            throw std::invalid_argument(std::string(name) +
                                        " grid is not strictly increasing");
}

}  // namespace

MfFactors mf_factors(const TyreParams& p, double fz_kn) {
    if (!(fz_kn >= 0.5 && fz_kn <= 10.0)) {
        std::ostringstream os;
        os << "vertical load " << fz_kn << " kN outside supported range [0.5, 10]";
        throw std::domain_error(os.str());
    }
    return factors_unchecked(p, fz_kn);
}

double mf_base_force(const TyreParams& p, double slip_pct, double fz_kn) {
    return mf_eval(factors_unchecked(p, fz_kn), slip_pct);
}

double tyre_force(const TyreParams& p, double slip, double fz_n, double mu) {
    if (!(mu >= 0.05 && mu <= 1.2)) {
        std::ostringstream os;
        os << "road friction coefficient " << mu << " outside [0.05, 1.2]";
        throw std::domain_error(os.str());
    }
    if (fz_n < 1.0) return 0.0;
    return mu * mf_base_force(p, 100.0 * slip, fz_n / 1000.0);
}

double TyreCurve::force(double slip, double fz_n, double mu) const {
    const double fz_kn = fz_n / 1000.0;
    const double slip_pct = 100.0 * slip;
    const std::size_t il = cell_index(load_kn_, fz_kn);
    const std::size_t im = cell_index(mu_, mu);
    const std::size_t is = cell_index(slip_pct_, slip_pct);
    const double tl = cell_frac(load_kn_, il, fz_kn);
    const double tm = cell_frac(mu_, im, mu);
    const double ts = cell_frac(slip_pct_, is, slip_pct);

    double c[2][2];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            c[a][b] = at(il + a, im + b, is) * (1.0 - ts) +
                      at(il + a, im + b, is + 1) * ts;
    const double c0 = c[0][0] * (1.0 - tm) + c[0][1] * tm;
    const double c1 = c[1][0] * (1.0 - tm) + c[1][1] * tm;
    return c0 * (1.0 - tl) + c1 * tl;
}

double TyreCurve::load_interp(const std::vector<double>& table,
                              double fz_n) const {
    const double fz_kn = fz_n / 1000.0;
    const std::size_t i = cell_index(load_kn_, fz_kn);
    const double t = cell_frac(load_kn_, i, fz_kn);
    return table[i] * (1.0 - t) + table[i + 1] * t;
}

double TyreCurve::peak_slip_pct(double fz_n) const {
    return load_interp(peak_slip_, fz_n);
}

double TyreCurve::initial_slope(double fz_n) const {
    return load_interp(init_slope_, fz_n);
}

TyreCurve build_lookup(const TyreParams& p, std::vector<double> load_grid_kn,
                       std::vector<double> mu_grid,
                       std::vector<double> slip_grid_pct) {
    require_increasing(load_grid_kn, "load");
    require_increasing(mu_grid, "mu");
    require_increasing(slip_grid_pct, "slip");
    if (slip_grid_pct.front() > 0.0 || slip_grid_pct.back() < 100.0)
        throw std::invalid_argument("slip grid must cover [0, 100] %");
    if (load_grid_kn.front() > 1.0 || load_grid_kn.back() < 8.0)
        throw std::invalid_argument("load grid must cover [1, 8] kN");
    if (mu_grid.front() > 0.05 || mu_grid.back() < 1.2)
        throw std::invalid_argument("mu grid must cover [0.05, 1.2]");

    TyreCurve c;
    c.load_kn_ = std::move(load_grid_kn);
    c.mu_ = std::move(mu_grid);
    c.slip_pct_ = std::move(slip_grid_pct);
    c.values_.resize(c.load_kn_.size() * c.mu_.size() * c.slip_pct_.size());

    std::size_t idx = 0;
    for (double fz : c.load_kn_) {
        const MfFactors f = factors_unchecked(p, fz);
        for (double mu : c.mu_)
            for (double s : c.slip_pct_) c.values_[idx++] = mu * mf_eval(f, s);
    }

    c.peak_slip_.reserve(c.load_kn_.size());
    c.init_slope_.reserve(c.load_kn_.size());
    for (double fz : c.load_kn_) {
        const MfFactors f = factors_unchecked(p, fz);
        double best_s = 0.0, best_f = 0.0;
        for (double s = 0.0; s <= 100.0; s += 0.05) {
            const double v = mf_eval(f, s);
            if (v > best_f) {
                best_f = v;
                best_s = s;
            }
        }
        c.peak_slip_.push_back(best_s);
        const double s1 = c.slip_pct_[1];
        // per unit slip fraction: d(F/Fz) over d(lambda) with lambda = s/100
        c.init_slope_.push_back(mf_eval(f, s1) / (fz * 1000.0) / (s1 / 100.0));
    }
    return c;
}

TyreCurve build_default_lookup(const TyreParams& p) {
    std::vector<double> load, mu, slip;
    for (double f = 1.0; f <= 8.001; f += 0.5) load.push_back(f);
    for (double m = 0.05; m <= 1.2001; m += 0.05) mu.push_back(m);
    for (double s = 0.0; s <= 100.001; s += 1.0) slip.push_back(s);
    return build_lookup(p, std::move(load), std::move(mu), std::move(slip));
}

}  // namespace iepb
