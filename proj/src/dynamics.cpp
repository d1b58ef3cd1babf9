#include "pinc/dynamics.hpp"

#include <cmath>
#include <string>

namespace pinc {

void PhysicalParams::validate() const {
    auto positive = [](double val, const char* name) {
        if (!(val > 0.0)) {
            throw ConfigError(std::string("physical params: ") + name +
                              " must be strictly positive");
        }
    };
    positive(eff_m_u(), "m - X_du");
    positive(eff_m_v(), "m - Y_dv");
    positive(eff_m_w(), "m - Z_dw");
    positive(eff_I_r(), "I_zz - N_dr");
    auto nonpositive = [](double val, const char* name) {
        if (val > 0.0) {
            throw ConfigError(std::string("physical params: drag coefficient ") + name +
                              " must be <= 0");
        }
    };
    nonpositive(X_u, "X_u");
    nonpositive(Y_v, "Y_v");
    nonpositive(Z_w, "Z_w");
    nonpositive(N_r, "N_r");
    nonpositive(X_uu, "X_uu");
    nonpositive(Y_vv, "Y_vv");
    nonpositive(Z_ww, "Z_ww");
    nonpositive(N_rr, "N_rr");
}

StateVector state_derivative(const StateVector& s, const ControlInput& c,
                             const PhysicalParams& p) {
    const double cp = std::cos(s.psi);
    const double sp = std::sin(s.psi);
    StateVector d;
    d.x = cp * s.u - sp * s.v;
    d.y = sp * s.u + cp * s.v;
    d.z = s.w;
    d.psi = s.r;
    d.u = (c.X + (p.m - p.Y_dv) * s.v * s.r + (p.X_u + p.X_uu * std::abs(s.u)) * s.u) /
          p.eff_m_u();
    d.v = (c.Y - (p.m - p.X_du) * s.u * s.r + (p.Y_v + p.Y_vv * std::abs(s.v)) * s.v) /
          p.eff_m_v();
    d.w = (c.Z + (p.Z_w + p.Z_ww * std::abs(s.w)) * s.w + p.m * p.g -
           p.V_sub * p.rho_water * p.g) /
          p.eff_m_w();
    d.r = (c.Psi - (p.X_du - p.Y_dv) * s.u * s.v + (p.N_r + p.N_rr * std::abs(s.r)) * s.r) /
          p.eff_I_r();
    return d;
}

namespace {

std::array<double, 8> rhs(const std::array<double, 8>& a, const ControlInput& c,
                          const PhysicalParams& p) {
    return state_derivative(StateVector::from_array(a), c, p).to_array();
}

std::array<double, 8> rk4_substep(const std::array<double, 8>& a, const ControlInput& c,
                                  const PhysicalParams& p, double h) {
    std::array<double, 8> k1 = rhs(a, c, p);
    std::array<double, 8> tmp;
    for (int i = 0; i < 8; ++i) tmp[i] = a[i] + 0.5 * h * k1[i];
    std::array<double, 8> k2 = rhs(tmp, c, p);
    for (int i = 0; i < 8; ++i) tmp[i] = a[i] + 0.5 * h * k2[i];
    std::array<double, 8> k3 = rhs(tmp, c, p);
    for (int i = 0; i < 8; ++i) tmp[i] = a[i] + h * k3[i];
    std::array<double, 8> k4 = rhs(tmp, c, p);
    std::array<double, 8> out;
    for (int i = 0; i < 8; ++i) {
        out[i] = a[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

} // namespace

StateVector integrate_step(const StateVector& s, const ControlInput& c,
                           const PhysicalParams& p, double dt, int substeps) {
    if (dt < 0.0) throw ConfigError("integrate_step: dt must be >= 0");
    if (substeps < 1) throw ConfigError("integrate_step: substeps must be >= 1");
    std::array<double, 8> a = s.to_array();
    const double h = dt / static_cast<double>(substeps);
    for (int k = 0; k < substeps; ++k) {
        a = rk4_substep(a, c, p, h);
    }
    for (double v : a) {
        if (!std::isfinite(v)) {
            throw NumericError("integrate_step: non-finite state (check physical "
                               "parameters or step size)");
        }
    }
    StateVector out = StateVector::from_array(a);
    out.psi = wrap_angle(out.psi);
    return out;
}

Trajectory simulate_trajectory(const StateVector& x0,
                               const std::vector<ControlInput>& controls,
                               const PhysicalParams& p, double T, int substeps) {
    if (T <= 0.0) throw ConfigError("simulate_trajectory: T must be > 0");
    Trajectory traj;
    traj.T = T;
    traj.controls = controls;
    traj.states.reserve(controls.size() + 1);
    traj.states.push_back(x0);
    for (const ControlInput& c : controls) {
        traj.states.push_back(integrate_step(traj.states.back(), c, p, T, substeps));
    }
    return traj;
}

} // namespace pinc
