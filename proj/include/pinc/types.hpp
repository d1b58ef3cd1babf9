#pragma once

#include <array>
#include <cmath>
#include <string>

#include "pinc/errors.hpp"
#include "pinc/rng.hpp"

namespace pinc {

/// Physical state of the vehicle: world-frame position, yaw, body-frame
/// velocities and yaw rate. Yaw lives on the principal range (-pi, pi].
struct StateVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double psi = 0.0;
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
    double r = 0.0;

    std::array<double, 8> to_array() const { return {x, y, z, psi, u, v, w, r}; }
    static StateVector from_array(const std::array<double, 8>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
    }
};

/// Body-frame wrench held constant over one sampling interval (zero-order hold).
struct ControlInput {
    double X = 0.0;   // surge force [N]
    double Y = 0.0;   // sway force [N]
    double Z = 0.0;   // heave force [N]
    double Psi = 0.0; // yaw moment [N*m]

    std::array<double, 4> to_array() const { return {X, Y, Z, Psi}; }
    static ControlInput from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }
};

/// Network-facing state: yaw replaced by its (cos, sin) pair so the
/// representation is continuous across +-pi. 9 components.
struct NetState {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double cos_psi = 1.0;
    double sin_psi = 0.0;
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
    double r = 0.0;

    std::array<double, 9> to_array() const {
        return {x, y, z, cos_psi, sin_psi, u, v, w, r};
    }
    static NetState from_array(const std::array<double, 9>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8]};
    }
};

inline constexpr int kStateDim = 8;
inline constexpr int kNetStateDim = 9;
inline constexpr int kControlDim = 4;

/// Wraps an angle into (-pi, pi]. Angles already in range pass through
/// unchanged (bit-exact).
inline double wrap_angle(double a) {
    if (a > -kPi && a <= kPi) return a;
    a = std::fmod(a + kPi, kTwoPi);
    if (a <= 0.0) a += kTwoPi;
    return a - kPi;
}

inline NetState to_net_state(const StateVector& s) {
    return {s.x, s.y, s.z, std::cos(s.psi), std::sin(s.psi), s.u, s.v, s.w, s.r};
}

/// Inverse of to_net_state via two-argument arctangent.
/// Rejects the degenerate (cos, sin) = (0, 0).
inline StateVector from_net_state(const NetState& ns) {
    if (ns.cos_psi == 0.0 && ns.sin_psi == 0.0) {
        throw std::invalid_argument("from_net_state: (cos, sin) = (0, 0) has no angle");
    }
    return {ns.x, ns.y, ns.z, std::atan2(ns.sin_psi, ns.cos_psi), ns.u, ns.v, ns.w, ns.r};
}

/// Rigid-body, added-mass, drag and restoring parameters of the 4-DOF model.
/// Added-mass and drag coefficients follow the marine-dynamics sign
/// convention: they are negative, so effective masses m - X_du etc. exceed m
/// and the drag terms dissipate energy.
struct PhysicalParams {
    double m = 11.5;          // mass [kg]
    double I_zz = 0.245;      // yaw inertia [kg*m^2]
    double g = 9.81;          // gravitational acceleration [m/s^2]
    double rho_water = 1000.0; // water density [kg/m^3]
    double V_sub = 0.0117;    // submerged volume [m^3]
    // added mass
    double X_du = -5.5;
    double Y_dv = -12.7;
    double Z_dw = -14.57;
    double N_dr = -0.12;
    // linear drag
    double X_u = -4.03;
    double Y_v = -6.22;
    double Z_w = -5.18;
    double N_r = -0.07;
    // quadratic drag (X_uu is the X_{u|u|} coefficient; some sources write X_uc)
    double X_uu = -18.18;
    double Y_vv = -21.66;
    double Z_ww = -36.99;
    double N_rr = -1.55;

    double eff_m_u() const { return m - X_du; }
    double eff_m_v() const { return m - Y_dv; }
    double eff_m_w() const { return m - Z_dw; }
    double eff_I_r() const { return I_zz - N_dr; }

    /// Throws ConfigError if the effective masses are not strictly positive
    /// or any drag coefficient is positive.
    void validate() const;
};

} // namespace pinc
