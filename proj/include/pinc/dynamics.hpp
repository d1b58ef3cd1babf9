#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "pinc/dataset.hpp"
#include "pinc/types.hpp"

namespace pinc {

/// Right-hand side of the 4-DOF vehicle ODE. Buoyancy is implemented as
/// F_g - rho*g*V_sub with F_g = m*g, keeping the restoring term dimensionally
/// a force; the same function backs the simulator and the physics residual.
StateVector state_derivative(const StateVector& s, const ControlInput& c,
                             const PhysicalParams& p);

/// The same right-hand side lifted to the 9-component (cos, sin) state, for
/// any scalar type with arithmetic and abs(). The yaw-pair rows follow the
/// chain rule: d(cos)/dt = -sin*r, d(sin)/dt = cos*r. The planar-velocity
/// rows use the stored (cos, sin) directly, so the expression stays
/// polynomial even when the pair drifts off the unit circle.
template <class S>
std::array<S, 9> lifted_derivative(std::span<const S, 9> ns, const ControlInput& c,
                                   const PhysicalParams& p) {
    using std::abs;
    const S& cp = ns[3];
    const S& sp = ns[4];
    const S& u = ns[5];
    const S& v = ns[6];
    const S& w = ns[7];
    const S& r = ns[8];
    std::array<S, 9> d;
    d[0] = cp * u - sp * v;
    d[1] = sp * u + cp * v;
    d[2] = w;
    d[3] = sp * (-r);
    d[4] = cp * r;
    d[5] = (u * (abs(u) * p.X_uu + p.X_u) + v * r * (p.m - p.Y_dv) + c.X) * (1.0 / p.eff_m_u());
    d[6] = (v * (abs(v) * p.Y_vv + p.Y_v) - u * r * (p.m - p.X_du) + c.Y) * (1.0 / p.eff_m_v());
    d[7] = (w * (abs(w) * p.Z_ww + p.Z_w) +
            (c.Z + p.m * p.g - p.V_sub * p.rho_water * p.g)) *
           (1.0 / p.eff_m_w());
    d[8] = (r * (abs(r) * p.N_rr + p.N_r) - u * v * (p.X_du - p.Y_dv) + c.Psi) *
           (1.0 / p.eff_I_r());
    return d;
}

/// Classical RK4 over `substeps` equal substeps with the control held
/// constant; wraps yaw back to (-pi, pi] after the step.
/// Throws NumericError on non-finite output.
StateVector integrate_step(const StateVector& s, const ControlInput& c,
                           const PhysicalParams& p, double dt, int substeps = 10);

/// Simulates states[n+1] = integrate_step(states[n], controls[n], T).
/// The returned trajectory has controls.size()+1 states and empty
/// collocation lists.
Trajectory simulate_trajectory(const StateVector& x0,
                               const std::vector<ControlInput>& controls,
                               const PhysicalParams& p, double T, int substeps = 10);

} // namespace pinc
