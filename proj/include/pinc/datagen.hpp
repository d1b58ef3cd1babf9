#pragma once

#include <string>
#include <vector>

#include "pinc/dataset.hpp"
#include "pinc/rng.hpp"
#include "pinc/types.hpp"

namespace pinc {

/// Half-widths of the uniform initial-condition intervals. w is drawn from
/// [0, w_max] (diving behavior); every other component from [-max, max].
struct SamplingRanges {
    double x_max = 1.0;
    double y_max = 1.0;
    double z_max = 1.0;
    double psi_max = kPi;
    double u_max = 1.0;
    double v_max = 0.0;
    double w_max = 0.1;
    double r_max = 0.0;

    void validate() const {
        for (double v : {x_max, y_max, z_max, psi_max, u_max, v_max, w_max, r_max}) {
            if (v < 0.0) throw ConfigError("sampling ranges must be >= 0");
        }
    }
};

enum class InputKind { Ramp, Sine };

/// Raw input-channel law before the per-channel control scaling.
struct InputSpec {
    InputKind kind = InputKind::Ramp;
    double amplitude = 3.0;        // sine
    double f_lo = 0.01;            // sine frequency interval [Hz]
    double f_hi = 0.2;
    double phase_lo = 0.0;         // sine phase interval [rad]
    double phase_hi = kTwoPi;
    double offset_variance = 0.25; // ramp offset ~ N(0, sigma^2)
    double sign_probability = 0.5; // ramp sign Bernoulli(p) for +1

    void validate() const {
        if (f_lo > f_hi) throw ConfigError("input spec: f_lo must be <= f_hi");
        if (offset_variance < 0.0) throw ConfigError("input spec: offset_variance must be >= 0");
        if (sign_probability < 0.0 || sign_probability > 1.0) {
            throw ConfigError("input spec: sign_probability must be in [0, 1]");
        }
    }
};

std::string input_kind_name(InputKind k);
InputKind input_kind_from_name(const std::string& name);

struct GenConfig {
    std::uint64_t seed = 0;
    int n_trajectories = 400;
    double T = 0.08;
    int n_steps = 66;
    int n_colloc = 1;
    int substeps = 10;
    SamplingRanges ranges;
    InputSpec input;
    PhysicalParams phys;

    double total_time() const { return T * static_cast<double>(n_steps - 1); }

    void validate() const {
        if (n_trajectories < 1) throw ConfigError("generation: n_trajectories must be >= 1");
        if (T <= 0.0) throw ConfigError("generation: T must be > 0");
        if (n_steps < 2) throw ConfigError("generation: n_steps must be >= 2");
        if (n_colloc < 1) throw ConfigError("generation: n_colloc must be >= 1");
        if (substeps < 1) throw ConfigError("generation: substeps must be >= 1");
        ranges.validate();
        input.validate();
        phys.validate();
    }
};

/// Uniform draw of an initial state from the configured intervals.
StateVector sample_initial_state(const SamplingRanges& ranges, Rng& rng);

/// Triangle profile on [0, T_tot]: 0 at the ends, 1 at T_tot/2.
double ramp_value(double t, double T_tot);

/// Ramp channel: sign * ramp_value + offset, with sign ~ Bernoulli(p) on
/// {+1, -1} and offset ~ N(0, sigma^2).
ChannelRecord make_ramp_channel(Rng& rng, const InputSpec& spec);

/// Sine channel: A * sin(2*pi*f*t + phi) with uniform f and phi.
ChannelRecord make_sine_channel(Rng& rng, const InputSpec& spec);

/// Evaluates a recorded channel at time t.
double eval_channel(const ChannelRecord& ch, double t, double T_tot);

/// Per-channel scaling applied to every dataset: Y down by 0.1, the yaw
/// moment down by 0.05, Z up by 5 and taken as an absolute (only downward
/// heave is commanded).
ControlInput scale_controls(const std::array<double, 4>& raw);

/// One-dimensional Latin hypercube over [0, T]: one uniform point per
/// stratum [i*T/n, (i+1)*T/n), output order randomized.
std::vector<double> lhs_collocation(int n_points, double T, Rng& rng);

/// Full dataset generation: per trajectory draw the initial state and the
/// four input channels, evaluate them at the sample instants (zero-order
/// hold), scale, simulate, and attach LHS collocation times per interval.
/// Deterministic given the seed; trajectory i uses Rng::stream(seed, i).
Dataset generate_dataset(const GenConfig& config);

} // namespace pinc
