#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pinc/types.hpp"

namespace pinc {

/// One simulated trajectory sampled with period T.
/// states has N_steps entries; controls has N_steps-1 (zero-order hold over
/// each interval); colloc holds, per interval, the collocation times in [0, T].
struct Trajectory {
    double T = 0.08;
    std::vector<StateVector> states;
    std::vector<ControlInput> controls;
    std::vector<std::vector<double>> colloc;

    int n_steps() const { return static_cast<int>(states.size()); }
    int n_intervals() const { return static_cast<int>(controls.size()); }
    double total_time() const { return T * static_cast<double>(n_intervals()); }
};

/// Per-channel input parameters recorded in the manifest so generated
/// controls can be audited against the raw (pre-scaling) channel values.
struct ChannelRecord {
    std::string kind;     // "ramp" or "sine"
    double sign = 1.0;    // ramp
    double offset = 0.0;  // ramp
    double amplitude = 0.0; // sine
    double frequency = 0.0; // sine
    double phase = 0.0;     // sine
};

struct TrajectoryRecord {
    std::string file;
    std::string colloc_file;
    std::array<ChannelRecord, 4> channels;
};

struct Dataset {
    double T = 0.08;
    int n_steps = 66;
    int n_colloc = 1;
    std::uint64_t seed = 0;
    std::string rng_algorithm;
    PhysicalParams phys; // parameters the trajectories were integrated with
    std::vector<Trajectory> trajectories;
    std::vector<TrajectoryRecord> records; // parallel to trajectories when generated
    std::string config_echo_json;          // generation config as serialized JSON

    std::size_t size() const { return trajectories.size(); }
};

/// Writes one trajectory as CSV with header t,x,y,z,psi,u,v,w,r,Fx,Fy,Fz,Mz.
/// The last row's control columns are left empty.
void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& file);

/// Collocation sidecar: columns interval_index,tau.
void write_colloc_csv(const std::filesystem::path& file, const Trajectory& traj);
void read_colloc_csv(const std::filesystem::path& file, Trajectory& traj);

/// Writes trajectory CSVs, collocation sidecars and manifest.json into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& ds);

/// Loads a dataset saved by save_dataset (reads manifest.json for the layout).
Dataset load_dataset(const std::filesystem::path& dir);

} // namespace pinc
