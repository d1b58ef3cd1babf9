#include "pinc/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pinc {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kTrajHeader = "t,x,y,z,psi,u,v,w,r,Fx,Fy,Fz,Mz";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(context + ": cannot parse number '" + s + "'");
    }
}

ordered_json phys_to_json(const PhysicalParams& p) {
    ordered_json j;
    j["m"] = p.m;
    j["I_zz"] = p.I_zz;
    j["g"] = p.g;
    j["rho_water"] = p.rho_water;
    j["V_sub"] = p.V_sub;
    j["X_du"] = p.X_du;
    j["Y_dv"] = p.Y_dv;
    j["Z_dw"] = p.Z_dw;
    j["N_dr"] = p.N_dr;
    j["X_u"] = p.X_u;
    j["Y_v"] = p.Y_v;
    j["Z_w"] = p.Z_w;
    j["N_r"] = p.N_r;
    j["X_uu"] = p.X_uu;
    j["Y_vv"] = p.Y_vv;
    j["Z_ww"] = p.Z_ww;
    j["N_rr"] = p.N_rr;
    return j;
}

PhysicalParams phys_from_json(const ordered_json& j) {
    PhysicalParams p;
    p.m = j.at("m").get<double>();
    p.I_zz = j.at("I_zz").get<double>();
    p.g = j.at("g").get<double>();
    p.rho_water = j.at("rho_water").get<double>();
    p.V_sub = j.at("V_sub").get<double>();
    p.X_du = j.at("X_du").get<double>();
    p.Y_dv = j.at("Y_dv").get<double>();
    p.Z_dw = j.at("Z_dw").get<double>();
    p.N_dr = j.at("N_dr").get<double>();
    p.X_u = j.at("X_u").get<double>();
    p.Y_v = j.at("Y_v").get<double>();
    p.Z_w = j.at("Z_w").get<double>();
    p.N_r = j.at("N_r").get<double>();
    p.X_uu = j.at("X_uu").get<double>();
    p.Y_vv = j.at("Y_vv").get<double>();
    p.Z_ww = j.at("Z_ww").get<double>();
    p.N_rr = j.at("N_rr").get<double>();
    return p;
}

ordered_json channel_to_json(const ChannelRecord& c) {
    ordered_json j;
    j["kind"] = c.kind;
    if (c.kind == "ramp") {
        j["sign"] = c.sign;
        j["offset"] = c.offset;
    } else {
        j["amplitude"] = c.amplitude;
        j["frequency"] = c.frequency;
        j["phase"] = c.phase;
    }
    return j;
}

ChannelRecord channel_from_json(const ordered_json& j) {
    ChannelRecord c;
    c.kind = j.at("kind").get<std::string>();
    if (c.kind == "ramp") {
        c.sign = j.at("sign").get<double>();
        c.offset = j.at("offset").get<double>();
    } else {
        c.amplitude = j.at("amplitude").get<double>();
        c.frequency = j.at("frequency").get<double>();
        c.phase = j.at("phase").get<double>();
    }
    return c;
}

} // namespace

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write trajectory file " + file.string());
    os << kTrajHeader << "\n";
    for (int n = 0; n < traj.n_steps(); ++n) {
        const StateVector& s = traj.states[n];
        os << fmt(static_cast<double>(n) * traj.T);
        for (double v : s.to_array()) os << ',' << fmt(v);
        if (n < traj.n_intervals()) {
            const ControlInput& c = traj.controls[n];
            os << ',' << fmt(c.X) << ',' << fmt(c.Y) << ',' << fmt(c.Z) << ',' << fmt(c.Psi);
        } else {
            os << ",,,,";
        }
        os << "\n";
    }
}

Trajectory read_trajectory_csv(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot read trajectory file " + file.string());
    std::string line;
    if (!std::getline(is, line) || split_csv(line) != split_csv(kTrajHeader)) {
        throw ConfigError("trajectory " + file.string() + ": bad header");
    }
    Trajectory traj;
    std::vector<double> times;
    int row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ++row;
        const auto cells = split_csv(line);
        if (cells.size() != 13) {
            throw ConfigError("trajectory " + file.string() + " row " + std::to_string(row) +
                              ": expected 13 columns");
        }
        const std::string ctx = file.string() + " row " + std::to_string(row);
        times.push_back(parse_double(cells[0], ctx));
        std::array<double, 8> s;
        for (int i = 0; i < 8; ++i) s[i] = parse_double(cells[1 + i], ctx);
        traj.states.push_back(StateVector::from_array(s));
        if (!cells[9].empty()) {
            traj.controls.push_back({parse_double(cells[9], ctx), parse_double(cells[10], ctx),
                                     parse_double(cells[11], ctx),
                                     parse_double(cells[12], ctx)});
        }
    }
    if (traj.states.size() < 2 || traj.controls.size() != traj.states.size() - 1) {
        throw ConfigError("trajectory " + file.string() +
                          ": expected N states and N-1 control rows");
    }
    traj.T = times[1] - times[0];
    return traj;
}

void write_colloc_csv(const std::filesystem::path& file, const Trajectory& traj) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot write collocation file " + file.string());
    os << "interval_index,tau\n";
    for (int n = 0; n < static_cast<int>(traj.colloc.size()); ++n) {
        for (double tau : traj.colloc[n]) {
            os << n << ',' << fmt(tau) << "\n";
        }
    }
}

void read_colloc_csv(const std::filesystem::path& file, Trajectory& traj) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot read collocation file " + file.string());
    std::string line;
    if (!std::getline(is, line) || split_csv(line) != std::vector<std::string>{"interval_index", "tau"}) {
        throw ConfigError("collocation " + file.string() + ": bad header");
    }
    traj.colloc.assign(traj.n_intervals(), {});
    int row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ++row;
        const auto cells = split_csv(line);
        const std::string ctx = file.string() + " row " + std::to_string(row);
        if (cells.size() != 2) throw ConfigError(ctx + ": expected 2 columns");
        const int idx = static_cast<int>(parse_double(cells[0], ctx));
        if (idx < 0 || idx >= traj.n_intervals()) {
            throw ConfigError(ctx + ": interval index out of range");
        }
        traj.colloc[idx].push_back(parse_double(cells[1], ctx));
    }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["format"] = "pinc-dataset";
    manifest["rng"] = {{"algorithm", ds.rng_algorithm}, {"seed", ds.seed}};
    manifest["T"] = ds.T;
    manifest["n_steps"] = ds.n_steps;
    manifest["T_tot"] = ds.T * static_cast<double>(ds.n_steps - 1);
    manifest["n_trajectories"] = ds.trajectories.size();
    manifest["n_colloc"] = ds.n_colloc;
    manifest["physical_params"] = phys_to_json(ds.phys);
    if (!ds.config_echo_json.empty()) {
        manifest["config"] = ordered_json::parse(ds.config_echo_json);
    }
    ordered_json trajs = ordered_json::array();
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "traj_%05zu.csv", i);
        char cname[64];
        std::snprintf(cname, sizeof(cname), "colloc_%05zu.csv", i);
        write_trajectory_csv(dir / name, ds.trajectories[i]);
        write_colloc_csv(dir / cname, ds.trajectories[i]);
        ordered_json tj;
        tj["file"] = name;
        tj["colloc_file"] = cname;
        if (i < ds.records.size()) {
            ordered_json chans = ordered_json::array();
            for (const auto& ch : ds.records[i].channels) chans.push_back(channel_to_json(ch));
            tj["channels"] = std::move(chans);
        }
        trajs.push_back(std::move(tj));
    }
    manifest["trajectories"] = std::move(trajs);
    std::ofstream os(dir / "manifest.json");
    if (!os) throw ConfigError("cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw ConfigError("no manifest.json in " + dir.string());
    ordered_json manifest;
    try {
        is >> manifest;
    } catch (const std::exception& e) {
        throw ConfigError("manifest in " + dir.string() + ": invalid JSON: " + e.what());
    }
    if (manifest.value("format", "") != "pinc-dataset") {
        throw ConfigError("manifest in " + dir.string() + ": unrecognized format");
    }
    Dataset ds;
    ds.T = manifest.at("T").get<double>();
    ds.n_steps = manifest.at("n_steps").get<int>();
    ds.n_colloc = manifest.at("n_colloc").get<int>();
    ds.seed = manifest.at("rng").at("seed").get<std::uint64_t>();
    ds.rng_algorithm = manifest.at("rng").at("algorithm").get<std::string>();
    ds.phys = phys_from_json(manifest.at("physical_params"));
    if (manifest.contains("config")) ds.config_echo_json = manifest.at("config").dump();
    for (const auto& tj : manifest.at("trajectories")) {
        Trajectory traj = read_trajectory_csv(dir / tj.at("file").get<std::string>());
        traj.T = ds.T;
        read_colloc_csv(dir / tj.at("colloc_file").get<std::string>(), traj);
        if (traj.n_steps() != ds.n_steps) {
            throw ConfigError("dataset " + dir.string() + ": trajectory " +
                              tj.at("file").get<std::string>() + " has " +
                              std::to_string(traj.n_steps()) + " steps, manifest says " +
                              std::to_string(ds.n_steps));
        }
        ds.trajectories.push_back(std::move(traj));
        TrajectoryRecord rec;
        rec.file = tj.at("file").get<std::string>();
        rec.colloc_file = tj.at("colloc_file").get<std::string>();
        if (tj.contains("channels")) {
            for (int c = 0; c < 4; ++c) rec.channels[c] = channel_from_json(tj.at("channels")[c]);
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

} // namespace pinc
