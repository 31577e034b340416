#pragma once

// File formats:
//   actuator catalog   JSON
//   problem config     JSON (regions, grids, bounds, constraints, directions)
//   design parameters  JSON
//   task trajectories  CSV, one file per task
//   result bundle      JSON, versioned
//   solvability grid   CSV
// Angles in hand-edited files are degrees; they are converted at this boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ankle/actuator.hpp"
#include "ankle/errors.hpp"
#include "ankle/metrics.hpp"
#include "ankle/optimizer.hpp"
#include "ankle/ranking.hpp"
#include "ankle/reparam.hpp"

namespace ankle::io {

using json = nlohmann::json;

inline constexpr int kBundleSchemaVersion = 1;
inline constexpr int kCatalogSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

class MissingColumn : public SchemaError {
public:
    using SchemaError::SchemaError;
};

class NonMonotoneTime : public SchemaError {
public:
    using SchemaError::SchemaError;
};

// ---------------------------------------------------------------------------
// Small JSON helpers with field-path error messages

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + "." + key + ": missing");
    return *it;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

inline double number(const json& j, const std::string& key, const std::string& path) {
    return number(field(j, key, path), path + "." + key);
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& path) {
    if (!j.contains(key)) return fallback;
    return number(j.at(key), path + "." + key);
}

inline std::string text(const json& j, const std::string& key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != N)
        throw SchemaError(path + ": expected an array of " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t k = 0; k < N; ++k) out[k] = number(j[k], path + "[" + std::to_string(k) + "]");
    return out;
}

inline Vec3 vec3(const json& j, const std::string& path) {
    const auto v = numbers<3>(j, path);
    return {v[0], v[1], v[2]};
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline AngleInterval interval_deg(const json& j, const std::string& path) {
    const auto v = numbers<2>(j, path);
    if (v[0] > v[1]) throw SchemaError(path + ": lower bound exceeds upper bound");
    return {deg2rad(v[0]), deg2rad(v[1])};
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Actuator catalog

inline void validate_actuator(const ActuatorSpec& a, const std::string& path) {
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw SchemaError(path + "." + name + ": must be > 0");
    };
    if (a.name.empty()) throw SchemaError(path + ".name: must not be empty");
    positive(a.nominal_speed, "nominal_speed");
    positive(a.nominal_effort, "nominal_effort");
    positive(a.peak_speed, "peak_speed");
    positive(a.peak_effort, "peak_effort");
    positive(a.static_friction, "static_friction");
    positive(a.mass, "mass");
    if (a.peak_speed < a.nominal_speed) throw SchemaError(path + ".peak_speed: must be >= nominal_speed");
    if (a.peak_effort < a.nominal_effort) throw SchemaError(path + ".peak_effort: must be >= nominal_effort");
    if (a.kind == ActuatorKind::linear) {
        positive(a.stroke, "stroke");
        positive(a.retracted_length, "retracted_length");
    } else {
        positive(a.gear_ratio, "gear_ratio");
        if (!(a.linkage_density >= 0.0) || !std::isfinite(a.linkage_density))
            throw SchemaError(path + ".linkage_density: must be >= 0");
    }
}

/// Linear: speeds mm/s, efforts N. Rotary: speeds deg/s (converted to rad/s), efforts Nm.
inline ActuatorSpec actuator_from_json(const json& j, const std::string& path) {
    using namespace detail;
    ActuatorSpec a;
    a.name = text(j, "name", path);
    const std::string kind = text(j, "kind", path);
    if (kind == "linear") {
        a.kind = ActuatorKind::linear;
    } else if (kind == "rotary") {
        a.kind = ActuatorKind::rotary;
    } else {
        throw SchemaError(path + ".kind: expected 'linear' or 'rotary'");
    }
    const double speed_scale = a.kind == ActuatorKind::rotary ? deg2rad(1.0) : 1.0;
    a.nominal_speed = number(j, "nominal_speed", path) * speed_scale;
    a.peak_speed = number(j, "peak_speed", path) * speed_scale;
    a.nominal_effort = number(j, "nominal_effort", path);
    a.peak_effort = number(j, "peak_effort", path);
    a.static_friction = number(j, "static_friction", path);
    a.mass = number(j, "mass", path);
    if (a.kind == ActuatorKind::linear) {
        a.stroke = number(j, "stroke", path);
        a.retracted_length = number(j, "retracted_length", path);
    } else {
        a.gear_ratio = number(j, "gear_ratio", path);
        a.linkage_density = number_or(j, "linkage_density", 0.0, path);
    }
    validate_actuator(a, path);
    return a;
}

inline json actuator_to_json(const ActuatorSpec& a) {
    const double speed_scale = a.kind == ActuatorKind::rotary ? rad2deg(1.0) : 1.0;
    json j{{"name", a.name},
           {"kind", std::string(to_string(a.kind))},
           {"nominal_speed", a.nominal_speed * speed_scale},
           {"peak_speed", a.peak_speed * speed_scale},
           {"nominal_effort", a.nominal_effort},
           {"peak_effort", a.peak_effort},
           {"static_friction", a.static_friction},
           {"mass", a.mass}};
    if (a.kind == ActuatorKind::linear) {
        j["stroke"] = a.stroke;
        j["retracted_length"] = a.retracted_length;
    } else {
        j["gear_ratio"] = a.gear_ratio;
        j["linkage_density"] = a.linkage_density;
    }
    return j;
}

inline std::vector<ActuatorSpec> catalog_from_json(const json& j) {
    const json& list = j.is_array() ? j : detail::field(j, "actuators", "catalog");
    if (!list.is_array()) throw SchemaError("catalog.actuators: expected an array");
    std::vector<ActuatorSpec> out;
    for (std::size_t k = 0; k < list.size(); ++k)
        out.push_back(actuator_from_json(list[k], "actuators[" + std::to_string(k) + "]"));
    return out;
}

inline json catalog_to_json(const std::vector<ActuatorSpec>& catalog) {
    json list = json::array();
    for (const auto& a : catalog) list.push_back(actuator_to_json(a));
    return json{{"schema_version", kCatalogSchemaVersion}, {"actuators", list}};
}

inline std::vector<ActuatorSpec> load_catalog(const std::filesystem::path& path) {
    return catalog_from_json(detail::read_json_file(path));
}

inline void save_catalog(const std::vector<ActuatorSpec>& catalog, const std::filesystem::path& path) {
    detail::write_text_file(path, catalog_to_json(catalog).dump(2) + "\n");
}

inline const ActuatorSpec& find_actuator(const std::vector<ActuatorSpec>& catalog, const std::string& name) {
    for (const auto& a : catalog)
        if (a.name == name) return a;
    throw MissingSpec("actuator '" + name + "' not found in catalog");
}

// ---------------------------------------------------------------------------
// Task trajectories (CSV)

inline constexpr std::array<const char*, 7> kTaskColumns{"t", "roll", "pitch", "roll_rate", "pitch_rate",
                                                         "tau_roll", "tau_pitch"};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaError(where + ": not a finite number '" + s + "'");
    }
}

}  // namespace detail

/// Columns t [s], roll/pitch [deg], roll_rate/pitch_rate [deg/s], tau_roll/tau_pitch [Nm].
inline TaskTrajectory parse_task_csv(std::istream& in, const std::string& id) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty()) throw SchemaError(id + ": empty task file");
    std::array<std::size_t, kTaskColumns.size()> col{};
    for (std::size_t c = 0; c < kTaskColumns.size(); ++c) {
        const auto it = std::find(header.begin(), header.end(), kTaskColumns[c]);
        if (it == header.end()) throw MissingColumn(id + ": missing column '" + kTaskColumns[c] + "'");
        col[c] = static_cast<std::size_t>(it - header.begin());
    }
    TaskTrajectory task{id, {}};
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = detail::split_csv_line(line);
        const std::string where = id + ":" + std::to_string(row);
        if (cells.size() < header.size()) throw SchemaError(where + ": expected " + std::to_string(header.size()) + " cells");
        std::array<double, kTaskColumns.size()> v{};
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = detail::parse_cell(cells[col[c]], where);
        TaskSample s;
        s.t = v[0];
        s.pose = {deg2rad(v[1]), deg2rad(v[2])};
        s.rate = Vec2(deg2rad(v[3]), deg2rad(v[4]));
        s.torque = Vec2(v[5], v[6]);
        if (!task.samples.empty() && !(s.t > task.samples.back().t))
            throw NonMonotoneTime(where + ": time must be strictly increasing");
        task.samples.push_back(s);
    }
    if (task.samples.empty()) throw SchemaError(id + ": task has no samples");
    return task;
}

inline TaskTrajectory load_task(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_task_csv(in, path.stem().string());
}

/// Every *.csv file in a directory, in file-name order.
inline std::vector<TaskTrajectory> load_tasks(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError(dir.string() + ": no task files");
    std::vector<TaskTrajectory> out;
    for (const auto& f : files) out.push_back(load_task(f));
    return out;
}

struct OutsideSample {
    std::string task;
    std::size_t index{0};
    FootOrientation pose;
};

inline std::vector<OutsideSample> samples_outside(const std::vector<TaskTrajectory>& tasks,
                                                  const OperationalRegion& region) {
    std::vector<OutsideSample> out;
    for (const auto& t : tasks)
        for (std::size_t k = 0; k < t.samples.size(); ++k)
            if (!region.contains(t.samples[k].pose, 1e-9)) out.push_back({t.id, k, t.samples[k].pose});
    return out;
}

inline void write_task_csv(std::ostream& out, const TaskTrajectory& task) {
    out << "t,roll,pitch,roll_rate,pitch_rate,tau_roll,tau_pitch\n";
    out.precision(17);
    for (const auto& s : task.samples)
        out << s.t << ',' << rad2deg(s.pose.roll) << ',' << rad2deg(s.pose.pitch) << ',' << rad2deg(s.rate[0])
            << ',' << rad2deg(s.rate[1]) << ',' << s.torque[0] << ',' << s.torque[1] << '\n';
}

// ---------------------------------------------------------------------------
// Problem config

struct ProblemConfig {
    OperationalRegion region;  // operational region with the feasibility grid step
    OperationalRegion core;    // core region for weighting
    double metrics_step{deg2rad(2.0)};
    std::optional<double> ground_offset;  // mm below U_0; required for metrics
    MetricDirections directions{kDefaultDirections};
    DesignConstraints constraints;
    std::map<Architecture, LegBounds> bounds;
    bool symmetric{true};
    BranchChoice branch{kPrimaryBranches};
    RealizeOptions realize;
    json snapshot;  // the parsed file, stored verbatim in bundles

    [[nodiscard]] OperationalRegion metrics_region() const { return region.with_step(metrics_step); }
    [[nodiscard]] OperationalRegion core_region() const { return core.with_step(metrics_step); }

    [[nodiscard]] double require_ground_offset() const {
        if (!ground_offset) throw MissingSpec("config: ground_offset_mm is required for metrics");
        return *ground_offset;
    }

    [[nodiscard]] const LegBounds& bounds_for(Architecture a) const {
        const auto it = bounds.find(a);
        if (it == bounds.end())
            throw SchemaError("config.bounds." + std::string(to_string(a)) + ": missing");
        return it->second;
    }
};

inline OperationalRegion region_from_json(const json& j, double step, const std::string& path) {
    OperationalRegion r{detail::interval_deg(detail::field(j, "roll_deg", path), path + ".roll_deg"),
                        detail::interval_deg(detail::field(j, "pitch_deg", path), path + ".pitch_deg"), step};
    if (j.contains("grid_step_deg")) r.step = deg2rad(detail::number(j.at("grid_step_deg"), path + ".grid_step_deg"));
    try {
        r.validate();
    } catch (const InvalidRegions& e) {
        throw SchemaError(path + ": " + e.what());
    }
    return r;
}

inline json region_to_json(const OperationalRegion& r) {
    return json{{"roll_deg", {rad2deg(r.roll.lo), rad2deg(r.roll.hi)}},
                {"pitch_deg", {rad2deg(r.pitch.lo), rad2deg(r.pitch.hi)}},
                {"grid_step_deg", rad2deg(r.step)}};
}

inline LegBounds leg_bounds_from_json(const json& j, Architecture arch, const std::string& path) {
    using namespace detail;
    LegBounds lb;
    auto range = [&](const json& v, const std::string& p) {
        const auto r = numbers<2>(v, p);
        if (r[0] > r[1]) throw SchemaError(p + ": lower bound exceeds upper bound");
        return GeneRange{r[0], r[1]};
    };
    for (const auto& [key, target] : {std::pair{"a_mm", &lb.a}, std::pair{"b_mm", &lb.b}}) {
        const json& arr = field(j, key, path);
        if (!arr.is_array() || arr.size() != 3) throw SchemaError(path + "." + key + ": expected 3 ranges (x, y, z)");
        for (std::size_t k = 0; k < 3; ++k)
            (*target)[k] = range(arr[k], path + "." + key + "[" + std::to_string(k) + "]");
    }
    if (arch == Architecture::rsu) {
        const GeneRange psi = range(field(j, "psi_deg", path), path + ".psi_deg");
        lb.psi = {deg2rad(psi.lo), deg2rad(psi.hi)};
        if (j.contains("gamma")) lb.gamma = range(j.at("gamma"), path + ".gamma");
        if (j.contains("delta")) lb.delta = range(j.at("delta"), path + ".delta");
        if (lb.gamma.lo < 0.0 || !(lb.gamma.hi < 1.0)) throw SchemaError(path + ".gamma: must lie in [0, 1)");
        if (lb.delta.lo < 0.0 || lb.delta.hi > 1.0) throw SchemaError(path + ".delta: must lie in [0, 1]");
    }
    return lb;
}

inline ProblemConfig config_from_json(const json& j) {
    using namespace detail;
    const std::string path = "config";
    ProblemConfig c;
    c.snapshot = j;
    const double step = deg2rad(number_or(j, "grid_step_deg", 2.0, path));
    c.region = region_from_json(field(j, "operational_region", path), step, path + ".operational_region");
    c.metrics_step = deg2rad(number_or(j, "metrics_grid_step_deg", rad2deg(c.region.step), path));
    if (!(c.metrics_step > 0.0)) throw SchemaError(path + ".metrics_grid_step_deg: must be > 0");
    c.core = j.contains("core_region") ? region_from_json(j.at("core_region"), c.metrics_step, path + ".core_region")
                                       : c.region;
    if (!c.region.contains(c.core)) throw SchemaError(path + ".core_region: must lie inside the operational region");
    if (j.contains("ground_offset_mm")) c.ground_offset = number(j.at("ground_offset_mm"), path + ".ground_offset_mm");
    if (j.contains("symmetric_legs")) {
        if (!j.at("symmetric_legs").is_boolean()) throw SchemaError(path + ".symmetric_legs: expected a boolean");
        c.symmetric = j.at("symmetric_legs").get<bool>();
    }
    if (j.contains("rsu_branch")) {
        const json& b = j.at("rsu_branch");
        try {
            if (b.is_string()) {
                c.branch.fill(parse_branch(b.get<std::string>()));
            } else if (b.is_array() && b.size() == 2 && b[0].is_string() && b[1].is_string()) {
                c.branch = {parse_branch(b[0].get<std::string>()), parse_branch(b[1].get<std::string>())};
            } else {
                throw SchemaError("expected a branch name or a pair of names");
            }
        } catch (const InputError& e) {
            throw SchemaError(path + ".rsu_branch: " + e.what());
        }
    }
    c.realize.crank_safety = number_or(j, "crank_safety_factor", 0.0, path);
    if (c.realize.crank_safety < 0.0) throw SchemaError(path + ".crank_safety_factor: must be >= 0");
    if (j.contains("directions")) {
        const json& d = j.at("directions");
        if (!d.is_object()) throw SchemaError(path + ".directions: expected an object");
        for (const auto& [name, val] : d.items()) {
            try {
                if (!val.is_string()) throw InputError("expected 'lower' or 'higher'");
                c.directions[metric_index(name)] = parse_direction(val.get<std::string>());
            } catch (const InputError& e) {
                throw SchemaError(path + ".directions." + name + ": " + e.what());
            }
        }
    }
    if (j.contains("constraints")) {
        const json& k = j.at("constraints");
        const std::string p = path + ".constraints";
        c.constraints.min_anchor_separation = number_or(k, "min_anchor_separation_mm", 0.0, p);
        c.constraints.min_shin_point_height =
            number_or(k, "min_shin_point_height_mm", -std::numeric_limits<double>::infinity(), p);
        c.constraints.max_manipulability_ratio =
            number_or(k, "max_manipulability_ratio", std::numeric_limits<double>::infinity(), p);
        if (k.contains("enforce_peak_ratings")) {
            if (!k.at("enforce_peak_ratings").is_boolean()) throw SchemaError(p + ".enforce_peak_ratings: expected a boolean");
            c.constraints.enforce_peak_ratings = k.at("enforce_peak_ratings").get<bool>();
        }
    }
    if (j.contains("bounds")) {
        const json& b = j.at("bounds");
        for (const Architecture a : {Architecture::spu, Architecture::rsu}) {
            const std::string key(to_string(a));
            if (b.contains(key)) c.bounds[a] = leg_bounds_from_json(b.at(key), a, path + ".bounds." + key);
        }
    }
    return c;
}

inline ProblemConfig load_config(const std::filesystem::path& path) {
    return config_from_json(detail::read_json_file(path));
}

/// Regions listed under "regions" (each with roll_deg/pitch_deg), else the operational region.
inline std::vector<OperationalRegion> load_regions(const std::filesystem::path& path) {
    const json j = detail::read_json_file(path);
    const double step = deg2rad(detail::number_or(j, "grid_step_deg", 2.0, "config"));
    std::vector<OperationalRegion> out;
    if (j.contains("regions")) {
        const json& list = j.at("regions");
        if (!list.is_array() || list.empty()) throw SchemaError("config.regions: expected a non-empty array");
        for (std::size_t k = 0; k < list.size(); ++k)
            out.push_back(region_from_json(list[k], step, "config.regions[" + std::to_string(k) + "]"));
    } else {
        out.push_back(region_from_json(detail::field(j, "operational_region", "config"), step,
                                       "config.operational_region"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Design parameter files

/// Hand-written design: anchors plus either (gamma, delta) or explicit (crank, rod) for RSU.
struct DesignFile {
    Architecture arch{Architecture::rsu};
    DesignGeometry geom;
    std::optional<std::array<double, 2>> crank;
    std::optional<std::array<double, 2>> rod;
    std::optional<std::array<double, 2>> stroke_min;
    std::optional<std::array<double, 2>> stroke_max;

    [[nodiscard]] bool explicit_lengths() const { return crank.has_value() && rod.has_value(); }

    [[nodiscard]] RsuParams rsu_explicit() const {
        RsuParams p;
        p.a = geom.a;
        p.b = geom.b;
        p.psi = geom.psi;
        p.crank = *crank;
        p.rod = *rod;
        p.validate();
        return p;
    }

    /// RSU: explicit lengths, or realized over the region. SPU: strokes from the file or the actuator.
    [[nodiscard]] Mechanism mechanism(const OperationalRegion* region, const ActuatorSpec* act,
                                      const RealizeOptions& opt = {}) const {
        if (arch == Architecture::spu) {
            SpuParams p;
            p.a = geom.a;
            p.b = geom.b;
            if (stroke_min && stroke_max) {
                p.stroke_min = *stroke_min;
                p.stroke_max = *stroke_max;
            } else if (act && act->kind == ActuatorKind::linear) {
                p = to_spu_params(geom, *act);
            } else {
                p.stroke_min = {0.0, 0.0};
                p.stroke_max = {HUGE_VAL, HUGE_VAL};
            }
            return p;
        }
        if (explicit_lengths()) return rsu_explicit();
        if (!region) throw InputError("design has gamma/delta but no region to realize against");
        return realize(to_free_params(geom), *region, opt);
    }
};

inline DesignFile design_from_json(const json& j, const std::string& path = "design") {
    using namespace detail;
    DesignFile d;
    try {
        d.arch = parse_architecture(text(j, "architecture", path));
    } catch (const SchemaError&) {
        throw;
    } catch (const InputError& e) {
        throw SchemaError(path + ".architecture: " + e.what());
    }
    d.geom.a = {vec3(field(j, "a1_mm", path), path + ".a1_mm"), vec3(field(j, "a2_mm", path), path + ".a2_mm")};
    d.geom.b = {vec3(field(j, "b1_mm", path), path + ".b1_mm"), vec3(field(j, "b2_mm", path), path + ".b2_mm")};
    if (j.contains("stroke_min_mm")) d.stroke_min = numbers<2>(j.at("stroke_min_mm"), path + ".stroke_min_mm");
    if (j.contains("stroke_max_mm")) d.stroke_max = numbers<2>(j.at("stroke_max_mm"), path + ".stroke_max_mm");
    if (d.arch == Architecture::rsu) {
        if (j.contains("psi_rad")) {
            d.geom.psi = numbers<2>(j.at("psi_rad"), path + ".psi_rad");
        } else {
            const auto psi = numbers<2>(field(j, "psi_deg", path), path + ".psi_deg");
            d.geom.psi = {deg2rad(psi[0]), deg2rad(psi[1])};
        }
        if (j.contains("crank_mm")) d.crank = numbers<2>(j.at("crank_mm"), path + ".crank_mm");
        if (j.contains("rod_mm")) d.rod = numbers<2>(j.at("rod_mm"), path + ".rod_mm");
        if (d.crank.has_value() != d.rod.has_value())
            throw SchemaError(path + ": crank_mm and rod_mm must be given together");
        if (!d.explicit_lengths()) {
            d.geom.gamma = numbers<2>(field(j, "gamma", path), path + ".gamma");
            d.geom.delta = numbers<2>(field(j, "delta", path), path + ".delta");
        } else {
            if (j.contains("gamma")) d.geom.gamma = numbers<2>(j.at("gamma"), path + ".gamma");
            if (j.contains("delta")) d.geom.delta = numbers<2>(j.at("delta"), path + ".delta");
        }
    }
    return d;
}

inline DesignFile load_design(const std::filesystem::path& path) {
    return design_from_json(detail::read_json_file(path), path.filename().string());
}

/// Realized mechanism as JSON. Angles are radians here so bundles round-trip exactly.
inline json mechanism_to_json(const Mechanism& m) {
    using detail::to_json;
    if (const auto* s = std::get_if<SpuParams>(&m)) {
        return json{{"architecture", "spu"},
                    {"a1_mm", to_json(s->a[0])},
                    {"a2_mm", to_json(s->a[1])},
                    {"b1_mm", to_json(s->b[0])},
                    {"b2_mm", to_json(s->b[1])},
                    {"stroke_min_mm", s->stroke_min},
                    {"stroke_max_mm", s->stroke_max}};
    }
    const auto& r = std::get<RsuParams>(m);
    return json{{"architecture", "rsu"},
                {"a1_mm", to_json(r.a[0])},
                {"a2_mm", to_json(r.a[1])},
                {"b1_mm", to_json(r.b[0])},
                {"b2_mm", to_json(r.b[1])},
                {"psi_rad", r.psi},
                {"crank_mm", r.crank},
                {"rod_mm", r.rod}};
}

inline Mechanism mechanism_from_json(const json& j, const std::string& path) {
    const DesignFile d = design_from_json(j, path);
    if (d.arch == Architecture::rsu) {
        if (!d.explicit_lengths()) throw SchemaError(path + ": realized RSU needs crank_mm and rod_mm");
        RsuParams p;
        p.a = d.geom.a;
        p.b = d.geom.b;
        p.psi = d.geom.psi;
        p.crank = *d.crank;
        p.rod = *d.rod;
        return p;
    }
    if (!d.stroke_min || !d.stroke_max) throw SchemaError(path + ": realized SPU needs stroke limits");
    SpuParams p;
    p.a = d.geom.a;
    p.b = d.geom.b;
    p.stroke_min = *d.stroke_min;
    p.stroke_max = *d.stroke_max;
    return p;
}

// ---------------------------------------------------------------------------
// Result bundle

struct CandidateRecord {
    std::string id;
    std::string architecture;  // "spu", "rsu" or "serial" (baselines only)
    std::string actuator;
    bool baseline{false};
    std::vector<double> genes;
    std::optional<Mechanism> params;
    Evaluation evaluation;
    MetricVector mean{};
    MetricVector variance{};
    std::size_t excluded_poses{0};
    std::size_t excluded_in_core{0};

    [[nodiscard]] RankInput rank_input() const { return {id, architecture, actuator, mean, variance, baseline}; }
};

struct Provenance {
    std::uint64_t seed{0};
    std::size_t pop_size{0};
    std::size_t generations{0};
    std::string created_utc;
    std::string pool_hash;
};

struct ResultBundle {
    int schema_version{kBundleSchemaVersion};
    std::string tool_version{kToolVersion};
    json config;  // config snapshot
    std::vector<ActuatorSpec> catalog;
    std::vector<CandidateRecord> candidates;
    Provenance provenance;

    [[nodiscard]] std::vector<RankInput> rank_inputs() const {
        std::vector<RankInput> out;
        out.reserve(candidates.size());
        for (const auto& c : candidates) out.push_back(c.rank_input());
        return out;
    }
};

inline void fill_metrics(CandidateRecord& c, const AnkleMetrics& m) {
    c.mean = {m.speed.mean, m.torque.mean, m.backdrive.mean, m.manipulability.mean,
              m.compactness, m.actuation_mass, m.com_height};
    c.variance = {m.speed.variance, m.torque.variance, m.backdrive.variance, m.manipulability.variance, 0.0, 0.0, 0.0};
    c.excluded_poses = m.excluded_poses;
    c.excluded_in_core = m.excluded_in_core;
}

/// FNV-1a over the candidate set, canonicalized by sorting on id.
inline std::string pool_hash(const std::vector<RankInput>& pool) {
    std::vector<const RankInput*> sorted;
    for (const auto& c : pool) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(), [](const RankInput* a, const RankInput* b) { return a->id < b->id; });
    std::ostringstream canon;
    canon.precision(17);
    for (const auto* c : sorted) {
        canon << c->id << '|' << c->architecture << '|' << c->actuator << '|' << c->baseline;
        for (double v : c->raw) canon << '|' << v;
        for (double v : c->variance) canon << '|' << v;
        canon << '\n';
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canon.str()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << h;
    return hex.str();
}

inline json candidate_to_json(const CandidateRecord& c) {
    json metrics = json::object();
    for (std::size_t j = 0; j < kMetricCount; ++j)
        metrics[std::string(kMetricNames[j])] = {{"mean", c.mean[j]}, {"variance", c.variance[j]}};
    json out{{"id", c.id},
             {"architecture", c.architecture},
             {"actuator", c.actuator},
             {"baseline", c.baseline},
             {"genes", c.genes},
             {"evaluation",
              {{"f1", c.evaluation.f1},
               {"f2", c.evaluation.f2},
               {"feasible", c.evaluation.feasible},
               {"violation", c.evaluation.violation}}},
             {"metrics", metrics},
             {"excluded_poses", c.excluded_poses},
             {"excluded_in_core", c.excluded_in_core}};
    out["params"] = c.params ? mechanism_to_json(*c.params) : json(nullptr);
    return out;
}

inline CandidateRecord candidate_from_json(const json& j, const std::string& path) {
    using namespace detail;
    CandidateRecord c;
    c.id = text(j, "id", path);
    c.architecture = text(j, "architecture", path);
    c.actuator = text(j, "actuator", path);
    if (j.contains("baseline")) c.baseline = field(j, "baseline", path).get<bool>();
    if (j.contains("genes")) {
        const json& g = j.at("genes");
        if (!g.is_array()) throw SchemaError(path + ".genes: expected an array");
        for (std::size_t k = 0; k < g.size(); ++k) c.genes.push_back(number(g[k], path + ".genes[" + std::to_string(k) + "]"));
    }
    if (j.contains("params") && !j.at("params").is_null()) c.params = mechanism_from_json(j.at("params"), path + ".params");
    if (j.contains("evaluation")) {
        const json& e = j.at("evaluation");
        const std::string p = path + ".evaluation";
        c.evaluation.f1 = number(e, "f1", p);
        c.evaluation.f2 = number(e, "f2", p);
        c.evaluation.feasible = field(e, "feasible", p).get<bool>();
        c.evaluation.violation = number(e, "violation", p);
    }
    const json& m = field(j, "metrics", path);
    for (std::size_t k = 0; k < kMetricCount; ++k) {
        const std::string name(kMetricNames[k]);
        const json& entry = field(m, name, path + ".metrics");
        c.mean[k] = number(entry, "mean", path + ".metrics." + name);
        c.variance[k] = number_or(entry, "variance", 0.0, path + ".metrics." + name);
    }
    if (j.contains("excluded_poses")) c.excluded_poses = j.at("excluded_poses").get<std::size_t>();
    if (j.contains("excluded_in_core")) c.excluded_in_core = j.at("excluded_in_core").get<std::size_t>();
    return c;
}

inline json bundle_to_json(const ResultBundle& b) {
    json candidates = json::array();
    for (const auto& c : b.candidates) candidates.push_back(candidate_to_json(c));
    json catalog = json::array();
    for (const auto& a : b.catalog) catalog.push_back(actuator_to_json(a));
    return json{{"schema_version", b.schema_version},
                {"tool_version", b.tool_version},
                {"config", b.config},
                {"catalog", catalog},
                {"candidates", candidates},
                {"provenance",
                 {{"seed", b.provenance.seed},
                  {"pop_size", b.provenance.pop_size},
                  {"generations", b.provenance.generations},
                  {"created_utc", b.provenance.created_utc},
                  {"pool_hash", b.provenance.pool_hash}}}};
}

inline ResultBundle bundle_from_json(const json& j) {
    using namespace detail;
    if (!j.is_object() || !j.contains("schema_version")) throw CorruptBundle("bundle: missing schema_version");
    const json& v = j.at("schema_version");
    if (!v.is_number_integer()) throw CorruptBundle("bundle.schema_version: expected an integer");
    if (v.get<int>() != kBundleSchemaVersion)
        throw VersionMismatch("bundle schema version " + std::to_string(v.get<int>()) + " is not supported (expected " +
                              std::to_string(kBundleSchemaVersion) + ")");
    try {
        ResultBundle b;
        b.schema_version = v.get<int>();
        b.tool_version = text(j, "tool_version", "bundle");
        b.config = field(j, "config", "bundle");
        const json& cat = field(j, "catalog", "bundle");
        if (!cat.is_array()) throw SchemaError("bundle.catalog: expected an array");
        for (std::size_t k = 0; k < cat.size(); ++k)
            b.catalog.push_back(actuator_from_json(cat[k], "bundle.catalog[" + std::to_string(k) + "]"));
        const json& cands = field(j, "candidates", "bundle");
        if (!cands.is_array()) throw SchemaError("bundle.candidates: expected an array");
        for (std::size_t k = 0; k < cands.size(); ++k)
            b.candidates.push_back(candidate_from_json(cands[k], "bundle.candidates[" + std::to_string(k) + "]"));
        const json& p = field(j, "provenance", "bundle");
        b.provenance.seed = field(p, "seed", "bundle.provenance").get<std::uint64_t>();
        b.provenance.pop_size = field(p, "pop_size", "bundle.provenance").get<std::size_t>();
        b.provenance.generations = field(p, "generations", "bundle.provenance").get<std::size_t>();
        b.provenance.created_utc = text(p, "created_utc", "bundle.provenance");
        b.provenance.pool_hash = text(p, "pool_hash", "bundle.provenance");
        return b;
    } catch (const SchemaError& e) {
        throw CorruptBundle(e.what());
    } catch (const json::exception& e) {
        throw CorruptBundle(std::string("bundle: ") + e.what());
    }
}

inline std::string bundle_to_string(const ResultBundle& b) { return bundle_to_json(b).dump(2) + "\n"; }

inline ResultBundle bundle_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptBundle(std::string("bundle: unreadable JSON (") + e.what() + ")");
    }
    return bundle_from_json(j);
}

inline void save_bundle(const ResultBundle& b, const std::filesystem::path& path) {
    detail::write_text_file(path, bundle_to_string(b));
}

inline ResultBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return bundle_from_string(ss.str());
}

// ---------------------------------------------------------------------------
// Diagnostic grids

/// Columns: roll_deg, pitch_deg, solvable_leg1, solvable_leg2, margin_leg1, margin_leg2.
inline void write_solvability_csv(std::ostream& out, const SolvabilityMap& map) {
    out << "roll_deg,pitch_deg,solvable_leg1,solvable_leg2,margin_leg1,margin_leg2\n";
    out.precision(17);
    for (const auto& p : map.points)
        out << rad2deg(p.pose.roll) << ',' << rad2deg(p.pose.pitch) << ',' << (p.solvable[0] ? 1 : 0) << ','
            << (p.solvable[1] ? 1 : 0) << ',' << p.margin[0] << ',' << p.margin[1] << '\n';
}

inline void write_pose_diagnostics_csv(std::ostream& out, const std::vector<PoseDiagnostic>& diag) {
    out << "roll_deg,pitch_deg,weight,valid,speed_roll,speed_pitch,torque_roll,torque_pitch,"
           "backdrive_roll,backdrive_pitch,kappa\n";
    out.precision(17);
    for (const auto& d : diag) {
        const auto& c = d.capability;
        out << rad2deg(d.pose.roll) << ',' << rad2deg(d.pose.pitch) << ',' << d.weight << ',' << (d.valid ? 1 : 0)
            << ',' << c.speed.roll << ',' << c.speed.pitch << ',' << c.torque.roll << ',' << c.torque.pitch << ','
            << c.backdrive.roll << ',' << c.backdrive.pitch << ',' << c.kappa << '\n';
    }
}

}  // namespace ankle::io
