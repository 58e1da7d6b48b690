// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_BENCH_HPP
#define PFCRACK_BENCH_HPP

// SENT benchmark orchestration: configuration, runs, curve metrics and output files.

#include "pfcrack/crackinit.hpp"
#include "pfcrack/lefm.hpp"
#include "pfcrack/pathfollowing.hpp"
#include "pfcrack/vtk.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pfcrack {

struct LefmConfig {
    double da = 0.0;       // 0: four fine elements
    double a_max = 0.8e-3;
    double r1 = 0.0;       // 0: min(4 ell, r2 / 3)
    double r2 = 0.0;       // 0: 12 ell, kept inside the specimen up to a_max
};

struct OutputConfig {
    std::string directory = "pfcrack_out";
    int snapshot_every = 25;
    bool snapshots = true;
};

struct BenchmarkConfig {
    SentGeometry geometry = SentGeometry::benchmark();
    MaterialParams material;
    PhaseFieldParams phase;
    ControlParams control;
    /// Linear-regime steps up to the sharp-crack critical load when the increment is automatic.
    int elastic_steps_target = 50;
    double tol_alpha = 1e-4;
    int max_iterations = 2000;
    std::string technique = "all"; // "all", "lefm" or a technique id
    bool structured = true;
    std::uint64_t seed = 1;
    StopCriteria stop;
    LefmConfig lefm;
    OutputConfig output;

    BenchmarkConfig()
    {
        stop.max_steps = 3000;
        stop.max_crack_growth = 0.3e-3;
        control.max_delta_eps = 0.08;
    }

    double lefm_da() const { return lefm.da > 0.0 ? lefm.da : 4.0 * geometry.h_fine; }
    double lefm_r2() const
    {
        if (lefm.r2 > 0.0) {
            return lefm.r2;
        }
        const double L = geometry.side_length;
        const double a_far = std::max(lefm.a_max, geometry.crack_length);
        const double clearance = std::min({geometry.crack_length, L - a_far, geometry.crack_y, L - geometry.crack_y});
        return std::min(12.0 * phase.ell, 0.9 * clearance);
    }
    double lefm_r1() const { return lefm.r1 > 0.0 ? lefm.r1 : std::min(4.0 * phase.ell, lefm_r2() / 3.0); }

    void validate() const
    {
        material.validate();
        phase.validate();
        control.validate();
        geometry.validate(CrackKind::geo_t0, structured);
        require(elastic_steps_target > 0, "elastic_steps_target must be positive");
        require(tol_alpha > 0.0 && max_iterations > 0, "invalid alternate-minimization settings");
        require(stop.max_steps >= 0, "max_steps must be non-negative");
        require(output.snapshot_every >= 0, "snapshot_every must be non-negative");
        if (technique != "all" && technique != "lefm") {
            parse_technique(technique);
        }
    }
};

inline nlohmann::json to_json(const BenchmarkConfig& c)
{
    using nlohmann::json;
    const auto num_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return json{
        {"geometry",
         {{"side_length", c.geometry.side_length},
          {"crack_length", c.geometry.crack_length},
          {"crack_y", c.geometry.crack_y},
          {"band_half_height", c.geometry.band_half_height},
          {"h_fine", c.geometry.h_fine},
          {"h_far", c.geometry.h_far}}},
        {"material",
         {{"young_modulus", c.material.young_modulus},
          {"poisson_ratio", c.material.poisson_ratio},
          {"gc", c.material.gc},
          {"plane", c.material.plane == PlaneAssumption::plane_strain ? "plane_strain" : "plane_stress"}}},
        {"phase", {{"ell", c.phase.ell}, {"gc_numeric", c.phase.gc_numeric}, {"c_w", c.phase.c_w}, {"k_res", c.phase.k_res}}},
        {"control",
         {{"delta_eps_imp", c.control.delta_eps_imp},
          {"strain_measure", to_string(c.control.measure)},
          {"root_tol", c.control.root_tol},
          {"bracket_factor", c.control.bracket_factor},
          {"max_halvings", c.control.max_halvings},
          {"max_delta_eps", c.control.max_delta_eps},
          {"max_growth", c.control.max_growth},
          {"stall_iterations", c.control.stall_iterations},
          {"max_enlargements", c.control.max_enlargements},
          {"elastic_steps_target", c.elastic_steps_target}}},
        {"solver", {{"tol_alpha", c.tol_alpha}, {"max_iterations", c.max_iterations}}},
        {"technique", c.technique},
        {"mesh_mode", c.structured ? "structured" : "unstructured"},
        {"seed", c.seed},
        {"stop",
         {{"max_steps", c.stop.max_steps},
          {"max_crack_length", num_or_null(c.stop.max_crack_length)},
          {"max_crack_growth", num_or_null(c.stop.max_crack_growth)},
          {"max_u_imp", num_or_null(c.stop.max_u_imp)}}},
        {"lefm", {{"da", c.lefm_da()}, {"a_max", c.lefm.a_max}, {"r1", c.lefm_r1()}, {"r2", c.lefm_r2()}}},
        {"output",
         {{"directory", c.output.directory}, {"snapshot_every", c.output.snapshot_every}, {"snapshots", c.output.snapshots}}},
    };
}

/// Missing keys keep their defaults. Geometry sizes not given explicitly follow
/// phase.ell (band 2 ell, h = ell / 6, far field 2 ell), and gc_numeric, when
/// absent, is corrected so that the discrete effective toughness equals material.gc.
inline BenchmarkConfig config_from_json(const nlohmann::json& j)
{
    using nlohmann::json;
    BenchmarkConfig c;
    const json empty = json::object();
    auto section = [&](const char* name) -> const json& { return j.contains(name) ? j.at(name) : empty; };
    auto get = [](const json& s, const char* key, auto& field) {
        if (s.contains(key) && !s.at(key).is_null()) {
            field = s.at(key).get<std::decay_t<decltype(field)>>();
        }
    };

    const json& ph = section("phase");
    get(ph, "ell", c.phase.ell);
    get(ph, "c_w", c.phase.c_w);
    get(ph, "k_res", c.phase.k_res);

    c.geometry = SentGeometry::benchmark(c.phase.ell);
    const json& g = section("geometry");
    get(g, "side_length", c.geometry.side_length);
    c.geometry.crack_length = 0.5 * c.geometry.side_length;
    c.geometry.crack_y = 0.5 * c.geometry.side_length;
    get(g, "crack_length", c.geometry.crack_length);
    get(g, "crack_y", c.geometry.crack_y);
    get(g, "band_half_height", c.geometry.band_half_height);
    get(g, "h_fine", c.geometry.h_fine);
    get(g, "h_far", c.geometry.h_far);

    const json& m = section("material");
    get(m, "young_modulus", c.material.young_modulus);
    get(m, "poisson_ratio", c.material.poisson_ratio);
    get(m, "gc", c.material.gc);
    if (m.contains("plane")) {
        const auto p = m.at("plane").get<std::string>();
        require(p == "plane_strain" || p == "plane_stress", "material.plane must be plane_strain or plane_stress");
        c.material.plane = p == "plane_strain" ? PlaneAssumption::plane_strain : PlaneAssumption::plane_stress;
    }
    c.phase.gc_numeric = effective_gc(c.material.gc, c.geometry.h_fine, c.phase.ell, c.phase.c_w);
    get(ph, "gc_numeric", c.phase.gc_numeric);

    const json& ct = section("control");
    get(ct, "delta_eps_imp", c.control.delta_eps_imp);
    if (ct.contains("strain_measure")) {
        c.control.measure = parse_strain_measure(ct.at("strain_measure").get<std::string>());
    }
    get(ct, "root_tol", c.control.root_tol);
    get(ct, "bracket_factor", c.control.bracket_factor);
    get(ct, "max_halvings", c.control.max_halvings);
    get(ct, "max_delta_eps", c.control.max_delta_eps);
    get(ct, "max_growth", c.control.max_growth);
    get(ct, "stall_iterations", c.control.stall_iterations);
    get(ct, "max_enlargements", c.control.max_enlargements);
    get(ct, "elastic_steps_target", c.elastic_steps_target);

    const json& so = section("solver");
    get(so, "tol_alpha", c.tol_alpha);
    get(so, "max_iterations", c.max_iterations);

    get(j, "technique", c.technique);
    if (j.contains("mesh_mode")) {
        const auto mm = j.at("mesh_mode").get<std::string>();
        require(mm == "structured" || mm == "unstructured", "mesh_mode must be structured or unstructured");
        c.structured = mm == "structured";
    }
    get(j, "seed", c.seed);

    const json& st = section("stop");
    get(st, "max_steps", c.stop.max_steps);
    get(st, "max_crack_length", c.stop.max_crack_length);
    get(st, "max_crack_growth", c.stop.max_crack_growth);
    get(st, "max_u_imp", c.stop.max_u_imp);

    const json& lf = section("lefm");
    get(lf, "da", c.lefm.da);
    get(lf, "a_max", c.lefm.a_max);
    get(lf, "r1", c.lefm.r1);
    get(lf, "r2", c.lefm.r2);

    const json& out = section("output");
    get(out, "directory", c.output.directory);
    get(out, "snapshot_every", c.output.snapshot_every);
    get(out, "snapshots", c.output.snapshots);
    c.validate();
    return c;
}

inline BenchmarkConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw Error("cannot open config '" + path + "'");
    }
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw Error("config '" + path + "' is not valid JSON: " + ex.what());
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Curves and metrics

struct CurveMetrics {
    double peak_force = 0.0;
    double u_at_peak = 0.0;
    int peak_step = 0;
    std::optional<double> overshoot_ratio;
    bool snapback_detected = false;
    /// Crack-length growth when the snap-back was first seen.
    std::optional<double> snapback_crack_growth;
    double initial_stiffness = 0.0;
    long total_iterations = 0;
    /// Largest force rise between consecutive records after the peak, over F_peak.
    double post_peak_oscillation = 0.0;
};

/// The reference (if any) supplies the peak for the overshoot ratio; ell sets the
/// 4 ell crack-growth window of the snap-back test.
inline CurveMetrics curve_metrics(const std::vector<LoadStepRecord>& records,
                                  const std::vector<LoadStepRecord>* reference, double ell)
{
    require(!records.empty(), "curve_metrics needs at least one record");
    CurveMetrics m;
    std::size_t ipk = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].force > records[ipk].force) {
            ipk = i;
        }
        m.total_iterations += records[i].iterations;
    }
    m.peak_force = records[ipk].force;
    m.u_at_peak = records[ipk].u_imp;
    m.peak_step = records[ipk].step;

    if (reference != nullptr && !reference->empty()) {
        double ref_peak = reference->front().force;
        for (const auto& r : *reference) {
            ref_peak = std::max(ref_peak, r.force);
        }
        if (ref_peak > 0.0) {
            m.overshoot_ratio = m.peak_force / ref_peak;
        }
    }

    const double len0 = records.front().crack_length;
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].crack_length - len0 > 4.0 * ell) {
            break;
        }
        if (records[i].force - records[i - 1].force < 0.0 && records[i].u_imp - records[i - 1].u_imp < 0.0) {
            m.snapback_detected = true;
            m.snapback_crack_growth = records[i].crack_length - len0;
            break;
        }
    }

    // Least-squares line through the first 20 % of the pre-peak points (at least two).
    const std::size_t n_pre = ipk + 1;
    const std::size_t n_fit = std::min(n_pre, std::max<std::size_t>(2, (n_pre + 4) / 5));
    if (n_fit >= 2) {
        double su = 0, sf = 0, suu = 0, suf = 0;
        for (std::size_t i = 0; i < n_fit; ++i) {
            su += records[i].u_imp;
            sf += records[i].force;
            suu += records[i].u_imp * records[i].u_imp;
            suf += records[i].u_imp * records[i].force;
        }
        const double n = static_cast<double>(n_fit);
        const double den = n * suu - su * su;
        if (den > 0.0) {
            m.initial_stiffness = (n * suf - su * sf) / den;
        }
    }

    if (m.peak_force > 0.0) {
        for (std::size_t i = ipk + 1; i < records.size(); ++i) {
            m.post_peak_oscillation =
                std::max(m.post_peak_oscillation, (records[i].force - records[i - 1].force) / m.peak_force);
        }
    }
    return m;
}

inline nlohmann::json to_json(const CurveMetrics& m)
{
    using nlohmann::json;
    json j{{"peak_force", m.peak_force},
           {"u_at_peak", m.u_at_peak},
           {"peak_step", m.peak_step},
           {"overshoot_ratio", m.overshoot_ratio ? json(*m.overshoot_ratio) : json(nullptr)},
           {"snapback_detected", m.snapback_detected},
           {"snapback_crack_growth", m.snapback_crack_growth ? json(*m.snapback_crack_growth) : json(nullptr)},
           {"initial_stiffness", m.initial_stiffness},
           {"total_iterations", m.total_iterations},
           {"post_peak_oscillation", m.post_peak_oscillation}};
    return j;
}

inline const char* records_csv_header() { return "step,lambda,u_imp,F,E_el,D,iterations,crack_len"; }

inline void write_records_csv(std::ostream& os, const std::vector<LoadStepRecord>& records)
{
    os << records_csv_header() << '\n';
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.step, r.lambda, r.u_imp, r.force,
                      r.elastic_energy, r.dissipation, r.iterations, r.crack_length);
        os << buf;
    }
}

inline void write_records_csv(const std::string& path, const std::vector<LoadStepRecord>& records)
{
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write '" + path + "'");
    }
    write_records_csv(os, records);
}

inline std::vector<LoadStepRecord> read_records_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) {
        throw Error("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw Error("'" + path + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != records_csv_header()) {
        throw Error("'" + path + "' does not have the records header '" + std::string(records_csv_header()) + "'");
    }
    std::vector<LoadStepRecord> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        LoadStepRecord r;
        if (!(ls >> r.step >> r.lambda >> r.u_imp >> r.force >> r.elastic_energy >> r.dissipation >> r.iterations >>
              r.crack_length)) {
            throw Error("'" + path + "' line " + std::to_string(lineno) + ": malformed record");
        }
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunSummary {
    std::string id;
    bool ok = true;
    std::string error;
    std::string stop_reason;
    std::vector<LoadStepRecord> records;
    std::optional<CurveMetrics> metrics;
    double delta_eps = 0.0;
    std::size_t num_nodes = 0;
    std::size_t num_cells = 0;
    double seconds = 0.0;
    std::string directory;
    std::shared_ptr<const Mesh> mesh;
    std::optional<FieldState> final_state;
};

struct BenchmarkReport {
    std::optional<RunSummary> lefm;
    std::vector<RunSummary> runs;

    bool all_ok() const
    {
        bool ok = !lefm || lefm->ok;
        for (const auto& r : runs) {
            ok = ok && r.ok;
        }
        return ok;
    }

    int failures() const
    {
        int n = (lefm && !lefm->ok) ? 1 : 0;
        for (const auto& r : runs) {
            n += r.ok ? 0 : 1;
        }
        return n;
    }
};

/// Per-step observer for technique runs: (technique id, state, record).
using StepObserver = std::function<void(const std::string&, const FieldState&, const LoadStepRecord&)>;

inline std::vector<LoadStepRecord> lefm_records(const std::vector<LefmPoint>& path, double gc)
{
    std::vector<LoadStepRecord> out;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const auto& p = path[k];
        LoadStepRecord r;
        r.step = static_cast<int>(k);
        r.lambda = p.lambda;
        r.u_imp = p.u_imp;
        r.force = p.force;
        r.elastic_energy = p.lambda * p.lambda * p.e_bar;
        r.dissipation = gc * p.a;
        r.crack_length = p.a;
        out.push_back(r);
    }
    return out;
}

namespace detail {

inline std::string json_dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream os(p);
    if (!os) {
        throw Error("cannot write '" + p.string() + "'");
    }
    os << text;
}

inline nlohmann::json run_metadata(const BenchmarkConfig& c, const RunSummary& r)
{
    using nlohmann::json;
    json j = r.metrics ? to_json(*r.metrics) : json::object();
    j["technique"] = r.id;
    j["completed"] = r.ok;
    j["error"] = r.error;
    j["stop_reason"] = r.stop_reason;
    j["steps"] = r.records.empty() ? 0 : r.records.back().step;
    j["mesh_mode"] = c.structured ? "structured" : "unstructured";
    j["seed"] = c.seed;
    j["num_nodes"] = r.num_nodes;
    j["num_cells"] = r.num_cells;
    j["delta_eps_imp"] = r.delta_eps;
    j["delta_eps_schedule"] = {{"max_delta_eps", std::max(r.delta_eps, c.control.max_delta_eps)},
                               {"max_growth", c.control.max_growth},
                               {"rule", "grow while |dlambda| < dlambda of step 1"}};
    j["strain_measure"] = to_string(c.control.measure);
    j["am_convergence"] = {{"tol_alpha", c.tol_alpha},
                           {"tol_lambda_rel", 1e-6},
                           {"max_iterations", c.max_iterations},
                           {"stall_iterations", c.control.stall_iterations}};
    long reduced = 0, enlarged = 0, stalled = 0;
    for (const auto& rec : r.records) {
        reduced += rec.reduced_increment ? 1 : 0;
        enlarged += rec.enlarged_increment ? 1 : 0;
        stalled += rec.stalled ? 1 : 0;
    }
    j["reduced_increment_steps"] = reduced;
    j["enlarged_increment_steps"] = enlarged;
    j["stalled_steps"] = stalled;
    j["k_res"] = c.phase.k_res;
    j["gc_numeric"] = c.phase.gc_numeric;
    j["gc_effective"] = apparent_gc(c.phase.gc_numeric, c.geometry.h_fine, c.phase.ell, c.phase.c_w);
    j["units"] = {{"force", "N/m"}, {"displacement", "m"}, {"energy", "J/m"}, {"length", "m"}, {"stiffness", "N/m^2"}};
    return j;
}

} // namespace detail

struct RunOptions {
    /// Write files under config.output.directory.
    bool write_files = true;
    StepObserver observer;
    /// Keep mesh and final fields in the summary.
    bool keep_final_state = false;
};

inline RunSummary run_lefm(const BenchmarkConfig& c, const RunOptions& opt = {})
{
    RunSummary r;
    r.id = "LEFM";
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto path = lefm_equilibrium_path(c.geometry, c.geometry.crack_length, c.lefm_da(), c.lefm.a_max, c.material,
                                                LefmOptions{c.lefm_r1(), c.lefm_r2()});
        r.records = lefm_records(path, c.material.gc);
        r.stop_reason = "a_max";
        r.metrics = curve_metrics(r.records, &r.records, c.phase.ell);
    } catch (const std::exception& ex) {
        r.ok = false;
        r.error = ex.what();
        r.stop_reason = "error";
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.write_files) {
        const auto dir = std::filesystem::path(c.output.directory) / "LEFM";
        std::filesystem::create_directories(dir);
        r.directory = dir.string();
        write_records_csv((dir / "records.csv").string(), r.records);
        detail::write_text(dir / "metrics.json", detail::json_dump(detail::run_metadata(c, r)));
    }
    return r;
}

/// Critical load factor of the sharp crack at a0 (used to size the strain increment).
inline double reference_critical_lambda(const BenchmarkConfig& c, const RunSummary* lefm = nullptr)
{
    if (lefm != nullptr && lefm->ok && !lefm->records.empty()) {
        return lefm->records.front().lambda;
    }
    const auto p = lefm_unit_state(c.geometry, c.geometry.crack_length, c.material, LefmOptions{c.lefm_r1(), c.lefm_r2()});
    return critical_load_factor(p.g_bar, c.material.gc);
}

inline RunSummary run_technique(const BenchmarkConfig& c, const TechniqueId& tech, double lambda_ref,
                                const std::vector<LoadStepRecord>* reference, const RunOptions& opt = {})
{
    RunSummary r;
    r.id = tech.str();
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::path dir = std::filesystem::path(c.output.directory) / r.id;
    if (opt.write_files) {
        std::filesystem::create_directories(dir);
        r.directory = dir.string();
    }
    auto snapshot = [&](const std::string& name, const FieldState& s, const Mesh& mesh) {
        if (!opt.write_files || !c.output.snapshots) {
            return;
        }
        write_vtk_file((dir / name).string(), mesh, SnapshotFields{&s.alpha.values, &s.u.values}, r.id + " " + name);
    };
    try {
        const InitialCrack init = initialize(tech, c.geometry, c.structured, c.phase, c.seed);
        r.mesh = init.mesh;
        r.num_nodes = init.mesh->num_nodes();
        r.num_cells = init.mesh->num_cells();
        const FeSpace space(*init.mesh);
        ControlParams ctrl = c.control;
        PathFollower follower(space, c.material, c.phase, ctrl, c.tol_alpha, c.max_iterations);
        if (!(ctrl.delta_eps_imp > 0.0)) {
            const Eigen::VectorXd ubar = follower.unit_solution(init.alpha.values);
            ctrl.delta_eps_imp =
                suggest_delta_eps(strain_at_quadrature(space, ubar), ctrl.measure, lambda_ref, c.elastic_steps_target);
            follower.set_delta(ctrl.delta_eps_imp);
        }
        r.delta_eps = ctrl.delta_eps_imp;

        std::optional<FieldState> peak;
        double peak_force = -std::numeric_limits<double>::infinity();
        const auto result = run_equilibrium_path(follower, follower.initial_state(init.alpha), c.stop,
                                                 [&](const FieldState& s, const LoadStepRecord& rec) {
                                                     if (opt.observer) {
                                                         opt.observer(r.id, s, rec);
                                                     }
                                                     if (rec.step == 0) {
                                                         snapshot("initial.vtk", s, *init.mesh);
                                                     } else if (c.output.snapshot_every > 0 &&
                                                                rec.step % c.output.snapshot_every == 0) {
                                                         char name[64];
                                                         std::snprintf(name, sizeof name, "step_%05d.vtk", rec.step);
                                                         snapshot(name, s, *init.mesh);
                                                     }
                                                     if (rec.force > peak_force) {
                                                         peak_force = rec.force;
                                                         if (opt.write_files && c.output.snapshots) {
                                                             peak = s;
                                                         }
                                                     }
                                                 });
        r.records = result.records;
        r.ok = result.completed;
        r.error = result.error;
        r.stop_reason = result.stop_reason;
        if (peak) {
            snapshot("peak.vtk", *peak, *init.mesh);
        }
        if (opt.keep_final_state) {
            r.final_state = result.final_state;
        }
    } catch (const std::exception& ex) {
        r.ok = false;
        r.error = ex.what();
        r.stop_reason = "error";
    }
    if (!r.records.empty()) {
        r.metrics = curve_metrics(r.records, reference, c.phase.ell);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.write_files) {
        write_records_csv((dir / "records.csv").string(), r.records);
        detail::write_text(dir / "metrics.json", detail::json_dump(detail::run_metadata(c, r)));
    }
    return r;
}

inline void write_comparison(const std::filesystem::path& dir, const BenchmarkReport& rep)
{
    std::ofstream os(dir / "comparison.csv");
    if (!os) {
        throw Error("cannot write comparison table");
    }
    os << "technique,status,peak_force,u_at_peak,overshoot_ratio,snapback_detected,initial_stiffness,total_iterations,"
          "post_peak_oscillation\n";
    auto row = [&](const RunSummary& r) {
        char buf[512];
        if (r.metrics) {
            const auto& m = *r.metrics;
            std::snprintf(buf, sizeof buf, "%s,%s,%.10g,%.10g,%s,%d,%.10g,%ld,%.6g\n", r.id.c_str(), r.ok ? "ok" : "failed",
                          m.peak_force, m.u_at_peak,
                          m.overshoot_ratio ? std::to_string(*m.overshoot_ratio).c_str() : "", m.snapback_detected ? 1 : 0,
                          m.initial_stiffness, m.total_iterations, m.post_peak_oscillation);
        } else {
            std::snprintf(buf, sizeof buf, "%s,%s,,,,,,,\n", r.id.c_str(), r.ok ? "ok" : "failed");
        }
        os << buf;
    };
    if (rep.lefm) {
        row(*rep.lefm);
    }
    for (const auto& r : rep.runs) {
        row(r);
    }
}

/// Runs LEFM, a single technique, or everything, depending on config.technique.
/// A failed run does not stop its siblings.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& c, const RunOptions& opt = {})
{
    c.validate();
    BenchmarkReport rep;
    const std::filesystem::path dir(c.output.directory);
    if (opt.write_files) {
        std::filesystem::create_directories(dir);
        detail::write_text(dir / "config_used.json", detail::json_dump(to_json(c)));
    }
    if (c.technique == "lefm" || c.technique == "all") {
        rep.lefm = run_lefm(c, opt);
    }
    if (c.technique == "lefm") {
        return rep;
    }
    std::vector<TechniqueId> techs;
    if (c.technique == "all") {
        const auto all = all_techniques();
        techs.assign(all.begin(), all.end());
    } else {
        techs.push_back(parse_technique(c.technique));
    }
    double lambda_ref = 0.0;
    try {
        lambda_ref = reference_critical_lambda(c, rep.lefm ? &*rep.lefm : nullptr);
    } catch (const std::exception& ex) {
        for (const auto& t : techs) {
            RunSummary r;
            r.id = t.str();
            r.ok = false;
            r.error = std::string("reference load for the strain increment failed: ") + ex.what();
            rep.runs.push_back(r);
        }
        return rep;
    }
    const std::vector<LoadStepRecord>* reference = (rep.lefm && rep.lefm->ok) ? &rep.lefm->records : nullptr;
    for (const auto& t : techs) {
        rep.runs.push_back(run_technique(c, t, lambda_ref, reference, opt));
    }
    if (opt.write_files && c.technique == "all") {
        write_comparison(dir, rep);
    }
    return rep;
}

} // namespace pfcrack

#endif
