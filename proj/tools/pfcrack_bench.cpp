// SPDX-License-Identifier: Apache-2.0
// Command line driver for the SENT benchmark.

#include "pfcrack/pfcrack.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

pfcrack::BenchmarkConfig base_config(const std::string& path)
{
    return path.empty() ? pfcrack::config_from_json(nlohmann::json::object()) : pfcrack::load_config(path);
}

void print_summary(const pfcrack::RunSummary& r)
{
    if (r.metrics) {
        const auto& m = *r.metrics;
        std::printf("%-11s %-6s steps=%-5d F_peak=%.6e N/m u_peak=%.6e m ratio=%s snapback=%d iters=%ld (%.1f s)\n",
                    r.id.c_str(), r.ok ? "ok" : "FAILED", r.records.empty() ? 0 : r.records.back().step, m.peak_force,
                    m.u_at_peak, m.overshoot_ratio ? std::to_string(*m.overshoot_ratio).c_str() : "-",
                    m.snapback_detected ? 1 : 0, m.total_iterations, r.seconds);
    } else {
        std::printf("%-11s FAILED (%.1f s)\n", r.id.c_str(), r.seconds);
    }
    if (!r.ok) {
        std::printf("            error: %s\n", r.error.c_str());
    }
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Phase-field crack initialization benchmark on the SENT specimen"};
    app.require_subcommand(1);

    std::string config_path, technique, mesh_mode, out_dir;
    std::uint64_t seed = 0;
    bool all = false;
    int max_steps = -1;
    auto* run = app.add_subcommand("run", "run LEFM, one technique, or all of them");
    run->add_option("--config", config_path, "JSON configuration (defaults reproduce the benchmark setup)");
    auto* tech_opt = run->add_option("--technique", technique, "technique id (GEO-T0-NEU ... PHA-T1) or lefm");
    auto* all_opt = run->add_flag("--all", all, "LEFM reference plus all eight techniques");
    tech_opt->excludes(all_opt);
    run->add_option("--mesh", mesh_mode, "structured or unstructured")->check(CLI::IsMember({"structured", "unstructured"}));
    auto* seed_opt = run->add_option("--seed", seed, "seed of the unstructured mesh perturbation");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--max-steps", max_steps, "override stop.max_steps");

    std::string curve, reference;
    double ell = 1.5e-5;
    auto* metrics = app.add_subcommand("metrics", "curve metrics of a records CSV");
    metrics->add_option("--curve", curve, "records CSV")->required();
    metrics->add_option("--reference", reference, "reference records CSV (LEFM)");
    metrics->add_option("--ell", ell, "regularization length for the snap-back window (m)");

    bool preview = false;
    std::string mesh_config, mesh_tech = "GEO-T1-WHL", mesh_out = "mesh_preview.vtk", mesh_kind_mode;
    std::uint64_t mesh_seed = 0;
    auto* mesh = app.add_subcommand("mesh", "write the mesh and initial phase field of a technique");
    mesh->add_flag("--preview", preview, "emit the snapshot only (no solve)")->required();
    mesh->add_option("--config", mesh_config, "JSON configuration");
    mesh->add_option("--technique", mesh_tech, "technique whose mesh is shown");
    mesh->add_option("--mesh", mesh_kind_mode, "structured or unstructured")->check(CLI::IsMember({"structured", "unstructured"}));
    auto* mesh_seed_opt = mesh->add_option("--seed", mesh_seed, "perturbation seed");
    mesh->add_option("--out", mesh_out, "output VTK file");

    auto* defaults = app.add_subcommand("defaults", "print the default configuration as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = base_config(config_path);
            if (all) {
                cfg.technique = "all";
            } else if (!technique.empty()) {
                cfg.technique = technique == "LEFM" ? "lefm" : technique;
            }
            if (!mesh_mode.empty()) {
                cfg.structured = mesh_mode == "structured";
            }
            if (*seed_opt) {
                cfg.seed = seed;
            }
            if (!out_dir.empty()) {
                cfg.output.directory = out_dir;
            }
            if (max_steps >= 0) {
                cfg.stop.max_steps = max_steps;
            }
            cfg.validate();
            pfcrack::RunOptions opt;
            opt.observer = [](const std::string& id, const pfcrack::FieldState&, const pfcrack::LoadStepRecord& r) {
                if (r.step % 50 == 0) {
                    std::fprintf(stderr, "[%s] step %d u=%.4e F=%.4e iters=%d\n", id.c_str(), r.step, r.u_imp, r.force,
                                 r.iterations);
                }
            };
            const auto rep = pfcrack::run_benchmark(cfg, opt);
            if (rep.lefm) {
                print_summary(*rep.lefm);
            }
            for (const auto& r : rep.runs) {
                print_summary(r);
            }
            std::printf("output: %s\n", cfg.output.directory.c_str());
            return std::min(rep.failures(), 125);
        }
        if (*metrics) {
            const auto recs = pfcrack::read_records_csv(curve);
            std::vector<pfcrack::LoadStepRecord> ref;
            if (!reference.empty()) {
                ref = pfcrack::read_records_csv(reference);
            }
            const auto m = pfcrack::curve_metrics(recs, reference.empty() ? nullptr : &ref, ell);
            std::cout << pfcrack::to_json(m).dump(2) << '\n';
            return 0;
        }
        if (*mesh) {
            auto cfg = base_config(mesh_config);
            if (!mesh_kind_mode.empty()) {
                cfg.structured = mesh_kind_mode == "structured";
            }
            if (*mesh_seed_opt) {
                cfg.seed = mesh_seed;
            }
            const auto init = pfcrack::initialize(pfcrack::parse_technique(mesh_tech), cfg.geometry, cfg.structured,
                                                  cfg.phase, cfg.seed);
            pfcrack::write_vtk_file(mesh_out, *init.mesh, pfcrack::SnapshotFields{&init.alpha.values, nullptr},
                                    mesh_tech + " initial state");
            std::printf("%s: %zu nodes, %zu cells, %zu pinned -> %s\n", mesh_tech.c_str(), init.mesh->num_nodes(),
                        init.mesh->num_cells(), init.alpha.pinned.size(), mesh_out.c_str());
            return 0;
        }
        if (*defaults) {
            std::cout << pfcrack::to_json(base_config("")).dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
