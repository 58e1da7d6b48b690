// SPDX-License-Identifier: Apache-2.0
#ifndef PFCRACK_CRACKINIT_HPP
#define PFCRACK_CRACKINIT_HPP

#include "pfcrack/phasefield.hpp"

#include <array>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace pfcrack {

enum class Representation { geo, pha };
enum class Thickness { t0, t1 };
enum class PhaseBc { neu, tip, whl, none };

struct TechniqueId {
    Representation representation = Representation::geo;
    Thickness thickness = Thickness::t1;
    PhaseBc phase_bc = PhaseBc::whl;

    bool valid() const
    {
        return representation == Representation::pha ? phase_bc == PhaseBc::none : phase_bc != PhaseBc::none;
    }

    std::string str() const
    {
        std::string s = representation == Representation::geo ? "GEO" : "PHA";
        s += thickness == Thickness::t0 ? "-T0" : "-T1";
        switch (phase_bc) {
        case PhaseBc::neu: s += "-NEU"; break;
        case PhaseBc::tip: s += "-TIP"; break;
        case PhaseBc::whl: s += "-WHL"; break;
        case PhaseBc::none: break;
        }
        return s;
    }

    CrackKind crack_kind() const
    {
        if (representation == Representation::geo) {
            return thickness == Thickness::t0 ? CrackKind::geo_t0 : CrackKind::geo_t1;
        }
        return thickness == Thickness::t0 ? CrackKind::conforming_line : CrackKind::conforming_band;
    }

    friend bool operator==(const TechniqueId&, const TechniqueId&) = default;
};

/// The eight techniques, in the order they are reported.
inline std::array<TechniqueId, 8> all_techniques()
{
    using R = Representation;
    using T = Thickness;
    using B = PhaseBc;
    return {{{R::geo, T::t0, B::neu},
             {R::geo, T::t0, B::tip},
             {R::geo, T::t0, B::whl},
             {R::pha, T::t0, B::none},
             {R::geo, T::t1, B::neu},
             {R::geo, T::t1, B::tip},
             {R::geo, T::t1, B::whl},
             {R::pha, T::t1, B::none}}};
}

inline TechniqueId parse_technique(const std::string& s)
{
    for (const auto& t : all_techniques()) {
        if (t.str() == s) {
            return t;
        }
    }
    throw Error("unknown technique '" + s + "' (expected GEO-T0|T1-NEU|TIP|WHL, PHA-T0 or PHA-T1)");
}

/// Minimizer of the dissipation alone (zero load) with alpha_sharp as lower bound,
/// which holds the pinned nodes at 1.
inline PhaseField regularize_phase(const FeSpace& space, const PhaseFieldParams& pf, const PhaseField& alpha_sharp)
{
    PhaseSolver solver(space, pf);
    const std::vector<double> psi(space.num_points(), 0.0);
    PhaseField out = alpha_sharp;
    out.values = solver.solve(psi, alpha_sharp.lower, alpha_sharp.values).x;
    for (int n : out.pinned) {
        out.values[n] = 1.0;
    }
    return out;
}

/// Mesh plus initial phase state for one technique.
struct InitialCrack {
    TechniqueId technique;
    std::shared_ptr<const Mesh> mesh;
    PhaseField alpha;
};

inline std::vector<int> pinned_nodes(const Mesh& mesh, const TechniqueId& tech)
{
    require(tech.valid(), "invalid technique combination");
    std::set<int> pins;
    auto add = [&](const std::string& set) {
        const auto& s = mesh.node_set(set);
        pins.insert(s.begin(), s.end());
    };
    if (tech.representation == Representation::geo) {
        if (tech.phase_bc == PhaseBc::tip) {
            add("crack_tip");
        } else if (tech.phase_bc == PhaseBc::whl) {
            add("crack_faces");
            add("crack_tip");
        }
    } else if (tech.thickness == Thickness::t0) {
        add("crack_line");
    } else {
        add("crack_band_nodes");
    }
    return {pins.begin(), pins.end()};
}

/// Pins alpha = 1 where the technique asks for it on a mesh built for that
/// technique and regularizes at zero load. alpha_lower equals the resulting alpha_0.
inline InitialCrack initialize_on_mesh(const TechniqueId& tech, std::shared_ptr<const Mesh> mesh,
                                       const PhaseFieldParams& pf)
{
    if (!tech.valid()) {
        throw Error("invalid technique " + tech.str());
    }
    require(mesh != nullptr, "initialize_on_mesh needs a mesh");
    if (mesh->crack_kind != tech.crack_kind()) {
        throw Error(tech.str() + " needs a " + to_string(tech.crack_kind()) + " mesh, got " + to_string(mesh->crack_kind));
    }
    InitialCrack init;
    init.technique = tech;
    init.mesh = mesh;
    const std::vector<int> pins = pinned_nodes(*mesh, tech);
    if (tech.representation == Representation::pha && pins.empty()) {
        throw Error(tech.str() + " needs crack nodes aligned with the initial crack, none were found");
    }
    if (tech.phase_bc == PhaseBc::tip || tech.phase_bc == PhaseBc::whl) {
        require(!pins.empty(), tech.str() + ": the mesh has no crack nodes to pin");
    }
    PhaseField sharp = PhaseField::zeros(mesh->num_nodes());
    sharp.pinned = pins;
    for (int n : pins) {
        sharp.values[n] = 1.0;
        sharp.lower[n] = 1.0;
    }
    if (pins.empty()) {
        init.alpha = sharp;
    } else {
        const FeSpace space(*mesh);
        init.alpha = regularize_phase(space, pf, sharp);
    }
    init.alpha.lower = init.alpha.values;
    return init;
}

/// Builds the mesh for the technique and initializes the phase on it.
inline InitialCrack initialize(const TechniqueId& tech, const SentGeometry& geom, bool structured,
                               const PhaseFieldParams& pf, std::uint64_t seed = 1)
{
    if (!tech.valid()) {
        throw Error("invalid technique " + tech.str());
    }
    return initialize_on_mesh(tech, std::make_shared<const Mesh>(build_sent_mesh(geom, tech.crack_kind(), structured, seed)),
                              pf);
}

} // namespace pfcrack

#endif
