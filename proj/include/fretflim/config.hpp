// Run configuration: flat "section.key = value" text files. The physical
// model keys are required; everything else has defaults. Unknown keys are
// rejected.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fretflim/curves.hpp"
#include "fretflim/fit.hpp"
#include "fretflim/model.hpp"
#include "fretflim/simulate.hpp"

namespace fretflim {

struct RunConfig {
    ModelParams model;
    std::optional<double> depth_z_min_nm;  // default: max(0.5, mean - 4 sigma)
    std::optional<double> depth_z_max_nm;  // default: mean + 4 sigma
    TimeGrid grid;
    IrfSpec irf;
    SignalComposition signal;
    GateSpec gate;
    FlimScene scene;
    double total_photons = 1e6;
    std::uint64_t seed = 1;

    /// Parameters of the donor/acceptor system studied in the lab notebook
    /// configs shipped with this project.
    static RunConfig defaults();

    static RunConfig load(const std::string& path);
    static RunConfig parse(const std::string& text);
    std::string dump() const;

    DepthDistribution depth_window() const;
    void validate() const;
};

}  // namespace fretflim
