#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowproc/errors.hpp"
#include "flowproc/model.hpp"

namespace flowproc {

// One JSON document drives every subcommand.  Blocks not used by the
// chosen command may be omitted; a command raises ConfigError when a key
// it needs is missing.  The fully resolved configuration (defaults and
// command line overrides applied) is echoed into every report.

struct NumericsSpec {
    std::optional<double> dt, dx, h, ds, dr, t_final, x_min, x_max, horizon;
    std::vector<double> snapshot_times;
    std::vector<double> levels;
    std::optional<long> population_cap;
};

struct McSpec {
    long replicates = 100;
    std::uint64_t seed = 1;
    double tolerance_sigma = 3.0;  // scales the statistical bands of verify-all
};

struct OutputSpec {
    std::string dir = "out";
    bool atoms = false;   // snake: dump atom positions
    bool series = false;  // spde: dump the per step mass series
};

// small family of scalar data functions used for terminal data, duality
// axis functions and optional particle functionals
struct DataFnSpec {
    std::string kind = "one";  // one | plateau | gaussian
    double height = 1.0;
    double center = 0.0;
    double half_width = 1.0;  // plateau
    double sd = 1.0;          // gaussian

    double eval(double x) const;
};

struct GridSpec {
    double x_min = -8;
    double x_max = 8;
    double dx = 0.25;
};

struct DualitySpec {
    int arity = 2;
    double t = 1.0;
    GridSpec grid;
    DataFnSpec f;  // every axis carries the same data function
};

struct ExperimentConfig {
    int version = 0;
    Coefficients model;
    AtomicMeasure initial;
    NumericsSpec numerics;
    McSpec mc;
    OutputSpec output;
    DataFnSpec terminal;  // backward solver data
    std::optional<DataFnSpec> functional;
    DualitySpec duality;
};

ExperimentConfig load_config(const std::string& path);

// resolved configuration as a JSON document, defaults expanded
std::string resolved_config_json(const ExperimentConfig& cfg);

}  // namespace flowproc
