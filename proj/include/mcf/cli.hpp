#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mcf/boundary.hpp"
#include "mcf/domain.hpp"
#include "mcf/mesh.hpp"
#include "mcf/regularize.hpp"

namespace mcf::cli {

enum class Command { validate, solve, ladder, diagnose, boundary, soliton };
std::string to_string(Command c);
Command command_from_string(const std::string& name);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1; // unexpected internal error
inline constexpr int config = 2;
inline constexpr int nonconvergence = 3;
inline constexpr int invariant = 4;
} // namespace exit_code

inline constexpr double unset = std::numeric_limits<double>::quiet_NaN();

struct GridConfig {
    int n = 128;       // nodes along axis 0 (r on axisymmetric grids)
    int n1 = 0;        // nodes along axis 1; 0 = same as n (cartesian) or isotropic (axisymmetric)
    double margin = 0.1;
};

struct SolverConfig {
    std::vector<double> schedule{4, 8, 16, 32, 64};
    double lambda = unset; // single solve; defaults to the last schedule entry
    double tolerance = 1e-8;
    int max_iterations = 200;
    SolverOptions::Scheme scheme = SolverOptions::Scheme::nondivergence;
    std::string uniqueness = "final"; // none | final | all
    double perturbation = 0.1;        // noise amplitude relative to max f
    std::uint64_t seed = 20240601;
};

struct DiagnosticsConfig {
    std::string field;                 // CSV of u to diagnose instead of running a ladder
    std::string k_kind = "superlevel"; // superlevel | annulus
    double k_fraction = 0.05;
    double k_inner = 0.1;
    double k_outer = 0.9;
    std::vector<double> nested_levels{0.05, 0.25, 0.45, 0.65, 0.85};
    double epsilon_limit = 0.03;     // bound on eps_grid of the ratio inequality at the largest lambda
    bool exact_arrival = false;      // compare with the shrinking sphere (disk domains)
    double exact_radius = 0.9;       // fraction of the radius where the comparison is made
    double exact_tolerance = 0.02;
    double arrival_tolerance = unset; // checked only when set
    double umbilicity_tolerance = 0.02;
    double expected_ratio = unset;   // kappa_1 / h expected on K
    double ratio_tolerance = 0.02;
    int product_probes = 100;
    std::uint64_t seed = 20240601;
    std::string expect_type;         // sphere | cylinder; empty = no expectation
    double expect_plane = 0.0;
    double plane_tolerance = 0.25;
    double type_tolerance = 0.05;
};

struct BoundaryConfig {
    bool present = false;
    std::string shape = "lens"; // lens | degenerate_lens | square
    double radius = 1.0;
    double offset = 0.8;
    std::vector<MotionSample> motion{MotionSample{}};
    double horizon_coefficient = 1.0;
    double horizon_exponent = 0.0;
    double reach_margin = 0.1;
    double chord_tolerance = unset; // Hausdorff bound of the limit curve to the chord

    BoundaryMotionSpec spec() const;
};

struct SolitonConfig {
    std::string family = "grim_reaper"; // grim_reaper | bowl
    double speed = 1.0;
    int nodes = 1024;          // coarse grid; the fine grid has twice as many nodes
    double extent = unset;     // half-width (grim reaper) or radius (bowl)
    int trials = 16;
    std::uint64_t seed = 20240601;
    int hzero_sets = 5;
    double residual_tolerance = 1e-4;
    double min_order = 1.8;
    double stationarity_tolerance = 1e-5;
};

struct RunConfig {
    DomainSpec domain = DomainSpec::disk(1.0);
    GridConfig grid;
    SolverConfig solver;
    DiagnosticsConfig diagnostics;
    BoundaryConfig boundary;
    SolitonConfig soliton;
    std::string out_dir = "out";
};

/// Parses the TOML-style configuration. Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

struct Overrides {
    std::optional<std::string> out;
    std::optional<int> grid_n;
    std::optional<double> lambda_max;
};

/// Applies command-line overrides, then validates the whole configuration.
void apply_overrides(RunConfig& config, const Overrides& overrides);
void validate(const RunConfig& config);

/// Grid over the domain bounding box plus margin (cartesian for planar domains,
/// isotropic axisymmetric with an odd z count for rotationally symmetric ones).
Grid make_grid(const RunConfig& config);
/// Grid over the boundary-flow region.
Grid make_boundary_grid(const RunConfig& config, const BoundaryMotionSpec& spec);

/// Runs one command and writes its artifacts under config.out_dir. Returns the exit code.
int run(Command command, const RunConfig& config);

/// Full command line entry point (argument parsing, config loading, run).
int main(int argc, char** argv);

} // namespace mcf::cli
