#pragma once

#include <string>
#include <vector>

#include "mcf/arrival.hpp"
#include "mcf/mesh.hpp"
#include "mcf/regularize.hpp"

namespace mcf {

enum class TangentType { unclassified, sphere, cylinder, unknown };
std::string to_string(TangentType t);

/// Mean ratios over the regular, pre-singular nodes of one probe shell.
struct ShellTrace {
    double distance = 0.0;
    int probes = 0;         // shell nodes with u below the candidate value
    int regular_probes = 0; // of which regular
    double ratio_first = 0.0; // kappa_1 / h
    double ratio_last = 0.0;  // kappa_{n-1} / h
};

struct SingularCandidate {
    Vec2 centroid = Vec2::Zero();
    NodeIndex peak;             // node of largest graph mean curvature at the largest lambda
    Vec2 peak_position = Vec2::Zero();
    std::size_t node_count = 0; // flagged nodes in the cluster
    bool on_axis = false;
    /// max of h(N_lambda) over the neighbourhood of the cluster, one entry per lambda
    std::vector<double> blowup_trace;
    bool blowup_increasing = false;
    /// non-regular node count in the neighbourhood, one entry per lambda
    std::vector<std::size_t> nonregular_counts;

    TangentType type = TangentType::unclassified;
    std::vector<ShellTrace> shells;
    double limit_first = 0.0; // inward extrapolation of the shell traces
    double limit_last = 0.0;
    double min_ratio = 0.0;   // min kappa_1 / h over the probed neighbourhood
    bool convex_type = false; // min_ratio >= -tolerance
    std::string note;
};

struct SingularityReport {
    std::vector<double> lambdas;
    int dimension = 2;
    double eps_reg = 0.0;
    double h_max_resolvable = 0.0;
    double tolerance = 0.05;
    double nonregular_measure = 0.0; // at the largest lambda
    std::vector<SingularCandidate> candidates;
};

/// Flags interior nodes that are non-regular at the two largest lambdas, or whose
/// graph mean curvature exceeds h_max_resolvable at both, and clusters them into
/// connected components. `u` holds u_lambda for each entry of `lambdas`.
SingularityReport detect_singular(const std::vector<double>& lambdas, const std::vector<ScalarField>& u,
                                  Exec exec = Exec::parallel);
SingularityReport detect_singular(const LadderResult& ladder, Exec exec = Exec::parallel);

/// Ratio signatures on dyadic shells {2, 4, 8, 16} Delta around each candidate peak,
/// using only regular nodes with u below the peak value. Shells without regular
/// nodes are skipped; the sequence is continued to 32 and 64 Delta until two
/// shells are usable. Traces are extrapolated linearly to distance 0.
SingularityReport classify_tangent(SingularityReport report, const ScalarField& u, Exec exec = Exec::parallel);

/// Candidates whose cluster touches the axis and whose centroid lies within
/// `tolerance` of the plane z = z0.
std::vector<const SingularCandidate*> axis_candidates_near(const SingularityReport& report, double z0,
                                                           double tolerance);

} // namespace mcf
