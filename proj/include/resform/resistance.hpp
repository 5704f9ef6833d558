#pragma once

#include <vector>

#include <Eigen/Dense>

#include "resform/network.hpp"

namespace resform {

/// Mathematically equal resistances computed through the Laplacian solve can
/// differ in their last bits; distances within this relative tolerance are
/// treated as the same radius everywhere balls and breakpoints are formed.
inline constexpr double kRadiusTol = 1e-9;

/// All-pairs effective resistance. d(x,y) is a metric on the vertex set.
struct ResistanceMetric {
    Eigen::MatrixXd d;
    int size() const { return static_cast<int>(d.rows()); }
    double operator()(int x, int y) const { return d(x, y); }
    /// Sorted distinct positive resistance values (the ball breakpoints).
    /// Values within kRadiusTol of each other are merged, keeping the run
    /// maximum so `d <= breakpoint` admits every member of the merged shell.
    std::vector<double> breakpoints() const;
};

/// Computed once per network via the pseudoinverse of the conductance
/// Laplacian; a deliberately different algebraic route from
/// effective_resistance so the two can cross-check each other.
ResistanceMetric resistance_metric(const MeasuredNetwork& net);

/// R(A,B)^{-1} = inf { E(f,f) : f=1 on A, f=0 on B }, via the harmonic
/// minimizer. A and B must be non-empty and disjoint.
double effective_resistance(const MeasuredNetwork& net, const std::vector<int>& A,
                            const std::vector<int>& B);

/// Connected component containing the center of a resistance sub-level set.
/// `members` is sorted; `mass` is its total measure.
struct ResistanceBall {
    int center = -1;
    double radius = 0.0;
    std::vector<int> members;
    double mass = 0.0;
    bool whole_space(const MeasuredNetwork& net) const {
        return static_cast<int>(members.size()) == net.size();
    }
};

/// Open ball: component of {y : R(x,y) < r} containing x, connectivity taken
/// in the graph topology restricted to the sub-level set. Rejects r <= 0.
ResistanceBall resistance_ball(const MeasuredNetwork& net, const ResistanceMetric& m,
                               int x, double r);

/// Closed variant {y : R(x,y) <= r}; the right-continuous value a volume
/// profile records at a breakpoint radius.
ResistanceBall resistance_ball_closed(const MeasuredNetwork& net,
                                      const ResistanceMetric& m, int x, double r);

/// R(center, complement of the ball). Errors if the ball is the whole space.
/// At breakpoint radii a vertex at distance exactly r lies in the complement,
/// which forces the value <= r; between breakpoints only <= (next realized
/// distance) is guaranteed.
double escape_resistance(const MeasuredNetwork& net, const ResistanceMetric& m,
                         const ResistanceBall& ball);

struct CoverResult {
    double radius = 0.0;
    double shrink = 0.0; // covering balls have radius shrink * radius
    std::vector<int> centers;
    int size() const { return static_cast<int>(centers.size()); }
};

/// Greedy cover of the ball B(x,r) by sub-level sets of radius eps*r:
/// repeatedly picks the uncovered member with the smallest vertex index.
/// Postconditions: every member is within < eps*r of some center, and centers
/// are pairwise >= eps*r apart. eps in (0, 1/2].
CoverResult greedy_cover(const MeasuredNetwork& net, const ResistanceMetric& m,
                         int x, double r, double eps);

/// Minimax chain x = c_0, ..., c_n = y over arbitrary vertices: minimizes the
/// largest single-step resistance, by dynamic programming over the complete
/// resistance-weighted graph. `constant` = max_step * n / R(x,y).
struct ChainProbe {
    std::vector<int> chain;
    double max_step = 0.0;
    double constant = 0.0;
};

ChainProbe chaining_probe(const ResistanceMetric& m, int x, int y, int n);

/// Aggregated chaining-condition probe over sampled pairs. For each pair,
/// n runs over powers of two up to R(x,y)/rho where rho is the largest
/// single-edge endpoint resistance (below that scale vertex chains cannot
/// subdivide further). Passes when the worst constant stays <= threshold.
struct ChainingReport {
    double worst_constant = 0.0;
    double threshold = 3.0;
    bool pass = false;
    int pairs_probed = 0;
    struct Sample {
        int x, y, n;
        double constant;
    };
    std::vector<Sample> samples;
};

ChainingReport probe_chaining(const MeasuredNetwork& net, const ResistanceMetric& m,
                              int max_pairs = 12, double threshold = 3.0);

/// CSV matrix (header row/column of vertex ids).
void save_metric_csv(const ResistanceMetric& m, const MeasuredNetwork& net,
                     const std::string& path);

} // namespace resform
