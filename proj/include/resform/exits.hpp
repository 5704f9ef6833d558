#pragma once

#include <vector>

#include <Eigen/Dense>

#include "resform/network.hpp"
#include "resform/resistance.hpp"

namespace resform {

/// Occupation density of the process killed on exiting a ball, with respect
/// to the vertex measure: g(x,y) = inverse of the conductance Laplacian
/// restricted to the ball members. Symmetric; g(x,x) equals the escape
/// resistance R(x, complement); g(x,y) <= g(x,x).
struct GreenKernel {
    std::vector<int> members; // sorted; defines the local index
    Eigen::MatrixXd g;        // indexed by position in `members`
    int local_index(int vertex) const; // -1 when outside the ball
    double value(int x, int y) const;  // by global vertex index
};

/// Errors if the ball is the whole space (nothing to kill on).
GreenKernel green_kernel(const MeasuredNetwork& net, const ResistanceBall& ball);

/// Mean exit time from the ball starting at x, computed two ways: the
/// measure-weighted Poisson problem and the Green-kernel integral. The routes
/// must agree to 1e-9 relative or the call fails.
double expected_exit_time(const MeasuredNetwork& net, const ResistanceBall& ball,
                          int x);

/// Eigensystem of the killed (ball-restricted) generator, for repeated
/// survival evaluations on one ball. All eigenvalues are positive.
struct KilledSpectral {
    std::vector<int> members;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd phi; // measure-orthonormal on the ball
    Eigen::VectorXd mu;  // measures of the members
    int local_index(int vertex) const;
};

KilledSpectral killed_decompose(const MeasuredNetwork& net, const ResistanceBall& ball);

/// P^x(exit time <= t) = 1 - sum_y p^B_t(x,y) mu(y). Rejects t < 0; starting
/// points outside the ball exit immediately (probability 1).
double exit_tail(const KilledSpectral& ks, int x, double t);
double exit_tail(const MeasuredNetwork& net, const ResistanceBall& ball, int x,
                 double t);

/// Survival probability P^x(exit time > t).
double exit_survival(const KilledSpectral& ks, int x, double t);

/// Integral of the survival probability over (0, infinity) by adaptive
/// quadrature on a logarithmic grid; equals the expected exit time (checked
/// against both direct routes in tests, 1e-4 relative).
double exit_time_by_quadrature(const KilledSpectral& ks, int x,
                               double rel_tol = 1e-5);

} // namespace resform
