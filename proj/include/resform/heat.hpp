#pragma once

#include <vector>

#include <Eigen/Dense>

#include "resform/network.hpp"

namespace resform {

/// Eigensystem of the measure-symmetrized conductance Laplacian.
/// Columns of `phi` are orthonormal in l2(measure); eigenvalues ascend and
/// eigenvalue 0 carries the exactly-constant eigenfunction, so semigroup mass
/// is conserved to machine precision.
struct SpectralDecomposition {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd phi; // column k = eigenfunction k
    Eigen::VectorXd mu;
    double total_mass = 0.0;
    int size() const { return static_cast<int>(mu.size()); }
};

/// Dense symmetric eigendecomposition; refuses networks beyond ~3000 vertices
/// (cubic cost, desk scale only). Eigenpair residuals are checked relative to
/// the spectral radius.
SpectralDecomposition spectral_decompose(const MeasuredNetwork& net);

/// Transition density p_t(x,y) with respect to the vertex measure:
/// sum_k exp(-lambda_k t) phi_k(x) phi_k(y). Rejects t <= 0.
double heat_kernel(const SpectralDecomposition& dec, double t, int x, int y);

/// All diagonal values p_t(x,x) at once.
Eigen::VectorXd heat_kernel_diagonal(const SpectralDecomposition& dec, double t);

/// Full kernel matrix at time t (n x n; use only at desk scale).
Eigen::MatrixXd heat_kernel_matrix(const SpectralDecomposition& dec, double t);

/// Semigroup action P_t f; accepts t >= 0 (t = 0 is the identity).
VertexFunction semigroup_apply(const SpectralDecomposition& dec, double t,
                               const VertexFunction& f);

/// Smallest constants gamma(t) with ||P_t f||_2 <= gamma(t) ||f||_1 over a
/// time grid. On a finite space the optimum equals max_x sqrt(p_{2t}(x,x)),
/// which we cross-check against the direct search over scaled indicators.
struct UltracontractivityPoint {
    double t;
    double gamma;        // max_x sqrt(p_{2t}(x,x))
    double gamma_direct; // best indicator test function
};

std::vector<UltracontractivityPoint> ultracontractivity_profile(
    const SpectralDecomposition& dec, const std::vector<double>& times);

/// Energy-vs-diagonal inequality: E(p_t(x,.), p_t(x,.)) <= p_t(x,x) / t.
/// Holds termwise for any finite spectrum; a violation is a hard failure.
struct KernelEnergyReport {
    double energy;
    double bound;
    bool ok;
};

KernelEnergyReport kernel_energy_check(const MeasuredNetwork& net,
                                       const SpectralDecomposition& dec, double t,
                                       int x);

/// CSV rows (t, x, y, p) for the given times over all pairs in `pairs`.
void save_kernel_csv(const SpectralDecomposition& dec, const MeasuredNetwork& net,
                     const std::vector<double>& times,
                     const std::vector<std::pair<int, int>>& pairs,
                     const std::string& path);

} // namespace resform
