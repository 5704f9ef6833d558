#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resform/network.hpp"
#include "resform/resistance.hpp"

namespace resform {

/// Ball masses V(x, r) over a shared radius grid. Values are right-continuous:
/// the entry at grid radius r is the mass of the component of {y : R(x,y) <= r}
/// containing x, i.e. the limit of open balls from above. Exact at every grid
/// radius; the grid is the sorted distinct resistance values, quantile-capped
/// when there are more than `grid_cap` of them.
struct VolumeProfile {
    std::vector<double> radii;
    Eigen::MatrixXd volumes; // (vertex, radius index) -> mass
    Eigen::VectorXd env_inf; // per radius, min over vertices
    Eigen::VectorXd env_sup;
    Eigen::VectorXd median_vol;
    double total_mass = 0.0;
    bool subsampled = false;
    int vertex_count() const { return static_cast<int>(volumes.rows()); }
    int radius_count() const { return static_cast<int>(radii.size()); }
};

VolumeProfile volume_profile(const MeasuredNetwork& net, const ResistanceMetric& m,
                             int grid_cap = 512);

/// CSV rows: vertex,r,V.
void save_profile_csv(const VolumeProfile& p, const MeasuredNetwork& net,
                      const std::string& path);

enum class EnvelopeFamily { Uniform, Polynomial, Logarithmic, Auto };

const char* family_name(EnvelopeFamily f);
EnvelopeFamily family_from_name(const std::string& s);

/// Power-law volume model V(r) = v0 * r^alpha with fluctuation envelopes:
///   c_l * f_l(r) * V(r) <= V(x,r) <= c_u * f_u(r) * V(r)  on the window,
/// f_l <= 1 <= f_u, f_l non-decreasing, f_u non-increasing, c_l <= 1 <= c_u.
/// The prefactor v0 carries the measured mass scale: the time-scale function
/// h(r) = r V(r) must be in real mass units or every t-grid built from it
/// lands a factor v0 away from the kernel's actual power-law regime.
/// Families: uniform f == 1; polynomial f_l = (r/r_ref)^delta and its
/// reciprocal; logarithmic f_l = ln(r_scale/r)^{-a1}, f_u = ln(r_scale/r)^{a2}.
struct FluctuationModel {
    double alpha = 1.0;
    double v0 = 1.0; // volume prefactor (regression intercept)
    EnvelopeFamily family = EnvelopeFamily::Uniform;
    double delta = 0.0;   // polynomial
    double a1 = 0.0;      // logarithmic lower exponent
    double a2 = 0.0;      // logarithmic upper exponent
    double r_ref = 1.0;   // polynomial pivot (window top)
    double r_scale = 0.0; // logarithmic pivot (= e * window top)
    double c_l = 1.0, c_u = 1.0;
    double r_min = 0.0, r_max = 0.0; // fitted validity window
    double b = 0.0, eps = 0.0, r0 = 0.0;
    double beta_u = 1.0, beta_l = 1.0; // doubling exponents; = alpha exactly here
    double alpha_rms = 0.0, env_rms_l = 0.0, env_rms_u = 0.0;
    std::vector<std::string> warnings;

    double f_l(double r) const;
    double f_u(double r) const;
    double V(double r) const;   // v0 r^alpha
    double V_l(double r) const; // c_l f_l V
    double V_u(double r) const;
    /// Effective envelope ratio g = V_l / V_u; non-decreasing and <= 1.
    double g(double r) const;
};

struct FitOptions {
    std::optional<double> r_min_override;
    std::optional<double> r_max_override;
    std::optional<double> alpha_override; // pin alpha (e.g. fit a single-vertex
                                          // curve against the global exponent)
    double mass_cap_fraction = 0.5; // window top also capped where the median
                                    // ball holds this fraction of total mass
};

/// Fits alpha on the interior window (top 20% of radii dropped, radii below
/// the second-smallest breakpoint dropped, median-mass cap applied), then the
/// requested envelope family. Family Auto picks uniform for flat envelopes and
/// otherwise the lower-residual of polynomial/logarithmic.
FluctuationModel fit_model(const VolumeProfile& p, EnvelopeFamily family,
                           const FitOptions& opts = {});

std::string model_to_json_text(const FluctuationModel& m);
FluctuationModel model_from_json_text(const std::string& text);

/// Derived scale functions of a model:
///   h(r) = r V(r), h_l = r V_l, h_u = r V_u,
///   q(r) = c_q (c_l f_l)^{2 gamma1} (c_u f_u)^{1-2 gamma1} V(r),
/// with gamma1 = 3 + 2b + 2 beta_u. All strictly increasing on the domain;
/// inverses by monotone bisection to 1e-12 relative, clamped to the domain.
struct ScaleFunctions {
    FluctuationModel model;
    double gamma1 = 0.0;
    double c_q = 1.0;
    double dom_lo = 0.0, dom_hi = 0.0;

    double h(double r) const;
    double h_l(double r) const;
    double h_u(double r) const;
    double q(double r) const;
    double h_inv(double t) const; // closed form (t/v0)^{1/(1+alpha)}
    double h_l_inv(double t) const;
    double h_u_inv(double t) const;
    double q_inv(double t) const;
    double V_inv(double s) const; // closed form (s/v0)^{1/alpha}
};

ScaleFunctions eval_scale(const FluctuationModel& m, double c_q = 1.0);

/// Doubling / envelope-regularity checks on a grid, with the tightest
/// constants that make each comparison hold.
struct ScalingReport {
    bool pass = true;
    std::vector<std::string> violations;
    double doubling_constant = 0.0;     // sup V(2r)/(2^{beta_u} V(r)), = 1 here
    double anti_doubling_constant = 0.0;
    double env_l_constant = 0.0; // inf f_l(lambda r) / (lambda^b f_l(r))
    double env_g_constant = 0.0; // inf g(lambda r) / (lambda^{2b} g(r))
    double slope_fu = 0.0;       // log f_u vs log(1/r); must be <= eps + slack
    double slope_fl_inv = 0.0;
    double slope_g_inv = 0.0; // must be <= 2 eps + slack
    bool concavity_ok = true; // f_l^{1/b}, f_u^{-1/b} concave below r0
    bool normalized_ok = true;
};

ScalingReport scaling_checks(const FluctuationModel& m, double slack = 0.05);

} // namespace resform
