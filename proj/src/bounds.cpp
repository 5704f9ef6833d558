#include "resform/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "resform/errors.hpp"
#include "resform/exits.hpp"

namespace resform {
namespace {

using json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Extremum {
    double value = 0.0;
    double t = 0.0;
    int x = -1, y = -1;
};

void track_min(Extremum& e, double v, double t, int x, int y = -1) {
    if (e.x < 0 || v < e.value) e = {v, t, x, y};
}
void track_max(Extremum& e, double v, double t, int x, int y = -1) {
    if (e.x < 0 || v > e.value) e = {v, t, x, y};
}

json witness(const std::string& kind, const Extremum& e) {
    json w;
    w["kind"] = kind;
    w["value"] = e.value;
    w["t"] = e.t;
    w["vertex_index"] = e.x;
    if (e.y >= 0) w["other_index"] = e.y;
    return w;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 3) return kNaN;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return kNaN;
    return sxy / std::sqrt(sxx * syy);
}

struct SlopeFit {
    double slope = kNaN;
    int points = 0;
};

SlopeFit log_slope(const std::vector<double>& t, const std::vector<double>& v) {
    SlopeFit f;
    std::vector<double> lx, ly;
    for (size_t i = 0; i < t.size(); ++i)
        if (v[i] > 0) {
            lx.push_back(std::log(t[i]));
            ly.push_back(std::log(v[i]));
        }
    f.points = static_cast<int>(lx.size());
    if (f.points < 4) return f;
    double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / f.points;
    double my = std::accumulate(ly.begin(), ly.end(), 0.0) / f.points;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < f.points; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx > 0) f.slope = sxy / sxx;
    return f;
}

double median_of_vector(Eigen::VectorXd v) {
    std::vector<double> w(v.data(), v.data() + v.size());
    size_t n = w.size();
    auto mid = w.begin() + n / 2;
    std::nth_element(w.begin(), mid, w.end());
    if (n % 2 == 1) return *mid;
    double hi = *mid;
    double lo = *std::max_element(w.begin(), w.begin() + n / 2);
    return 0.5 * (lo + hi);
}

/// Deterministic pair sample: all pairs sorted by resistance, then evenly
/// spaced ranks.
std::vector<std::pair<int, int>> pair_sample(const ResistanceMetric& m,
                                             int count) {
    const int n = static_cast<int>(m.d.rows());
    std::vector<std::tuple<double, int, int>> all;
    all.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) all.emplace_back(m.d(i, j), i, j);
    std::sort(all.begin(), all.end());
    std::vector<std::pair<int, int>> out;
    if (all.empty()) return out;
    int take = std::min<int>(count, static_cast<int>(all.size()));
    for (int k = 0; k < take; ++k) {
        size_t idx = static_cast<size_t>(std::llround(
            static_cast<double>(k) * (all.size() - 1) / std::max(1, take - 1)));
        auto [r, i, j] = all[idx];
        if (out.empty() || out.back() != std::make_pair(i, j))
            out.emplace_back(i, j);
    }
    return out;
}

} // namespace

ExponentSet derive_exponents(const FluctuationModel& m, BoundMode mode,
                             double slack, ExponentPolicy policy,
                             bool allow_clamp) {
    if (!(m.alpha > 0)) throw ValidationError("model alpha must be positive");
    if (!(slack >= 0)) throw ValidationError("slack must be non-negative");
    ExponentSet e;
    e.mode = (mode == BoundMode::OnDiag) ? "ondiag" : "offdiag";
    e.policy = (policy == ExponentPolicy::Slack) ? "slack" : "reference";
    e.alpha = m.alpha;
    e.beta_u = m.beta_u;
    e.beta_l = m.beta_l;
    e.b_model = m.b;
    e.eps_model = m.eps;
    e.slack = slack;

    e.cap = (mode == BoundMode::OnDiag)
                ? 1.0 / (4.0 * (2.0 + e.beta_u))
                : e.beta_l / (8.0 * (2.0 + e.beta_u) * (2.0 + e.beta_u));
    e.b = m.b;
    e.eps = m.eps;
    if (m.b >= e.cap || m.eps >= e.cap) {
        std::ostringstream msg;
        msg << "infeasible (b,eps): b=" << m.b << ", eps=" << m.eps
            << " must both be < " << e.cap << " ("
            << (mode == BoundMode::OnDiag ? "1/(4(2+beta_u))"
                                          : "beta_l/(8(2+beta_u)^2)")
            << ")";
        if (!allow_clamp) throw InfeasibleError(msg.str());
        // Substitute a feasible point deep inside the cap rather than hugging
        // it: near the cap the theta1 window degenerates (its denominator
        // 1 - 2b(3+2b+2beta_u) approaches zero), which inflates every derived
        // exponent and pushes the certified constants out of double range.
        e.clamped = true;
        e.b = std::min(m.b, 0.05 * e.cap);
        e.eps = std::min(m.eps, 0.05 * e.cap);
        e.notes.push_back("fluctuation exponents clamped to 5% of the cap: " +
                          msg.str());
    }

    e.gamma1 = 3.0 + 2.0 * e.b + 2.0 * e.beta_u;
    double denom1 = 1.0 - 2.0 * e.b * e.gamma1;
    if (denom1 <= 0)
        throw InfeasibleError("infeasible (b,eps): 1 - 2 b (3+2b+2 beta_u) <= 0");
    e.theta1_lower = e.gamma1 * (2.0 + e.beta_u) / denom1;
    double bmax = std::max(e.b, e.eps);
    e.theta1_upper = (mode == BoundMode::OffDiag && bmax > 0)
                         ? e.beta_l / (2.0 * bmax)
                         : kInf;

    if (policy == ExponentPolicy::Slack) {
        e.theta1 = e.theta1_lower * (1.0 + slack);
    } else {
        e.theta1 = 4.0 * (2.0 + e.beta_u) * (2.0 + e.beta_u);
        if (e.theta1 <= e.theta1_lower)
            e.notes.push_back("reference theta1 is below the strict lower bound "
                              "for these exponents");
    }
    if (e.theta1 >= e.theta1_upper) {
        std::ostringstream msg;
        msg << "infeasible (b,eps): theta1=" << e.theta1
            << " violates theta1 < beta_l/(2b) ^ beta_l/(2eps) = "
            << e.theta1_upper;
        throw InfeasibleError(msg.str());
    }

    double denom2 = e.beta_l - 2.0 * e.b * e.theta1;
    if (denom2 > 0) {
        e.theta2_lower = e.theta1 * (1.0 + e.beta_l) / denom2;
        e.theta2 = (policy == ExponentPolicy::Slack)
                       ? e.theta2_lower * (1.0 + slack)
                       : e.theta1 * (2.0 + e.beta_u) / denom2;
    } else {
        if (mode == BoundMode::OffDiag)
            throw InfeasibleError(
                "infeasible (b,eps): beta_l - 2 b theta1 <= 0, so no theta2 "
                "satisfies its lower bound");
        e.theta2_lower = kNaN;
        e.theta2 = kNaN;
        e.notes.push_back(
            "theta2 undefined (beta_l <= 2 b theta1); on-diagonal bounds "
            "do not use it");
    }

    e.theta3 = e.gamma1 * (1.0 + 2.0 / e.beta_l);
    e.gamma2 = (e.theta1 - 2.0 * e.gamma1) / (e.beta_u + 4.0 * e.b * e.gamma1);
    if (e.gamma2 <= 0)
        e.notes.push_back("gamma2 is not positive; on-diagonal lower bound "
                          "degenerates at this theta1");
    return e;
}

std::string exponents_to_json_text(const ExponentSet& e) {
    json j;
    j["mode"] = e.mode;
    j["policy"] = e.policy;
    j["alpha"] = e.alpha;
    j["beta_u"] = e.beta_u;
    j["beta_l"] = e.beta_l;
    j["b_model"] = e.b_model;
    j["eps_model"] = e.eps_model;
    j["b"] = e.b;
    j["eps"] = e.eps;
    j["clamped"] = e.clamped;
    j["cap"] = e.cap;
    j["slack"] = e.slack;
    j["gamma1"] = e.gamma1;
    j["gamma2"] = e.gamma2;
    j["theta1"] = e.theta1;
    j["theta2"] = e.theta2;
    j["theta3"] = e.theta3;
    j["theta1_lower"] = e.theta1_lower;
    j["theta1_upper"] =
        std::isfinite(e.theta1_upper) ? json(e.theta1_upper) : json("inf");
    j["theta2_lower"] = e.theta2_lower;
    j["notes"] = e.notes;
    return j.dump(2) + "\n";
}

namespace {
json json_num(double v) {
    if (std::isnan(v)) return json("nan");
    if (std::isinf(v)) return json(v > 0 ? "inf" : "-inf");
    return json(v);
}
} // namespace

std::string certificate_to_json_text(const Certificate& c) {
    json j;
    j["bound_id"] = c.bound_id;
    j["verdict"] = c.verdict;
    j["grid"] = c.grid;
    j["constants"] = json::object();
    for (const auto& [k, v] : c.constants) j["constants"][k] = json_num(v);
    j["metrics"] = json::object();
    for (const auto& [k, v] : c.metrics) j["metrics"][k] = json_num(v);
    j["ratio_min"] = json_num(c.ratio_min);
    j["ratio_max"] = json_num(c.ratio_max);
    j["notes"] = c.notes;
    j["witnesses"] = c.witnesses;
    return j.dump(2) + "\n";
}

std::vector<double> time_grid(const ScaleFunctions& s, int points) {
    if (points < 2) throw ValidationError("time grid needs at least 2 points");
    double t_lo = s.h(s.model.r_min);
    double t_hi = s.h(s.model.r_max / 2.0);
    if (!(t_lo < t_hi))
        throw WindowError("time window is empty: h(r_min) >= h(r_max/2)");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = t_lo * std::pow(t_hi / t_lo, double(i) / (points - 1));
    return g;
}

TimeWindow middle_decade(const std::vector<double>& grid) {
    if (grid.empty()) throw ValidationError("empty time grid");
    double lo = std::log10(grid.front()), hi = std::log10(grid.back());
    double c = 0.5 * (lo + hi);
    return {std::pow(10.0, std::max(lo, c - 0.5)),
            std::pow(10.0, std::min(hi, c + 0.5))};
}

TimeWindow lowest_decade(const std::vector<double>& grid) {
    if (grid.empty()) throw ValidationError("empty time grid");
    return {grid.front(), std::min(grid.back(), grid.front() * 10.0)};
}

ChainPlan chain_count(const ResistanceMetric& m, const ScaleFunctions& s,
                      const ExponentSet& e, int x, int y, double t, double c) {
    const int n = static_cast<int>(m.d.rows());
    if (x < 0 || x >= n || y < 0 || y >= n)
        throw ValidationError("chain_count: vertex index out of range");
    if (x == y) throw ValidationError("chain_count needs x != y");
    if (!(t > 0)) throw ValidationError("chain_count needs t > 0");
    ChainPlan plan;
    plan.x = x;
    plan.y = y;
    plan.t = t;
    plan.c = c;
    const double R = m.d(x, y);
    const long long cap = 10LL * n;
    for (long long k = 1;; ++k) {
        double r = s.h_inv(t / double(k));
        double rhs = c * r * std::pow(s.model.g(r), e.theta1);
        if (R / double(k) <= rhs) {
            plan.N = static_cast<int>(k);
            break;
        }
        if (k > cap)
            throw WindowError(
                "window too small: chain count exceeds 10x vertex count "
                "(finite-graph artifact)");
    }
    if (plan.N <= 64) {
        ChainProbe probe = chaining_probe(m, x, y, plan.N);
        plan.chain = probe.chain;
        for (size_t i = 1; i < plan.chain.size(); ++i)
            plan.segment_resistances.push_back(
                m.d(plan.chain[i - 1], plan.chain[i]));
    }
    return plan;
}

Certificate certify_ondiag(const SpectralDecomposition& dec,
                           const ScaleFunctions& s, const ExponentSet& e) {
    Certificate cert;
    cert.bound_id = "ondiag";
    std::vector<double> grid = time_grid(s);
    const int n = dec.size();
    std::ostringstream gdesc;
    gdesc << grid.size() << " log-spaced t with h^{-1}(t) in [" << s.model.r_min
          << ", " << s.model.r_max / 2.0 << "], all " << n << " vertices";
    cert.grid = gdesc.str();

    Extremum c1_at, c2_at, c3_at;
    double c1 = kInf, c2 = 0.0, c3 = 0.0;
    double rmin_ratio = kInf, rmax_ratio = 0.0;
    std::vector<double> med_t, med_v;

    for (double t : grid) {
        Eigen::VectorXd diag = heat_kernel_diagonal(dec, t);
        double r = s.h_inv(t);
        // g(r)^theta1 can underflow to zero long before the ratio p/scale
        // leaves double range, so keep the lower form in log space.
        double log_lower =
            std::log(r) - std::log(t) + e.theta1 * std::log(s.model.g(r));
        double upper_scale = s.h_l_inv(t) / t;
        double weak_scale = (r / t) / (s.model.c_l * s.model.f_l(r));
        for (int x = 0; x < n; ++x) {
            double p = diag[x];
            double rlo = std::exp(std::log(p) - log_lower);
            double rup = p / upper_scale;
            double rweak = p / weak_scale;
            if (rlo < c1) track_min(c1_at, rlo, t, x);
            c1 = std::min(c1, rlo);
            if (rup > c2) track_max(c2_at, rup, t, x);
            c2 = std::max(c2, rup);
            if (rweak > c3) track_max(c3_at, rweak, t, x);
            c3 = std::max(c3, rweak);
            rmin_ratio = std::min(rmin_ratio, rlo);
            rmax_ratio = std::max(rmax_ratio, rlo);
        }
        med_t.push_back(t);
        med_v.push_back(median_of_vector(diag));
    }

    cert.constants["c1"] = c1;
    cert.constants["c2"] = c2;
    cert.constants["c3"] = c3;
    cert.constants["spread"] = c2 / c1;
    cert.ratio_min = rmin_ratio;
    cert.ratio_max = rmax_ratio;

    // Log-log slope of the raw median diagonal over the middle decade;
    // prediction is -alpha/(1+alpha). The slope is taken on p itself, not
    // p minus its equilibrium share: subtracting a constant from a power law
    // steepens the log-log slope wherever p is within a small factor of it.
    TimeWindow mid = middle_decade(grid);
    std::vector<double> st, sv;
    for (size_t i = 0; i < med_t.size(); ++i)
        if (med_t[i] >= mid.lo && med_t[i] <= mid.hi) {
            st.push_back(med_t[i]);
            sv.push_back(med_v[i]);
        }
    SlopeFit slope = log_slope(st, sv);
    cert.metrics["slope_mid_decade"] = slope.slope;
    cert.metrics["slope_points"] = slope.points;
    cert.metrics["slope_prediction"] = -e.alpha / (1.0 + e.alpha);
    if (slope.points < 4)
        cert.notes.push_back(
            "middle-decade slope skipped: fewer than 4 positive medians");
    cert.notes.push_back(
        "ratio_min/ratio_max are for the lower form t p / (h^{-1} g^{theta1})");

    cert.witnesses.push_back(witness("c1_argmin", c1_at));
    cert.witnesses.push_back(witness("c2_argmax", c2_at));
    cert.witnesses.push_back(witness("c3_argmax", c3_at));
    cert.verdict = (c1 > 0 && std::isfinite(c1) && std::isfinite(c2)) ? "holds"
                                                                      : "violated";
    return cert;
}

Certificate certify_exit_tail(const MeasuredNetwork& net,
                              const ResistanceMetric& m,
                              const ScaleFunctions& s, const ExponentSet& e) {
    Certificate cert;
    cert.bound_id = "exit_tail";
    const int n = net.size();
    const FluctuationModel& model = s.model;

    // Ball grid: a few spread-out centers, a few realized breakpoint radii per
    // center inside the fit window. Realized radii make the open ball's
    // escape resistance <= r exact.
    std::vector<int> centers;
    for (int k = 0; k < 6; ++k) {
        int idx = static_cast<int>(std::llround(k * double(n - 1) / 5.0));
        if (centers.empty() || centers.back() != idx) centers.push_back(idx);
    }

    struct BallPoint {
        int x;
        double r;
        ResistanceBall ball;
        double et;
        KilledSpectral ks;
    };
    std::vector<BallPoint> balls;
    for (int x : centers) {
        std::vector<double> dists;
        for (int y = 0; y < n; ++y) {
            double d = m.d(x, y);
            if (d >= model.r_min && d <= model.r_max / 2.0) dists.push_back(d);
        }
        std::sort(dists.begin(), dists.end());
        dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
        if (dists.empty()) continue;
        int take = std::min<size_t>(4, dists.size());
        for (int k = 0; k < take; ++k) {
            size_t idx = static_cast<size_t>(std::llround(
                k * double(dists.size() - 1) / std::max(1, take - 1)));
            double r = dists[idx];
            ResistanceBall ball = resistance_ball(net, m, x, r);
            if (ball.members.size() == static_cast<size_t>(n)) continue;
            double et = expected_exit_time(net, ball, x);
            balls.push_back({x, r, ball, et, killed_decompose(net, ball)});
        }
    }
    if (balls.empty())
        throw WindowError("exit-tail grid is empty: no ball radius in the fit "
                          "window leaves a non-trivial complement");

    std::ostringstream gdesc;
    gdesc << balls.size() << " balls at realized radii in [" << model.r_min
          << ", " << model.r_max / 2.0 << "], 8 log-spaced t around E^xT each";
    cert.grid = gdesc.str();

    // Exit-time sandwich and the linear-bound constant feeding c_q.
    double c_lo = kInf, c_up = 0.0, c4 = kInf, c_res = kInf, min_escape = kInf;
    Extremum lo_at, up_at;
    for (const auto& bp : balls) {
        double gr = model.g(bp.r);
        double hl = s.h_l(bp.r * gr * gr);
        double hu = s.h_u(bp.r);
        double rlo = bp.et / hl;
        double rup = bp.et / hu;
        if (rlo < c_lo) track_min(lo_at, rlo, bp.r, bp.x);
        c_lo = std::min(c_lo, rlo);
        if (rup > c_up) track_max(up_at, rup, bp.r, bp.x);
        c_up = std::max(c_up, rup);
        double linear = bp.et / (bp.r * std::pow(gr, 2.0 * (1.0 + e.b + e.beta_u)) *
                                 model.V_l(bp.r));
        c4 = std::min(c4, linear);
        double esc = escape_resistance(net, m, bp.ball);
        min_escape = std::min(min_escape, esc / bp.r);
        c_res = std::min(c_res, esc / (bp.r * gr * gr));
    }
    c4 = std::min(c4, 0.5);
    double c_q = c4 * c4 / 64.0;
    ScaleFunctions sq = eval_scale(model, c_q);

    // Tail fits with c1 pinned at 2: the smallest pointwise
    // (ln c1 - ln P)/exponent over the grid is the certified decay rate.
    const double c1 = 2.0;
    double c2_q = kInf, c2_V = kInf;
    double rmin = kInf, rmax = 0.0;
    int skipped_zero = 0, points = 0;
    Extremum q_at, v_at;
    for (const auto& bp : balls) {
        for (int k = 0; k < 8; ++k) {
            double t = bp.et * std::pow(10.0, -2.0 + 2.5 * k / 7.0);
            double P = exit_tail(bp.ks, bp.x, t);
            ++points;
            if (P <= 0) {
                ++skipped_zero;
                continue;
            }
            rmin = std::min(rmin, P);
            rmax = std::max(rmax, P);
            double rq = sq.q_inv(t / bp.r);
            double Eq = (bp.r / rq) * std::pow(model.g(rq), e.gamma1);
            double rv = s.V_inv(t / bp.r);
            double Ev = (bp.r / rv) * std::pow(model.g(rv), e.theta3);
            double num = std::log(c1) - std::log(P);
            if (Eq > 0) {
                double cc = num / Eq;
                if (cc < c2_q) track_min(q_at, cc, t, bp.x);
                c2_q = std::min(c2_q, cc);
            }
            if (Ev > 0) {
                double cc = num / Ev;
                if (cc < c2_V) track_min(v_at, cc, t, bp.x);
                c2_V = std::min(c2_V, cc);
            }
        }
    }

    cert.constants["c1"] = c1;
    cert.constants["c2_q"] = c2_q;
    cert.constants["c2_V"] = c2_V;
    cert.constants["c_q"] = c_q;
    cert.constants["c4_linear"] = c4;
    cert.constants["sandwich_c_lo"] = c_lo;
    cert.constants["sandwich_c_up"] = c_up;
    cert.constants["sandwich_spread"] = c_up / c_lo;
    cert.constants["c_res"] = c_res;
    cert.metrics["min_escape_ratio"] = min_escape;
    cert.metrics["balls"] = static_cast<double>(balls.size());
    cert.metrics["tail_points"] = points;
    cert.metrics["tail_points_zero"] = skipped_zero;
    cert.ratio_min = rmin;
    cert.ratio_max = rmax;
    if (skipped_zero > 0)
        cert.notes.push_back("points with numerically zero tail probability "
                             "satisfy the bound trivially and were skipped");
    cert.notes.push_back("ratio_min/ratio_max are the raw tail probabilities "
                         "P^x(T <= t) over the grid");
    cert.witnesses.push_back(witness("sandwich_lower_argmin", lo_at));
    cert.witnesses.push_back(witness("sandwich_upper_argmax", up_at));
    if (q_at.x >= 0) cert.witnesses.push_back(witness("c2_q_argmin", q_at));
    if (v_at.x >= 0) cert.witnesses.push_back(witness("c2_V_argmin", v_at));
    cert.verdict =
        (c2_q > 0 && c2_V > 0 && c_lo > 0 && std::isfinite(c_up)) ? "holds"
                                                                  : "violated";
    return cert;
}

Certificate certify_neardiag(const SpectralDecomposition& dec,
                             const ResistanceMetric& m, const ScaleFunctions& s,
                             const ExponentSet& e) {
    Certificate cert;
    cert.bound_id = "neardiag";
    // Extended grid up to h(r_max): the 4R <= t p_t(x,x) qualifier needs the
    // larger times before any pair can satisfy it, and h^{-1}(t) stays inside
    // the fitted window.
    const double t_lo = s.h(s.model.r_min), t_hi = s.h(s.model.r_max);
    if (!(t_lo < t_hi)) throw WindowError("time window is empty");
    std::vector<double> grid(12);
    for (int i = 0; i < 12; ++i)
        grid[i] = t_lo * std::pow(t_hi / t_lo, i / 11.0);
    const int n = dec.size();
    std::ostringstream gdesc;
    gdesc << grid.size()
          << " t values, all ordered pairs with 4 R(x,y) <= t p_t(x,x)";
    cert.grid = gdesc.str();

    long long qualifying = 0, violations = 0;
    double c_prime = kInf, reach = 0.0;
    double rmin = kInf, rmax = 0.0;
    Extremum cp_at, viol_at;
    for (double t : grid) {
        Eigen::MatrixXd P = heat_kernel_matrix(dec, t);
        double r = s.h_inv(t);
        double scale = (r / t) * std::pow(s.model.g(r), e.theta1);
        for (int x = 0; x < n; ++x) {
            double pxx = P(x, x);
            for (int y = 0; y < n; ++y) {
                double R = m.d(x, y);
                if (4.0 * R > t * pxx) continue;
                ++qualifying;
                double pxy = P(x, y);
                // The modulus-of-continuity mechanism is exact here:
                // |p(x,x)-p(x,y)|^2 <= R E(p_t(x,.)) <= R p(x,x)/t.
                if (pxy < 0.5 * pxx * (1.0 - 1e-9)) {
                    ++violations;
                    track_min(viol_at, pxy / pxx, t, x, y);
                }
                double ratio = pxy / scale;
                if (ratio < c_prime) track_min(cp_at, ratio, t, x, y);
                c_prime = std::min(c_prime, ratio);
                rmin = std::min(rmin, ratio);
                rmax = std::max(rmax, ratio);
                reach = std::max(reach, R / (r * std::pow(s.model.g(r), e.theta1)));
            }
        }
    }
    cert.constants["c_prime"] = c_prime;
    cert.constants["half_rule_violations"] = static_cast<double>(violations);
    cert.metrics["qualifying_pairs"] = static_cast<double>(qualifying);
    cert.metrics["qualifying_reach"] = reach;
    cert.ratio_min = rmin;
    cert.ratio_max = rmax;
    cert.notes.push_back("qualifying_reach is max R/(h^{-1} g^{theta1}) over "
                         "qualifying pairs; pairs beyond the window are "
                         "excluded by the 4R <= t p(x,x) rule");
    if (cp_at.x >= 0) cert.witnesses.push_back(witness("c_prime_argmin", cp_at));
    if (violations > 0)
        cert.witnesses.push_back(witness("half_rule_worst", viol_at));
    if (qualifying == 0) {
        cert.notes.push_back("no pair qualifies in this window; the bound "
                             "holds vacuously");
        cert.verdict = "holds";
    } else {
        cert.verdict = (violations == 0 && c_prime > 0) ? "holds" : "violated";
    }
    return cert;
}

Certificate certify_offdiag(const SpectralDecomposition& dec,
                            const ResistanceMetric& m, const ScaleFunctions& s,
                            const ExponentSet& e, const ChainingReport& cc) {
    Certificate cert;
    cert.bound_id = "offdiag";
    std::vector<double> grid = time_grid(s, 12);
    std::vector<std::pair<int, int>> pairs = pair_sample(m, 24);
    if (pairs.empty()) throw WindowError("off-diagonal grid has no pairs");
    std::ostringstream gdesc;
    gdesc << grid.size() << " t values x " << pairs.size()
          << " resistance-ranked pairs";
    cert.grid = gdesc.str();

    struct Point {
        double t, R, p, pxx, pyy;
        int x, y;
    };
    std::vector<Point> pts;
    for (double t : grid) {
        Eigen::VectorXd diag = heat_kernel_diagonal(dec, t);
        for (auto [x, y] : pairs)
            pts.push_back(
                {t, m.d(x, y), heat_kernel(dec, t, x, y), diag[x], diag[y], x, y});
    }

    // Upper bound: prefactor constant doubled so the decay fit is strictly
    // positive, then the decay rate is the worst pointwise slack.
    double max_rho_up = 0.0;
    for (const auto& pt : pts) {
        if (pt.p <= 0) continue;
        double r = s.h_inv(pt.t);
        double base = (r / pt.t) / (s.model.c_l * s.model.f_l(r));
        max_rho_up = std::max(max_rho_up, pt.p / base);
    }
    if (max_rho_up <= 0)
        throw WindowError("all off-diagonal kernel values are at or below the "
                          "numerical floor");
    const double c1_up = 2.0 * max_rho_up;
    double c2_up = kInf;
    Extremum up_at;
    for (const auto& pt : pts) {
        if (pt.p <= 0) continue;
        double r = s.h_inv(pt.t);
        double base = (r / pt.t) / (s.model.c_l * s.model.f_l(r));
        double rv = s.V_inv(pt.t / pt.R);
        double Ev = (pt.R / rv) * std::pow(s.model.g(rv), e.theta3);
        if (Ev <= 0) continue;
        double slack = (std::log(c1_up) - std::log(pt.p / base)) / Ev;
        if (slack < c2_up) track_max(up_at, -slack, pt.t, pt.x, pt.y);
        c2_up = std::min(c2_up, slack);
    }

    // Lower bound (needs the chaining condition): prefactor halved below the
    // least observed ratio, decay rate the largest pointwise requirement.
    double c3_lo = kNaN, c4_lo = kNaN;
    int below_floor = 0;
    if (cc.pass) {
        double min_rho = kInf;
        for (const auto& pt : pts) {
            double floor = 1e-12 * std::sqrt(std::max(pt.pxx * pt.pyy, 0.0));
            if (pt.p <= floor) {
                ++below_floor;
                continue;
            }
            double r = s.h_inv(pt.t);
            double base = (r / pt.t) * std::pow(s.model.g(r), e.theta1);
            min_rho = std::min(min_rho, pt.p / base);
        }
        if (std::isfinite(min_rho) && min_rho > 0) {
            c3_lo = 0.5 * min_rho;
            c4_lo = 0.0;
            for (const auto& pt : pts) {
                double floor = 1e-12 * std::sqrt(std::max(pt.pxx * pt.pyy, 0.0));
                if (pt.p <= floor) continue;
                double r = s.h_inv(pt.t);
                double base = (r / pt.t) * std::pow(s.model.g(r), e.theta1);
                double rv = s.V_inv(pt.t / pt.R);
                double El = (pt.R / rv) * std::pow(s.model.g(rv), -e.theta2);
                if (El <= 0) continue;
                c4_lo = std::max(c4_lo,
                                 (std::log(c3_lo) - std::log(pt.p / base)) / El);
            }
        }
    } else {
        cert.notes.push_back("chaining probe failed: lower bound skipped (the "
                             "upper bound needs no chaining condition)");
    }

    // Shape metric: in the middle decade, log p against (R^{1+alpha}/t)^{1/alpha}
    // should be close to linear when the volume is a clean power law.
    TimeWindow mid = middle_decade(grid);
    std::vector<double> xi, eta;
    for (const auto& pt : pts) {
        if (pt.t < mid.lo || pt.t > mid.hi) continue;
        double floor = 1e-10 * std::sqrt(std::max(pt.pxx * pt.pyy, 0.0));
        if (pt.p <= floor) continue;
        double r = s.h_inv(pt.t);
        xi.push_back(std::pow(std::pow(pt.R, 1.0 + e.alpha) / pt.t, 1.0 / e.alpha));
        eta.push_back(std::log(pt.p) - std::log(r / pt.t));
    }
    cert.metrics["shape_correlation"] = pearson(xi, eta);
    cert.metrics["shape_points"] = static_cast<double>(xi.size());

    // Chain plans at a few sample points.
    json chains = json::array();
    int attached = 0;
    for (double t : {grid.front(), grid[grid.size() / 2], grid.back()}) {
        const auto& [x, y] = pairs.back();
        try {
            ChainPlan plan = chain_count(m, s, e, x, y, t);
            json c;
            c["t"] = t;
            c["x_index"] = x;
            c["y_index"] = y;
            c["N"] = plan.N;
            chains.push_back(c);
            ++attached;
        } catch (const WindowError& err) {
            json c;
            c["t"] = t;
            c["error"] = err.what();
            chains.push_back(c);
        }
    }
    cert.witnesses.push_back({{"kind", "chain_plans"}, {"plans", chains}});
    cert.metrics["chain_plans_attached"] = attached;

    cert.constants["c1_upper"] = c1_up;
    cert.constants["c2_upper"] = c2_up;
    cert.constants["c3_lower"] = c3_lo;
    cert.constants["c4_lower"] = c4_lo;
    cert.metrics["points"] = static_cast<double>(pts.size());
    cert.metrics["points_below_floor"] = below_floor;
    double rmin = kInf, rmax = 0.0;
    for (const auto& pt : pts)
        if (pt.p > 0) {
            double r = s.h_inv(pt.t);
            double base = (r / pt.t) / (s.model.c_l * s.model.f_l(r));
            rmin = std::min(rmin, pt.p / base);
            rmax = std::max(rmax, pt.p / base);
        }
    cert.ratio_min = rmin;
    cert.ratio_max = rmax;
    cert.notes.push_back("ratio_min/ratio_max are p/(h^{-1}(t)/t f_l^{-1}) "
                         "prefactor ratios over positive-kernel points");
    if (up_at.x >= 0) cert.witnesses.push_back(witness("c2_upper_argmin", up_at));

    bool upper_ok = std::isfinite(c1_up) && c1_up > 0 && std::isfinite(c2_up) &&
                    c2_up > 0;
    bool lower_ok = !cc.pass || (std::isfinite(c3_lo) && c3_lo > 0 &&
                                 std::isfinite(c4_lo) && c4_lo >= 0);
    cert.verdict = (upper_ok && lower_ok) ? "holds" : "violated";
    return cert;
}

Certificate certify_fluctuations(const SpectralDecomposition& dec,
                                 const VolumeProfile& p,
                                 const ScaleFunctions& s, const ExponentSet& e) {
    Certificate cert;
    cert.bound_id = "fluctuations";
    const FluctuationModel& model = s.model;

    // Empirical envelope hypotheses: inf_x V(x,r)/V_l(r) and
    // sup_x V(x,r)/V_u(r) bounded above and below across the window.
    double inf_lo = kInf, inf_hi = 0.0, sup_lo = kInf, sup_hi = 0.0;
    for (int gidx = 0; gidx < p.radius_count(); ++gidx) {
        double r = p.radii[gidx];
        if (r < model.r_min || r > model.r_max) continue;
        double a = p.env_inf[gidx] / model.V_l(r);
        double bb = p.env_sup[gidx] / model.V_u(r);
        inf_lo = std::min(inf_lo, a);
        inf_hi = std::max(inf_hi, a);
        sup_lo = std::min(sup_lo, bb);
        sup_hi = std::max(sup_hi, bb);
    }
    cert.constants["infcond_lo"] = inf_lo;
    cert.constants["infcond_hi"] = inf_hi;
    cert.constants["supcond_lo"] = sup_lo;
    cert.constants["supcond_hi"] = sup_hi;

    bool pre_ok = model.family != EnvelopeFamily::Uniform && inf_lo > 0 &&
                  std::isfinite(inf_hi) && sup_lo > 0 && std::isfinite(sup_hi);
    if (model.family == EnvelopeFamily::Uniform)
        cert.notes.push_back("uniform envelope family: V_u/V_l stays bounded, "
                             "so the fluctuation conclusions are degenerate");

    // Four one-sided conclusions over the lowest decade of the t-window.
    std::vector<double> grid = time_grid(s);
    TimeWindow low = lowest_decade(grid);
    std::ostringstream gdesc;
    gdesc << "t in the lowest decade [" << low.lo << ", " << low.hi << "] of a "
          << grid.size() << "-point window, extrema over all vertices";
    cert.grid = gdesc.str();

    double f1_lo = kInf, f1_hi = 0, f2_lo = kInf, f2_hi = 0;
    double f3_lo = kInf, f3_hi = 0, sep_lo = kInf, sep_hi = 0;
    int used = 0;
    for (double t : grid) {
        if (t < low.lo || t > low.hi) continue;
        ++used;
        Eigen::VectorXd diag = heat_kernel_diagonal(dec, t);
        double pmin = diag.minCoeff(), pmax = diag.maxCoeff();
        double r = s.h_inv(t);
        // g(r)^theta1 underflows long before the quotient leaves double
        // range, so assemble the quotient in log space.
        double f1 = std::exp(std::log(t) + std::log(pmin) - std::log(r) -
                             e.theta1 * std::log(model.g(r)));
        double f2 = t * pmin / s.h_u_inv(t);
        double f3 = t * pmax / s.h_l_inv(t);
        double sep = pmax / pmin;
        f1_lo = std::min(f1_lo, f1);
        f1_hi = std::max(f1_hi, f1);
        f2_lo = std::min(f2_lo, f2);
        f2_hi = std::max(f2_hi, f2);
        f3_lo = std::min(f3_lo, f3);
        f3_hi = std::max(f3_hi, f3);
        sep_lo = std::min(sep_lo, sep);
        sep_hi = std::max(sep_hi, sep);
    }

    cert.constants["inf_gtheta_lo"] = f1_lo;
    cert.constants["inf_gtheta_hi"] = f1_hi;
    cert.constants["inf_hu_lo"] = f2_lo;
    cert.constants["inf_hu_hi"] = f2_hi;
    cert.constants["sup_hl_lo"] = f3_lo;
    cert.constants["sup_hl_hi"] = f3_hi;
    cert.constants["separation_lo"] = sep_lo;
    cert.constants["separation_hi"] = sep_hi;
    cert.metrics["t_points_used"] = used;
    cert.metrics["envelope_spread_rmin"] =
        model.V_u(model.r_min) / model.V_l(model.r_min);
    cert.ratio_min = f1_lo;
    cert.ratio_max = f3_hi;
    cert.notes.push_back(
        "liminf/limsup are operationalized as min/max over the lowest decade");

    if (!pre_ok) {
        cert.verdict = "hypotheses_not_met";
        return cert;
    }
    bool ok = used > 0 && f1_lo > 0 && std::isfinite(f1_hi) &&
              std::isfinite(f2_hi) && f2_lo > 0 && f3_lo > 0 &&
              std::isfinite(f3_hi);
    cert.verdict = ok ? "holds" : "violated";
    return cert;
}

Certificate certify_local(const MeasuredNetwork& net,
                          const SpectralDecomposition& dec,
                          const ResistanceMetric& m, const VolumeProfile& p,
                          int x, const ScaleFunctions& s) {
    Certificate cert;
    cert.bound_id = "local";
    const int n = net.size();
    if (x < 0 || x >= n) throw ValidationError("local vertex index out of range");
    const FluctuationModel& global = s.model;

    // Local envelope fit: reuse the model fitter on the single-vertex volume
    // curve, pinning alpha and the window to the global fit.
    VolumeProfile loc;
    loc.radii = p.radii;
    loc.volumes = p.volumes.row(x);
    loc.env_inf = p.volumes.row(x).transpose();
    loc.env_sup = loc.env_inf;
    loc.median_vol = loc.env_inf;
    loc.total_mass = p.total_mass;
    FitOptions opts;
    opts.r_min_override = global.r_min;
    opts.r_max_override = global.r_max;
    opts.alpha_override = global.alpha;
    opts.mass_cap_fraction = 1.0;
    EnvelopeFamily fam = global.family == EnvelopeFamily::Uniform
                             ? EnvelopeFamily::Polynomial
                             : global.family;
    FluctuationModel locmod = fit_model(loc, fam, opts);
    ScaleFunctions ls = eval_scale(locmod);

    // Escape-resistance hypothesis at realized radii.
    std::vector<double> dists;
    for (int y = 0; y < n; ++y) {
        double d = m.d(x, y);
        if (d >= global.r_min && d <= global.r_max / 2.0) dists.push_back(d);
    }
    std::sort(dists.begin(), dists.end());
    dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
    json escapes = json::array();
    double min_escape = kInf;
    int radii_used = 0;
    int take = std::min<size_t>(8, dists.size());
    for (int k = 0; k < take; ++k) {
        size_t idx = static_cast<size_t>(std::llround(
            k * double(dists.size() - 1) / std::max(1, take - 1)));
        double r = dists[idx];
        ResistanceBall ball = resistance_ball(net, m, x, r);
        if (ball.members.size() == static_cast<size_t>(n)) continue;
        double esc = escape_resistance(net, m, ball);
        min_escape = std::min(min_escape, esc / r);
        json row;
        row["r"] = r;
        row["escape_over_r"] = esc / r;
        escapes.push_back(row);
        ++radii_used;
    }
    cert.witnesses.push_back({{"kind", "escape_ratios"}, {"rows", escapes}});
    cert.metrics["rescond_min"] = min_escape;
    cert.metrics["rescond_radii"] = radii_used;
    const double rescond_threshold = 0.02;
    cert.constants["rescond_threshold"] = rescond_threshold;

    // Local conclusions over the lowest decade.
    std::vector<double> grid = time_grid(s);
    TimeWindow low = lowest_decade(grid);
    std::ostringstream gdesc;
    gdesc << "vertex " << net.vertex_id(x) << ", t in the lowest decade ["
          << low.lo << ", " << low.hi << "]";
    cert.grid = gdesc.str();
    double u_lo = kInf, u_hi = 0, l_lo = kInf, l_hi = 0;
    int used = 0;
    for (double t : grid) {
        if (t < low.lo || t > low.hi) continue;
        ++used;
        double pxx = heat_kernel(dec, t, x, x);
        double ru = t * pxx / ls.h_u_inv(t);
        double rl = t * pxx / ls.h_l_inv(t);
        u_lo = std::min(u_lo, ru);
        u_hi = std::max(u_hi, ru);
        l_lo = std::min(l_lo, rl);
        l_hi = std::max(l_hi, rl);
    }
    cert.constants["local_hu_lo"] = u_lo;
    cert.constants["local_hu_hi"] = u_hi;
    cert.constants["local_hl_lo"] = l_lo;
    cert.constants["local_hl_hi"] = l_hi;
    cert.constants["local_c_l"] = locmod.c_l;
    cert.constants["local_c_u"] = locmod.c_u;
    cert.metrics["local_envelope_spread_rmin"] =
        locmod.V_u(locmod.r_min) / locmod.V_l(locmod.r_min);
    cert.ratio_min = u_lo;
    cert.ratio_max = l_hi;
    cert.notes.push_back("local envelopes fitted with the global alpha and "
                         "window; family " +
                         std::string(family_name(locmod.family)));

    if (radii_used == 0 || min_escape < rescond_threshold) {
        cert.verdict = "hypotheses_not_met";
        cert.notes.push_back("escape-resistance condition failed: min "
                             "R(x,B^c)/r below threshold or no usable radii");
        return cert;
    }
    bool ok = used > 0 && std::isfinite(u_lo) && l_lo > 0 && std::isfinite(l_hi);
    cert.verdict = ok ? "holds" : "violated";
    return cert;
}

} // namespace resform
