#include "resform/resistance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <set>

namespace resform {

std::vector<double> ResistanceMetric::breakpoints() const {
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(size()) * static_cast<size_t>(size() > 0 ? size() - 1 : 0) / 2);
    for (int i = 0; i < size(); ++i)
        for (int j = i + 1; j < size(); ++j) vals.push_back(d(i, j));
    std::sort(vals.begin(), vals.end());
    std::vector<double> out;
    for (double v : vals) {
        if (!out.empty() && v <= out.back() * (1.0 + kRadiusTol))
            out.back() = v; // ascending order: v is the new run maximum
        else
            out.push_back(v);
    }
    return out;
}

ResistanceMetric resistance_metric(const MeasuredNetwork& net) {
    const int n = net.size();
    // Ground the Laplacian nullspace with the rank-one shift L + J/n; the
    // all-ones components cancel in the resistance combination, so the shifted
    // inverse can be used directly in place of the pseudoinverse.
    Eigen::MatrixXd K = net.conductance_laplacian();
    K.array() += 1.0 / static_cast<double>(n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success)
        throw Error("resistance_metric: factorization failed");
    Eigen::MatrixXd G = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    // One refinement pass keeps the inverse near machine precision.
    G += ldlt.solve(Eigen::MatrixXd::Identity(n, n) - K * G);
    G = ((G + G.transpose()) * 0.5).eval();

    ResistanceMetric m;
    m.d.resize(n, n);
    for (int i = 0; i < n; ++i) {
        m.d(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            double r = G(i, i) + G(j, j) - 2.0 * G(i, j);
            if (r < 0.0) r = 0.0;
            m.d(i, j) = r;
            m.d(j, i) = r;
        }
    }
    return m;
}

double effective_resistance(const MeasuredNetwork& net, const std::vector<int>& A,
                            const std::vector<int>& B) {
    if (A.empty() || B.empty())
        throw ValidationError("effective_resistance: empty terminal set");
    std::vector<char> inA(static_cast<size_t>(net.size()), 0);
    std::vector<std::pair<int, double>> boundary;
    for (int a : A) {
        if (a < 0 || a >= net.size())
            throw ValidationError("effective_resistance: vertex out of range");
        if (!inA[static_cast<size_t>(a)]) {
            inA[static_cast<size_t>(a)] = 1;
            boundary.emplace_back(a, 1.0);
        }
    }
    for (int b : B) {
        if (b < 0 || b >= net.size())
            throw ValidationError("effective_resistance: vertex out of range");
        if (inA[static_cast<size_t>(b)])
            throw ValidationError("effective_resistance: terminal sets overlap at '" +
                                  net.vertex_id(b) + "'");
        boundary.emplace_back(b, 0.0);
    }
    VertexFunction u = solve_grounded(net, boundary);
    double energy = dirichlet_energy(net, u);
    if (energy <= 0.0)
        throw Error("effective_resistance: degenerate energy");
    return 1.0 / energy;
}

namespace {

ResistanceBall component_ball(const MeasuredNetwork& net, const ResistanceMetric& m,
                              int x, double r, bool closed) {
    if (r <= 0.0) throw ValidationError("resistance_ball: radius must be positive");
    if (x < 0 || x >= net.size())
        throw ValidationError("resistance_ball: center out of range");
    const int n = net.size();
    std::vector<char> inLevel(static_cast<size_t>(n), 0);
    // Radii land exactly on realized distances; admit (or exclude) the whole
    // shell whose computed distances straddle r within the jitter tolerance.
    for (int y = 0; y < n; ++y)
        inLevel[static_cast<size_t>(y)] =
            closed ? (m(x, y) <= r * (1.0 + kRadiusTol)) : (m(x, y) < r * (1.0 - kRadiusTol));
    // inLevel[x] is always true (distance 0).
    std::vector<char> member(static_cast<size_t>(n), 0);
    std::queue<int> frontier;
    frontier.push(x);
    member[static_cast<size_t>(x)] = 1;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop();
        for (auto [w, c] : net.neighbors(v)) {
            (void)c;
            if (inLevel[static_cast<size_t>(w)] && !member[static_cast<size_t>(w)]) {
                member[static_cast<size_t>(w)] = 1;
                frontier.push(w);
            }
        }
    }
    ResistanceBall ball;
    ball.center = x;
    ball.radius = r;
    for (int y = 0; y < n; ++y)
        if (member[static_cast<size_t>(y)]) {
            ball.members.push_back(y);
            ball.mass += net.measure(y);
        }
    return ball;
}

} // namespace

ResistanceBall resistance_ball(const MeasuredNetwork& net, const ResistanceMetric& m,
                               int x, double r) {
    return component_ball(net, m, x, r, false);
}

ResistanceBall resistance_ball_closed(const MeasuredNetwork& net,
                                      const ResistanceMetric& m, int x, double r) {
    return component_ball(net, m, x, r, true);
}

double escape_resistance(const MeasuredNetwork& net, const ResistanceMetric& m,
                         const ResistanceBall& ball) {
    if (ball.whole_space(net))
        throw ValidationError("escape_resistance: ball covers the whole space");
    std::vector<char> member(static_cast<size_t>(net.size()), 0);
    for (int v : ball.members) member[static_cast<size_t>(v)] = 1;
    std::vector<int> complement;
    double nearest = std::numeric_limits<double>::infinity();
    for (int v = 0; v < net.size(); ++v)
        if (!member[static_cast<size_t>(v)]) {
            complement.push_back(v);
            nearest = std::min(nearest, m(ball.center, v));
        }
    double r = effective_resistance(net, {ball.center}, complement);
    // Shorting the complement can only reduce resistance below the nearest
    // single complement vertex.
    if (r > nearest * (1.0 + 1e-9) + 1e-12)
        throw Error("escape_resistance: exceeded nearest complement distance");
    return r;
}

CoverResult greedy_cover(const MeasuredNetwork& net, const ResistanceMetric& m,
                         int x, double r, double eps) {
    if (!(eps > 0.0 && eps <= 0.5))
        throw ValidationError("greedy_cover: shrink factor must lie in (0, 1/2]");
    ResistanceBall ball = resistance_ball(net, m, x, r);
    const double cover_r = eps * r;

    CoverResult cover;
    cover.radius = r;
    cover.shrink = eps;
    std::vector<char> covered(ball.members.size(), 0);
    for (;;) {
        int pick = -1;
        for (size_t i = 0; i < ball.members.size(); ++i)
            if (!covered[i]) {
                pick = ball.members[i]; // members sorted: smallest index wins
                break;
            }
        if (pick < 0) break;
        cover.centers.push_back(pick);
        for (size_t i = 0; i < ball.members.size(); ++i)
            if (!covered[i] && m(pick, ball.members[i]) < cover_r) covered[i] = 1;
    }

    // Construction invariants, cheap enough to always verify.
    for (size_t i = 0; i < cover.centers.size(); ++i)
        for (size_t j = i + 1; j < cover.centers.size(); ++j)
            if (m(cover.centers[i], cover.centers[j]) < cover_r)
                throw Error("greedy_cover: separation invariant failed");
    for (int v : ball.members) {
        bool hit = false;
        for (int c : cover.centers)
            if (m(c, v) < cover_r) {
                hit = true;
                break;
            }
        if (!hit) throw Error("greedy_cover: covering invariant failed");
    }
    return cover;
}

ChainProbe chaining_probe(const ResistanceMetric& m, int x, int y, int n) {
    const int V = m.size();
    if (x < 0 || x >= V || y < 0 || y >= V)
        throw ValidationError("chaining_probe: vertex out of range");
    if (n < 1) throw ValidationError("chaining_probe: need n >= 1 segments");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(static_cast<size_t>(V), inf);
    dp[static_cast<size_t>(x)] = 0.0;
    std::vector<std::vector<int>> parent(static_cast<size_t>(n),
                                         std::vector<int>(static_cast<size_t>(V), -1));
    std::vector<double> next(static_cast<size_t>(V));
    for (int k = 0; k < n; ++k) {
        for (int v = 0; v < V; ++v) {
            double best = inf;
            int arg = -1;
            for (int u = 0; u < V; ++u) {
                if (dp[static_cast<size_t>(u)] == inf) continue;
                double cand = std::max(dp[static_cast<size_t>(u)], m(u, v));
                if (cand < best) {
                    best = cand;
                    arg = u;
                }
            }
            next[static_cast<size_t>(v)] = best;
            parent[static_cast<size_t>(k)][static_cast<size_t>(v)] = arg;
        }
        dp = next;
    }

    ChainProbe probe;
    probe.max_step = dp[static_cast<size_t>(y)];
    probe.chain.resize(static_cast<size_t>(n) + 1);
    int cur = y;
    for (int k = n - 1; k >= 0; --k) {
        probe.chain[static_cast<size_t>(k) + 1] = cur;
        cur = parent[static_cast<size_t>(k)][static_cast<size_t>(cur)];
    }
    probe.chain[0] = cur;
    double rxy = m(x, y);
    probe.constant = rxy > 0.0 ? probe.max_step * static_cast<double>(n) / rxy : 0.0;
    return probe;
}

ChainingReport probe_chaining(const MeasuredNetwork& net, const ResistanceMetric& m,
                              int max_pairs, double threshold) {
    ChainingReport report;
    report.threshold = threshold;

    double rho = 0.0; // coarsest single-edge step in the metric
    for (const auto& e : net.edges()) rho = std::max(rho, m(e.u, e.v));
    if (rho <= 0.0) throw Error("probe_chaining: degenerate edge resistances");

    // Deterministic pair sample stratified by distance: sort all pairs by
    // R and take evenly spaced ranks, so short and long pairs both appear.
    const int n = net.size();
    std::vector<std::pair<double, std::pair<int, int>>> pairs;
    pairs.reserve(static_cast<size_t>(n) * (static_cast<size_t>(n) - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.push_back({m(i, j), {i, j}});
    std::sort(pairs.begin(), pairs.end());
    size_t take = std::min<size_t>(static_cast<size_t>(max_pairs), pairs.size());
    for (size_t k = 0; k < take; ++k) {
        size_t idx = (pairs.size() - 1) * k / std::max<size_t>(1, take - 1);
        auto [x, y] = pairs[idx].second;
        double rxy = m(x, y);
        int n_cap = std::max(1, static_cast<int>(std::floor(rxy / rho)));
        for (int steps = 1; steps <= n_cap; steps *= 2) {
            ChainProbe probe = chaining_probe(m, x, y, steps);
            report.samples.push_back({x, y, steps, probe.constant});
            report.worst_constant = std::max(report.worst_constant, probe.constant);
        }
        ++report.pairs_probed;
    }
    report.pass = report.worst_constant <= threshold;
    return report;
}

void save_metric_csv(const ResistanceMetric& m, const MeasuredNetwork& net,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write metric file '" + path + "'");
    out << "vertex";
    for (int j = 0; j < net.size(); ++j) out << "," << net.vertex_id(j);
    out << "\n";
    char buf[40];
    for (int i = 0; i < net.size(); ++i) {
        out << net.vertex_id(i);
        for (int j = 0; j < net.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << "," << buf;
        }
        out << "\n";
    }
}

} // namespace resform
