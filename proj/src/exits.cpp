#include "resform/exits.hpp"

#include <algorithm>
#include <cmath>

namespace resform {

namespace {

int find_local(const std::vector<int>& members, int vertex) {
    auto it = std::lower_bound(members.begin(), members.end(), vertex);
    if (it == members.end() || *it != vertex) return -1;
    return static_cast<int>(it - members.begin());
}

Eigen::MatrixXd restricted_laplacian(const MeasuredNetwork& net,
                                     const std::vector<int>& members) {
    const int m = static_cast<int>(members.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        int v = members[static_cast<size_t>(k)];
        double diag = 0.0;
        for (auto [w, c] : net.neighbors(v)) {
            diag += c; // edges leaving the ball stay on the diagonal (killing)
            int kw = find_local(members, w);
            if (kw >= 0) L(k, kw) -= c;
        }
        L(k, k) += diag;
    }
    return L;
}

} // namespace

int GreenKernel::local_index(int vertex) const { return find_local(members, vertex); }

double GreenKernel::value(int x, int y) const {
    int lx = local_index(x), ly = local_index(y);
    if (lx < 0 || ly < 0) return 0.0; // killed outside the ball
    return g(lx, ly);
}

GreenKernel green_kernel(const MeasuredNetwork& net, const ResistanceBall& ball) {
    if (ball.whole_space(net))
        throw ValidationError("green_kernel: ball covers the whole space");
    GreenKernel gk;
    gk.members = ball.members;
    Eigen::MatrixXd L = restricted_laplacian(net, gk.members);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(L);
    if (ldlt.info() != Eigen::Success)
        throw Error("green_kernel: factorization failed");
    const int m = static_cast<int>(gk.members.size());
    gk.g = ldlt.solve(Eigen::MatrixXd::Identity(m, m));
    gk.g += ldlt.solve(Eigen::MatrixXd::Identity(m, m) - L * gk.g);
    gk.g = ((gk.g + gk.g.transpose()) * 0.5).eval();
    return gk;
}

double expected_exit_time(const MeasuredNetwork& net, const ResistanceBall& ball,
                          int x) {
    if (ball.whole_space(net))
        throw ValidationError("expected_exit_time: ball covers the whole space");
    if (x < 0 || x >= net.size())
        throw ValidationError("expected_exit_time: vertex out of range");
    if (find_local(ball.members, x) < 0) return 0.0;

    // Route 1: measure-weighted Poisson problem with the complement grounded.
    std::vector<char> member(static_cast<size_t>(net.size()), 0);
    for (int v : ball.members) member[static_cast<size_t>(v)] = 1;
    std::vector<std::pair<int, double>> boundary;
    for (int v = 0; v < net.size(); ++v)
        if (!member[static_cast<size_t>(v)]) boundary.emplace_back(v, 0.0);
    VertexFunction u =
        solve_grounded(net, boundary, VertexFunction::Ones(net.size()));
    double via_poisson = u[x];

    // Route 2: Green kernel integrated against the measure.
    GreenKernel gk = green_kernel(net, ball);
    int lx = gk.local_index(x);
    double via_green = 0.0;
    for (size_t k = 0; k < gk.members.size(); ++k)
        via_green += gk.g(lx, static_cast<int>(k)) * net.measure(gk.members[k]);

    double scale = std::max({std::abs(via_poisson), std::abs(via_green), 1e-300});
    if (std::abs(via_poisson - via_green) > 1e-9 * scale)
        throw Error("expected_exit_time: Poisson and Green routes disagree (" +
                    std::to_string(via_poisson) + " vs " + std::to_string(via_green) + ")");
    return via_poisson;
}

int KilledSpectral::local_index(int vertex) const { return find_local(members, vertex); }

KilledSpectral killed_decompose(const MeasuredNetwork& net, const ResistanceBall& ball) {
    if (ball.whole_space(net))
        throw ValidationError("killed_decompose: ball covers the whole space");
    KilledSpectral ks;
    ks.members = ball.members;
    const int m = static_cast<int>(ks.members.size());
    ks.mu.resize(m);
    for (int k = 0; k < m; ++k) ks.mu[k] = net.measure(ks.members[static_cast<size_t>(k)]);

    Eigen::VectorXd inv_sqrt_mu = ks.mu.array().rsqrt();
    Eigen::MatrixXd B = restricted_laplacian(net, ks.members);
    B = (inv_sqrt_mu.asDiagonal() * B * inv_sqrt_mu.asDiagonal()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
    if (solver.info() != Eigen::Success)
        throw Error("killed_decompose: eigensolver failed");
    ks.eigenvalues = solver.eigenvalues();
    ks.phi = inv_sqrt_mu.asDiagonal() * solver.eigenvectors();
    if (ks.eigenvalues[0] <= 0.0)
        throw Error("killed_decompose: killed generator not positive definite");
    return ks;
}

double exit_survival(const KilledSpectral& ks, int x, double t) {
    if (t < 0.0) throw ValidationError("exit_survival: time must be non-negative");
    int lx = ks.local_index(x);
    if (lx < 0) return 0.0;
    const int m = static_cast<int>(ks.members.size());
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
        double mass_k = (ks.phi.col(k).array() * ks.mu.array()).sum();
        s += std::exp(-ks.eigenvalues[k] * t) * ks.phi(lx, k) * mass_k;
    }
    return std::clamp(s, 0.0, 1.0);
}

double exit_tail(const KilledSpectral& ks, int x, double t) {
    return 1.0 - exit_survival(ks, x, t);
}

double exit_tail(const MeasuredNetwork& net, const ResistanceBall& ball, int x,
                 double t) {
    if (x < 0 || x >= net.size()) throw ValidationError("exit_tail: vertex out of range");
    if (find_local(ball.members, x) < 0) return 1.0;
    return exit_tail(killed_decompose(net, ball), x, t);
}

double exit_time_by_quadrature(const KilledSpectral& ks, int x, double rel_tol) {
    int lx = ks.local_index(x);
    if (lx < 0) return 0.0;
    const double lam_min = ks.eigenvalues[0];
    const double lam_max = ks.eigenvalues[ks.eigenvalues.size() - 1];
    // Window chosen so the truncated head and tail are below tolerance.
    const double t_min = rel_tol * 1e-3 / lam_max;
    const double t_max = 50.0 / lam_min;

    auto integral_log = [&](int segments) {
        // Simpson in u = log t; integrand S(e^u) e^u.
        const double u_lo = std::log(t_min), u_hi = std::log(t_max);
        const double h = (u_hi - u_lo) / segments;
        double acc = 0.0;
        for (int i = 0; i <= segments; ++i) {
            double u = u_lo + h * i;
            double w = (i == 0 || i == segments) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            double t = std::exp(u);
            acc += w * exit_survival(ks, x, t) * t;
        }
        return acc * h / 3.0;
    };

    double head = 0.5 * (exit_survival(ks, x, 0.0) + exit_survival(ks, x, t_min)) * t_min;
    double prev = head + integral_log(64);
    for (int segments = 128; segments <= 1 << 16; segments *= 2) {
        double cur = head + integral_log(segments);
        if (std::abs(cur - prev) <= 0.3 * rel_tol * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

} // namespace resform
