#include <doctest.h>

#include <cmath>

#include "resform/generators.hpp"
#include "resform/heat.hpp"
#include "test_helpers.hpp"

using namespace resform;

namespace {

/// Dense matrix exponential by Taylor series with scaling and squaring — an
/// algebraically independent route to the transition matrix exp(-t M^{-1} L).
Eigen::MatrixXd expm(Eigen::MatrixXd A) {
    int squarings = 0;
    double norm = A.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.5) {
        A *= 0.5;
        norm *= 0.5;
        ++squarings;
    }
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    Eigen::MatrixXd term = result;
    for (int k = 1; k <= 24; ++k) {
        term = (term * A) / double(k);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

} // namespace

TEST_CASE("oracle: two-state closed forms") {
    const double mu_a = 1.5, mu_b = 0.5, c = 2.0;
    auto net = gen_two_state(mu_a, mu_b, c);
    SpectralDecomposition dec = spectral_decompose(net);
    const double M = mu_a + mu_b;
    const double lambda = c * (1.0 / mu_a + 1.0 / mu_b);
    REQUIRE(dec.eigenvalues.size() == 2);
    CHECK(dec.eigenvalues[0] == doctest::Approx(0.0));
    CHECK(dec.eigenvalues[1] == doctest::Approx(lambda).epsilon(1e-12));
    for (double t : {0.01, 0.3, 2.0}) {
        double e = std::exp(-lambda * t);
        CHECK(heat_kernel(dec, t, 0, 0) ==
              doctest::Approx(1.0 / M + e * mu_b / (mu_a * M)).epsilon(1e-12));
        CHECK(heat_kernel(dec, t, 1, 1) ==
              doctest::Approx(1.0 / M + e * mu_a / (mu_b * M)).epsilon(1e-12));
        CHECK(heat_kernel(dec, t, 0, 1) ==
              doctest::Approx((1.0 - e) / M).epsilon(1e-12));
    }
}

TEST_CASE("kernel matches a scaling-and-squaring matrix exponential") {
    for (std::uint64_t seed : {3u, 14u}) {
        auto net = testing::random_network(seed, 11);
        SpectralDecomposition dec = spectral_decompose(net);
        const int n = net.size();
        Eigen::MatrixXd L = net.conductance_laplacian();
        Eigen::VectorXd mu = net.measures();
        for (double t : {0.05, 0.4, 1.7}) {
            Eigen::MatrixXd Pt = expm(-t * mu.cwiseInverse().asDiagonal() * L);
            Eigen::MatrixXd K = heat_kernel_matrix(dec, t);
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    CHECK(K(x, y) ==
                          doctest::Approx(Pt(x, y) / mu[y]).epsilon(1e-8));
        }
    }
}

TEST_CASE("spectral structure: sorted, zero mode constant, residuals small") {
    auto net = testing::random_network(22);
    SpectralDecomposition dec = spectral_decompose(net);
    const int n = net.size();
    CHECK(dec.eigenvalues[0] == doctest::Approx(0.0));
    for (int k = 1; k < n; ++k) {
        CHECK(dec.eigenvalues[k] >= dec.eigenvalues[k - 1] - 1e-12);
        CHECK(dec.eigenvalues[k] > 0.0);
    }
    // phi_0 is exactly constant 1/sqrt(total mass).
    double c0 = 1.0 / std::sqrt(dec.total_mass);
    for (int x = 0; x < n; ++x)
        CHECK(dec.phi(x, 0) == doctest::Approx(c0).epsilon(1e-14));
    // Orthonormal in l2(mu).
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            double dot = 0;
            for (int x = 0; x < n; ++x)
                dot += dec.phi(x, a) * dec.phi(x, b) * dec.mu[x];
            CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
        }
}

TEST_CASE("Chapman-Kolmogorov, mass conservation, and the half-time identity") {
    for (std::uint64_t seed : {6u, 28u}) {
        auto net = testing::random_network(seed);
        SpectralDecomposition dec = spectral_decompose(net);
        const int n = net.size();
        const double t = 0.35, s = 0.6;
        Eigen::MatrixXd Kt = heat_kernel_matrix(dec, t);
        Eigen::MatrixXd Ks = heat_kernel_matrix(dec, s);
        Eigen::MatrixXd Kts = heat_kernel_matrix(dec, t + s);
        for (int x = 0; x < n; ++x) {
            double mass = 0.0;
            for (int y = 0; y < n; ++y) mass += Kt(x, y) * net.measure(y);
            CHECK(std::abs(mass - 1.0) <= 1e-10);
            for (int y = 0; y < n; ++y) {
                double conv = 0.0;
                for (int z = 0; z < n; ++z)
                    conv += Kt(x, z) * Ks(z, y) * net.measure(z);
                CHECK(std::abs(conv - Kts(x, y)) <=
                      1e-8 * std::max(1.0, std::abs(Kts(x, y))));
            }
            // p_t(x,x) = || p_{t/2}(x,.) ||_2^2 in l2(mu).
            Eigen::MatrixXd Kh = heat_kernel_matrix(dec, t / 2);
            double norm2 = 0.0;
            for (int y = 0; y < n; ++y)
                norm2 += Kh(x, y) * Kh(x, y) * net.measure(y);
            CHECK(std::abs(norm2 - Kt(x, x)) <= 1e-10 * std::max(1.0, Kt(x, x)));
        }
    }
}

TEST_CASE("kernel symmetry and positive diagonal") {
    auto net = testing::random_network(30);
    SpectralDecomposition dec = spectral_decompose(net);
    Eigen::MatrixXd K = heat_kernel_matrix(dec, 0.8);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    for (int x = 0; x < net.size(); ++x) CHECK(K(x, x) > 0.0);
    CHECK_THROWS_AS(heat_kernel(dec, 0.0, 0, 0), ValidationError);
}

TEST_CASE("semigroup action: identity at t=0, fixes constants, contracts") {
    auto net = testing::random_network(33);
    SpectralDecomposition dec = spectral_decompose(net);
    const int n = net.size();
    VertexFunction f(n);
    for (int i = 0; i < n; ++i) f[i] = uniform_draw(40, i) - 0.3;
    VertexFunction f0 = semigroup_apply(dec, 0.0, f);
    CHECK((f0 - f).cwiseAbs().maxCoeff() <= 1e-10);
    VertexFunction ones = VertexFunction::Ones(n);
    VertexFunction p1 = semigroup_apply(dec, 1.3, ones);
    CHECK((p1 - ones).cwiseAbs().maxCoeff() <= 1e-10);
    // l2(mu) contraction.
    auto norm2 = [&](const VertexFunction& v) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += v[i] * v[i] * net.measure(i);
        return s;
    };
    CHECK(norm2(semigroup_apply(dec, 0.9, f)) <= norm2(f) * (1 + 1e-12));
}

TEST_CASE("ultracontractivity profile equals the diagonal maximum") {
    auto net = testing::random_network(35);
    SpectralDecomposition dec = spectral_decompose(net);
    auto pts = ultracontractivity_profile(dec, {0.1, 0.5, 2.0});
    REQUIRE(pts.size() == 3);
    for (const auto& pt : pts) {
        Eigen::VectorXd diag = heat_kernel_diagonal(dec, 2.0 * pt.t);
        CHECK(pt.gamma ==
              doctest::Approx(std::sqrt(diag.maxCoeff())).epsilon(1e-12));
        // The direct indicator search cannot beat the optimum.
        CHECK(pt.gamma_direct <= pt.gamma * (1 + 1e-9));
        CHECK(pt.gamma_direct > 0.0);
    }
}

TEST_CASE("energy of the kernel row is controlled by the diagonal") {
    auto net = testing::random_network(36);
    SpectralDecomposition dec = spectral_decompose(net);
    for (double t : {0.07, 0.9}) {
        auto rep = kernel_energy_check(net, dec, t, 1);
        CHECK(rep.ok);
        CHECK(rep.energy <= rep.bound * (1 + 1e-12));
    }
}
