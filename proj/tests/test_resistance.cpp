#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "resform/generators.hpp"
#include "resform/resistance.hpp"
#include "resform/rng.hpp"
#include "test_helpers.hpp"

using namespace resform;

TEST_CASE("oracle: triangle of unit edges has pairwise resistance 2/3") {
    NetworkSpec s;
    s.name = "triangle";
    s.vertex_ids = {"a", "b", "c"};
    s.measures = {1, 1, 1};
    s.edges = {{"a", "b", 1}, {"b", "c", 1}, {"a", "c", 1}};
    auto net = MeasuredNetwork::build(s);
    ResistanceMetric m = resistance_metric(net);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(m(i, j) ==
                  doctest::Approx(i == j ? 0.0 : 2.0 / 3.0).epsilon(1e-12));
    CHECK(effective_resistance(net, {0}, {1}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("oracle: series and parallel reductions") {
    // Path: pure series, R(i,j) = |i-j| with unit conductances.
    auto path = gen_path(7);
    ResistanceMetric mp = resistance_metric(path);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            CHECK(mp(i, j) == doctest::Approx(std::abs(i - j)).epsilon(1e-12));

    // 4-cycle: adjacent pair sees 1 parallel to 3 in series: 3/4.
    NetworkSpec s;
    s.name = "cycle4";
    s.vertex_ids = {"0", "1", "2", "3"};
    s.measures = {1, 1, 1, 1};
    s.edges = {{"0", "1", 1}, {"1", "2", 1}, {"2", "3", 1}, {"3", "0", 1}};
    ResistanceMetric mc = resistance_metric(MeasuredNetwork::build(s));
    CHECK(mc(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(mc(0, 2) == doctest::Approx(1.0).epsilon(1e-12)); // 2 || 2
}

TEST_CASE("resistance is a metric on seeded random networks") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto net = testing::random_network(seed);
        ResistanceMetric m = resistance_metric(net);
        const int n = m.size();
        for (int i = 0; i < n; ++i) {
            CHECK(m(i, i) == doctest::Approx(0.0).epsilon(1e-12));
            for (int j = i + 1; j < n; ++j) {
                CHECK(m(i, j) == doctest::Approx(m(j, i)).epsilon(1e-13));
                CHECK(m(i, j) > 0.0);
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    CHECK(m(i, j) <= m(i, k) + m(k, j) + 1e-10);
    }
}

TEST_CASE("Rayleigh monotonicity: raising a conductance lowers every distance") {
    for (std::uint64_t seed : {2u, 9u, 17u}) {
        auto net = testing::random_network(seed);
        ResistanceMetric before = resistance_metric(net);
        // Rebuild with the first edge's conductance tripled.
        NetworkSpec s;
        s.name = "bumped";
        for (int i = 0; i < net.size(); ++i) {
            s.vertex_ids.push_back(net.vertex_id(i));
            s.measures.push_back(net.measure(i));
        }
        for (size_t k = 0; k < net.edges().size(); ++k) {
            const Edge& e = net.edges()[k];
            s.edges.push_back({net.vertex_id(e.u), net.vertex_id(e.v),
                               e.conductance * (k == 0 ? 3.0 : 1.0)});
        }
        ResistanceMetric after = resistance_metric(MeasuredNetwork::build(s));
        for (int i = 0; i < net.size(); ++i)
            for (int j = 0; j < net.size(); ++j)
                CHECK(after(i, j) <= before(i, j) + 1e-10);
    }
}

TEST_CASE("resistance inequality: |f(x)-f(y)|^2 <= R(x,y) E(f)") {
    auto net = testing::random_network(13);
    ResistanceMetric m = resistance_metric(net);
    const int n = net.size();
    for (int trial = 0; trial < 20; ++trial) {
        VertexFunction f(n);
        for (int i = 0; i < n; ++i) f[i] = uniform_draw(100 + trial, i) - 0.5;
        double energy = dirichlet_energy(net, f);
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y) {
                double diff = f[x] - f[y];
                CHECK(diff * diff <= m(x, y) * energy * (1.0 + 1e-10) + 1e-12);
            }
    }
}

TEST_CASE("the two resistance routes agree to 1e-9") {
    for (std::uint64_t seed : {4u, 21u}) {
        auto net = testing::random_network(seed);
        ResistanceMetric m = resistance_metric(net);
        const int n = net.size();
        for (int x = 0; x < n; ++x)
            for (int y = x + 1; y < n; ++y) {
                double direct = effective_resistance(net, {x}, {y});
                CHECK(std::abs(direct - m(x, y)) <= 1e-9 * std::max(1.0, direct));
            }
    }
}

TEST_CASE("balls match a brute-force component search") {
    for (std::uint64_t seed : {5u, 6u, 7u}) {
        auto net = testing::random_network(seed);
        ResistanceMetric m = resistance_metric(net);
        const int n = net.size();
        auto bps = m.breakpoints();
        for (size_t bi = 0; bi < bps.size(); bi += std::max<size_t>(1, bps.size() / 6)) {
            double r = bps[bi];
            for (int x = 0; x < n; x += std::max(1, n / 5)) {
                ResistanceBall ball = resistance_ball(net, m, x, r);
                // Brute force: BFS from x through the open sub-level set.
                std::vector<char> in(n, 0), seen(n, 0);
                for (int y = 0; y < n; ++y) in[y] = m(x, y) < r;
                std::vector<int> stack = {x};
                seen[x] = 1;
                while (!stack.empty()) {
                    int v = stack.back();
                    stack.pop_back();
                    for (auto [w, c] : net.neighbors(v))
                        if (in[w] && !seen[w]) {
                            seen[w] = 1;
                            stack.push_back(w);
                        }
                }
                std::vector<int> expect;
                for (int y = 0; y < n; ++y)
                    if (seen[y]) expect.push_back(y);
                CHECK(ball.members == expect);
                double mass = 0;
                for (int y : expect) mass += net.measure(y);
                CHECK(ball.mass == doctest::Approx(mass).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("balls nest and the closed ball contains the open one") {
    auto net = testing::random_network(8);
    ResistanceMetric m = resistance_metric(net);
    auto bps = m.breakpoints();
    for (size_t i = 1; i < bps.size(); ++i) {
        auto small = resistance_ball(net, m, 0, bps[i - 1]);
        auto big = resistance_ball(net, m, 0, bps[i]);
        CHECK(std::includes(big.members.begin(), big.members.end(),
                            small.members.begin(), small.members.end()));
        auto closed = resistance_ball_closed(net, m, 0, bps[i - 1]);
        CHECK(std::includes(closed.members.begin(), closed.members.end(),
                            small.members.begin(), small.members.end()));
    }
    CHECK_THROWS_AS(resistance_ball(net, m, 0, 0.0), ValidationError);
}

TEST_CASE("escape resistance at a realized radius never exceeds the radius") {
    // Only radii realized from the center qualify: the open ball then leaves
    // the shell at distance r in the complement, so shorting the complement
    // gives R(x, B^c) <= r. A breakpoint from some other vertex pair can fall
    // in a gap of the center's distance profile, where the bound fails.
    auto net = testing::random_network(10);
    ResistanceMetric m = resistance_metric(net);
    const int x = 2;
    std::vector<double> realized;
    for (int y = 0; y < net.size(); ++y)
        if (y != x) realized.push_back(m(x, y));
    std::sort(realized.begin(), realized.end());
    for (double r : realized) {
        ResistanceBall ball = resistance_ball(net, m, x, r);
        if (ball.whole_space(net)) break;
        double esc = escape_resistance(net, m, ball);
        CHECK(esc > 0.0);
        CHECK(esc <= r * (1.0 + 1e-9));
    }
}

TEST_CASE("greedy cover: membership covered, centers separated") {
    auto net = testing::random_network(12);
    ResistanceMetric m = resistance_metric(net);
    auto bps = m.breakpoints();
    double r = bps[bps.size() / 2];
    CoverResult cover = greedy_cover(net, m, 1, r, 0.5);
    ResistanceBall ball = resistance_ball(net, m, 1, r);
    for (int y : ball.members) {
        bool covered = false;
        for (int c : cover.centers)
            if (m(c, y) < 0.5 * r) covered = true;
        CHECK(covered);
    }
    for (size_t a = 0; a < cover.centers.size(); ++a)
        for (size_t b = a + 1; b < cover.centers.size(); ++b)
            CHECK(m(cover.centers[a], cover.centers[b]) >= 0.5 * r * (1 - 1e-12));
}

TEST_CASE("minimax chains on a path split the distance almost evenly") {
    auto net = gen_path(17);
    ResistanceMetric m = resistance_metric(net);
    ChainProbe probe = chaining_probe(m, 0, 16, 4);
    CHECK(probe.chain.front() == 0);
    CHECK(probe.chain.back() == 16);
    CHECK(probe.chain.size() == 5);
    CHECK(probe.max_step == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(probe.constant == doctest::Approx(1.0).epsilon(1e-12));

    ChainingReport rep = probe_chaining(net, m);
    CHECK(rep.pass);
    CHECK(rep.worst_constant <= 2.0);
    CHECK(rep.pairs_probed > 0);
}
