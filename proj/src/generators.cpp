#include "resform/generators.hpp"

#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "resform/errors.hpp"
#include "resform/rng.hpp"

namespace resform {
namespace {

using json = nlohmann::json;
using Point = std::pair<long long, long long>;

std::string point_id(const Point& p) {
    return std::to_string(p.first) + "_" + std::to_string(p.second);
}

/// Accumulates triangle-corner masses and unit edges, then emits a spec with
/// vertices sorted by coordinate.
struct TriangleAccumulator {
    std::map<Point, double> mass;
    std::set<std::pair<Point, Point>> edges;

    void leaf(const Point& a, const Point& b, const Point& c, double m) {
        mass[a] += m / 3.0;
        mass[b] += m / 3.0;
        mass[c] += m / 3.0;
        edge(a, b);
        edge(b, c);
        edge(a, c);
    }
    void edge(Point u, Point v) {
        if (v < u) std::swap(u, v);
        edges.insert({u, v});
    }
    NetworkSpec to_spec(const std::string& name) const {
        NetworkSpec spec;
        spec.name = name;
        for (const auto& [p, m] : mass) {
            spec.vertex_ids.push_back(point_id(p));
            spec.measures.push_back(m);
        }
        for (const auto& [u, v] : edges)
            spec.edges.push_back({point_id(u), point_id(v), 1.0});
        return spec;
    }
};

Point mid(const Point& a, const Point& b) {
    return {(a.first + b.first) / 2, (a.second + b.second) / 2};
}

void subdivide_even(TriangleAccumulator& acc, Point a, Point b, Point c,
                    int depth, double m) {
    if (depth == 0) {
        acc.leaf(a, b, c, m);
        return;
    }
    Point ab = mid(a, b), ac = mid(a, c), bc = mid(b, c);
    subdivide_even(acc, a, ab, ac, depth - 1, m / 3.0);
    subdivide_even(acc, ab, b, bc, depth - 1, m / 3.0);
    subdivide_even(acc, ac, bc, c, depth - 1, m / 3.0);
}

} // namespace

MeasuredNetwork gen_path(int n, double conductance, double measure) {
    if (n < 2) throw ValidationError("path needs at least 2 vertices");
    NetworkSpec spec;
    spec.name = "path_n" + std::to_string(n);
    for (int i = 0; i < n; ++i) {
        spec.vertex_ids.push_back(std::to_string(i));
        spec.measures.push_back(measure);
    }
    for (int i = 0; i + 1 < n; ++i)
        spec.edges.push_back(
            {std::to_string(i), std::to_string(i + 1), conductance});
    return MeasuredNetwork::build(spec);
}

MeasuredNetwork gen_star(int leaves) {
    if (leaves < 1) throw ValidationError("star needs at least 1 leaf");
    NetworkSpec spec;
    spec.name = "star_k" + std::to_string(leaves);
    spec.vertex_ids.push_back("c");
    spec.measures.push_back(1.0);
    for (int i = 0; i < leaves; ++i) {
        std::string id = "l" + std::to_string(i);
        spec.vertex_ids.push_back(id);
        spec.measures.push_back(1.0);
        spec.edges.push_back({"c", id, 1.0});
    }
    return MeasuredNetwork::build(spec);
}

MeasuredNetwork gen_two_state(double mu_a, double mu_b, double conductance) {
    NetworkSpec spec;
    spec.name = "two_state";
    spec.vertex_ids = {"a", "b"};
    spec.measures = {mu_a, mu_b};
    spec.edges.push_back({"a", "b", conductance});
    return MeasuredNetwork::build(spec);
}

MeasuredNetwork gen_binary_tree(int depth) {
    if (depth < 1) throw ValidationError("binary tree needs depth >= 1");
    int n = (1 << (depth + 1)) - 1;
    NetworkSpec spec;
    spec.name = "btree_d" + std::to_string(depth);
    for (int i = 0; i < n; ++i) {
        spec.vertex_ids.push_back(std::to_string(i));
        spec.measures.push_back(1.0);
    }
    for (int i = 1; i < n; ++i)
        spec.edges.push_back(
            {std::to_string((i - 1) / 2), std::to_string(i), 1.0});
    return MeasuredNetwork::build(spec);
}

MeasuredNetwork gen_sierpinski(int level) {
    if (level < 0 || level > 8)
        throw ValidationError("sierpinski level must be in [0, 8]");
    long long S = 1LL << level;
    TriangleAccumulator acc;
    subdivide_even(acc, {0, 0}, {S, 0}, {0, S}, level, 1.0);
    return MeasuredNetwork::build(acc.to_spec("gasket" + std::to_string(level)));
}

MeasuredNetwork gen_random_recursive_gasket(int level, std::uint64_t seed,
                                            double p_fine) {
    if (level < 0 || level > 6)
        throw ValidationError("random recursive gasket level must be in [0, 6]");
    if (!(p_fine >= 0.0 && p_fine <= 1.0))
        throw ValidationError("p_fine must lie in [0, 1]");
    long long S = 1;
    for (int i = 0; i < level; ++i) S *= 6;
    TriangleAccumulator acc;
    std::uint64_t counter = 0;

    // Depth-first over cells; one uniform draw per non-leaf cell decides the
    // subdivision rule, so the draw sequence is a deterministic function of
    // the seed alone.
    auto rec = [&](auto&& self, Point a, Point b, Point c, int depth,
                   double m) -> void {
        if (depth == 0) {
            acc.leaf(a, b, c, m);
            return;
        }
        double u = uniform_draw(seed, counter++);
        if (u < p_fine) {
            Point du = {(b.first - a.first) / 3, (b.second - a.second) / 3};
            Point dv = {(c.first - a.first) / 3, (c.second - a.second) / 3};
            const Point bases[6] = {
                a,
                {a.first + du.first, a.second + du.second},
                {a.first + 2 * du.first, a.second + 2 * du.second},
                {a.first + dv.first, a.second + dv.second},
                {a.first + du.first + dv.first, a.second + du.second + dv.second},
                {a.first + 2 * dv.first, a.second + 2 * dv.second}};
            for (const Point& p : bases) {
                Point pu = {p.first + du.first, p.second + du.second};
                Point pv = {p.first + dv.first, p.second + dv.second};
                self(self, p, pu, pv, depth - 1, m / 6.0);
            }
        } else {
            Point ab = mid(a, b), ac = mid(a, c), bc = mid(b, c);
            self(self, a, ab, ac, depth - 1, m / 3.0);
            self(self, ab, b, bc, depth - 1, m / 3.0);
            self(self, ac, bc, c, depth - 1, m / 3.0);
        }
    };
    rec(rec, {0, 0}, {S, 0}, {0, S}, level, 1.0);
    std::ostringstream name;
    name << "rrg" << level << "_s" << seed;
    return MeasuredNetwork::build(acc.to_spec(name.str()));
}

MeasuredNetwork gen_two_weighted_tree(int depth, double w1) {
    if (depth < 1) throw ValidationError("two-weighted tree needs depth >= 1");
    if (!(w1 > 0.0 && w1 < 1.0))
        throw ValidationError("two-weighted tree needs w1 in (0, 1)");
    int n = (1 << (depth + 1)) - 1;
    std::vector<double> mass(n);
    mass[0] = 1.0;
    for (int i = 1; i < n; ++i) {
        double parent = mass[(i - 1) / 2];
        mass[i] = (i % 2 == 1) ? parent * w1 : parent * (1.0 - w1);
    }
    NetworkSpec spec;
    std::ostringstream name;
    name << "twt_d" << depth << "_w" << w1;
    spec.name = name.str();
    for (int i = 0; i < n; ++i) {
        spec.vertex_ids.push_back(std::to_string(i));
        spec.measures.push_back(mass[i]);
    }
    for (int i = 1; i < n; ++i)
        spec.edges.push_back(
            {std::to_string((i - 1) / 2), std::to_string(i), 1.0});
    return MeasuredNetwork::build(spec);
}

MeasuredNetwork gen_gw_dendrite(std::uint64_t seed, int target_vertices) {
    if (target_vertices < 8)
        throw ValidationError("dendrite target must be at least 8 vertices");
    std::uint64_t counter = 0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> parent{-1};
        std::deque<int> frontier{0};
        while (!frontier.empty() &&
               static_cast<int>(parent.size()) < target_vertices) {
            int v = frontier.front();
            frontier.pop_front();
            double u = uniform_draw(seed, counter++);
            int kids = (u < 0.25) ? 0 : (u < 0.75) ? 1 : 2;
            for (int k = 0; k < kids; ++k) {
                if (static_cast<int>(parent.size()) >= target_vertices) break;
                parent.push_back(v);
                frontier.push_back(static_cast<int>(parent.size()) - 1);
            }
        }
        if (static_cast<int>(parent.size()) < std::max(2, target_vertices / 2))
            continue;
        NetworkSpec spec;
        std::ostringstream name;
        name << "gw" << target_vertices << "_s" << seed;
        spec.name = name.str();
        for (size_t i = 0; i < parent.size(); ++i) {
            spec.vertex_ids.push_back(std::to_string(i));
            spec.measures.push_back(1.0);
        }
        for (size_t i = 1; i < parent.size(); ++i)
            spec.edges.push_back(
                {std::to_string(parent[i]), std::to_string(i), 1.0});
        return MeasuredNetwork::build(spec);
    }
    throw Error("branching tree generation failed to reach half the target "
                "size in 1000 attempts");
}

MeasuredNetwork generate_from_json(const json& spec) {
    if (!spec.is_object() || !spec.contains("generator"))
        throw ValidationError("generator spec must be an object with a "
                              "'generator' field");
    std::string g = spec.at("generator").get<std::string>();
    json params = spec.value("params", json::object());
    auto seed = [&](std::uint64_t dflt) -> std::uint64_t {
        if (params.contains("seed")) return params.at("seed").get<std::uint64_t>();
        if (spec.contains("seed")) return spec.at("seed").get<std::uint64_t>();
        return dflt;
    };
    if (g == "path")
        return gen_path(params.at("n").get<int>(), params.value("conductance", 1.0),
                        params.value("measure", 1.0));
    if (g == "star") return gen_star(params.at("leaves").get<int>());
    if (g == "two_state")
        return gen_two_state(params.value("mu_a", 1.0), params.value("mu_b", 1.0),
                             params.value("conductance", 1.0));
    if (g == "binary_tree") return gen_binary_tree(params.at("depth").get<int>());
    if (g == "sierpinski") return gen_sierpinski(params.at("level").get<int>());
    if (g == "rrg")
        return gen_random_recursive_gasket(params.at("level").get<int>(), seed(1),
                                           params.value("p_fine", 0.5));
    if (g == "two_weighted_tree")
        return gen_two_weighted_tree(params.at("depth").get<int>(),
                                     params.value("w1", 0.7));
    if (g == "gw_dendrite")
        return gen_gw_dendrite(seed(1), params.value("target", 200));
    throw ValidationError("unknown generator '" + g + "'");
}

} // namespace resform
