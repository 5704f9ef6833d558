#include "resform/network.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace resform {

namespace {

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

MeasuredNetwork MeasuredNetwork::build(NetworkSpec spec) {
    MeasuredNetwork net;
    net.name_ = std::move(spec.name);

    const size_t n = spec.vertex_ids.size();
    if (n == 0) throw ValidationError("network '" + net.name_ + "': no vertices");
    if (spec.measures.size() != n)
        throw ValidationError("network '" + net.name_ + "': " + std::to_string(n) +
                              " vertices but " + std::to_string(spec.measures.size()) +
                              " measures");

    std::unordered_map<std::string, int> index;
    index.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const std::string& id = spec.vertex_ids[i];
        if (id.empty()) throw ValidationError("vertex " + std::to_string(i) + ": empty id");
        if (!index.emplace(id, static_cast<int>(i)).second)
            throw ValidationError("duplicate vertex id '" + id + "'");
        if (!finite_positive(spec.measures[i]))
            throw ValidationError("non-positive measure at vertex '" + id + "'");
    }
    net.ids_ = std::move(spec.vertex_ids);
    net.mu_ = Eigen::Map<const Eigen::VectorXd>(spec.measures.data(),
                                                static_cast<Eigen::Index>(n));
    net.total_mass_ = net.mu_.sum();

    net.adj_.resize(n);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(spec.edges.size());
    for (const auto& e : spec.edges) {
        auto iu = index.find(e.u);
        auto iv = index.find(e.v);
        if (iu == index.end()) throw ValidationError("edge endpoint '" + e.u + "' unknown");
        if (iv == index.end()) throw ValidationError("edge endpoint '" + e.v + "' unknown");
        int u = iu->second, v = iv->second;
        if (u == v) throw ValidationError("self-loop at vertex '" + e.u + "'");
        if (!finite_positive(e.conductance))
            throw ValidationError("non-positive conductance on edge " + e.u + "-" + e.v);
        std::uint64_t key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) |
                            static_cast<std::uint64_t>(std::max(u, v));
        if (!seen.insert(key).second)
            throw ValidationError("duplicate edge " + e.u + "-" + e.v);
        net.edges_.push_back({u, v, e.conductance});
        net.adj_[static_cast<size_t>(u)].emplace_back(v, e.conductance);
        net.adj_[static_cast<size_t>(v)].emplace_back(u, e.conductance);
    }
    for (auto& nbrs : net.adj_) std::sort(nbrs.begin(), nbrs.end());

    // Connectivity: every later analysis assumes one component.
    std::vector<char> reached(n, 0);
    std::queue<int> frontier;
    frontier.push(0);
    reached[0] = 1;
    size_t count = 1;
    while (!frontier.empty()) {
        int x = frontier.front();
        frontier.pop();
        for (auto [y, c] : net.adj_[static_cast<size_t>(x)]) {
            (void)c;
            if (!reached[static_cast<size_t>(y)]) {
                reached[static_cast<size_t>(y)] = 1;
                ++count;
                frontier.push(y);
            }
        }
    }
    if (count != n) {
        auto it = std::find(reached.begin(), reached.end(), 0);
        throw ValidationError("disconnected: vertex '" +
                              net.ids_[static_cast<size_t>(it - reached.begin())] +
                              "' unreachable from '" + net.ids_[0] + "'");
    }
    return net;
}

int MeasuredNetwork::index_of(const std::string& id) const {
    for (size_t i = 0; i < ids_.size(); ++i)
        if (ids_[i] == id) return static_cast<int>(i);
    throw ValidationError("unknown vertex id '" + id + "'");
}

Eigen::MatrixXd MeasuredNetwork::conductance_laplacian() const {
    const int n = size();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : edges_) {
        L(e.u, e.u) += e.conductance;
        L(e.v, e.v) += e.conductance;
        L(e.u, e.v) -= e.conductance;
        L(e.v, e.u) -= e.conductance;
    }
    return L;
}

double dirichlet_energy(const MeasuredNetwork& net, const VertexFunction& f) {
    return dirichlet_energy(net, f, f);
}

double dirichlet_energy(const MeasuredNetwork& net, const VertexFunction& f,
                        const VertexFunction& g) {
    if (f.size() != net.size() || g.size() != net.size())
        throw ValidationError("dirichlet_energy: function length != vertex count");
    double e = 0.0;
    for (const auto& ed : net.edges())
        e += ed.conductance * (f[ed.u] - f[ed.v]) * (g[ed.u] - g[ed.v]);
    return e;
}

VertexFunction solve_grounded(const MeasuredNetwork& net,
                              const std::vector<std::pair<int, double>>& boundary,
                              const VertexFunction& source) {
    const int n = net.size();
    if (boundary.empty()) throw ValidationError("solve_grounded: empty boundary");
    if (source.size() != n)
        throw ValidationError("solve_grounded: source length != vertex count");

    std::vector<int> where(static_cast<size_t>(n), -1); // -1 = interior, else boundary rank
    VertexFunction u = VertexFunction::Zero(n);
    for (const auto& [v, val] : boundary) {
        if (v < 0 || v >= n) throw ValidationError("solve_grounded: boundary vertex out of range");
        if (!std::isfinite(val)) throw ValidationError("solve_grounded: non-finite boundary value");
        if (where[static_cast<size_t>(v)] != -1)
            throw ValidationError("solve_grounded: duplicate boundary vertex '" +
                                  net.vertex_id(v) + "'");
        where[static_cast<size_t>(v)] = 1;
        u[v] = val;
    }

    std::vector<int> interior;
    interior.reserve(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v)
        if (where[static_cast<size_t>(v)] == -1) interior.push_back(v);
    if (interior.empty()) return u;

    std::vector<int> pos(static_cast<size_t>(n), -1);
    for (size_t k = 0; k < interior.size(); ++k) pos[static_cast<size_t>(interior[k])] = static_cast<int>(k);

    const int m = static_cast<int>(interior.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b(m);
    for (int k = 0; k < m; ++k) {
        int v = interior[static_cast<size_t>(k)];
        b[k] = net.measure(v) * source[v];
        double diag = 0.0;
        for (auto [w, c] : net.neighbors(v)) {
            diag += c;
            int pw = pos[static_cast<size_t>(w)];
            if (pw >= 0)
                A(k, pw) -= c;
            else
                b[k] += c * u[w];
        }
        A(k, k) += diag;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw Error("solve_grounded: factorization failed");
    Eigen::VectorXd x = ldlt.solve(b);
    // Iterative refinement: grounded Laplacian blocks are well conditioned at
    // this scale, but refinement makes the 1e-12 residual contract explicit.
    const double bnorm = std::max(b.norm(), 1e-300);
    for (int iter = 0; iter < 4; ++iter) {
        Eigen::VectorXd r = b - A * x;
        if (r.norm() <= 1e-12 * bnorm) break;
        x += ldlt.solve(r);
    }

    for (int k = 0; k < m; ++k) u[interior[static_cast<size_t>(k)]] = x[k];
    return u;
}

VertexFunction solve_grounded(const MeasuredNetwork& net,
                              const std::vector<std::pair<int, double>>& boundary) {
    return solve_grounded(net, boundary, VertexFunction::Zero(net.size()));
}

namespace {

MeasuredNetwork network_from_json(const nlohmann::json& j) {
    NetworkSpec spec;
    if (!j.is_object()) throw ValidationError("network json: not an object");
    spec.name = j.value("name", std::string("unnamed"));
    if (!j.contains("vertices") || !j["vertices"].is_array())
        throw ValidationError("network json: missing 'vertices' array");
    for (const auto& v : j["vertices"]) {
        if (!v.contains("id")) throw ValidationError("network json: vertex without 'id'");
        spec.vertex_ids.push_back(v["id"].get<std::string>());
        spec.measures.push_back(v.value("measure", 1.0));
    }
    if (j.contains("edges")) {
        if (!j["edges"].is_array()) throw ValidationError("network json: 'edges' not an array");
        for (const auto& e : j["edges"]) {
            NetworkSpec::EdgeSpec es;
            if (!e.contains("u") || !e.contains("v"))
                throw ValidationError("network json: edge without endpoints");
            es.u = e["u"].get<std::string>();
            es.v = e["v"].get<std::string>();
            es.conductance = e.value("conductance", 1.0);
            spec.edges.push_back(std::move(es));
        }
    }
    return MeasuredNetwork::build(std::move(spec));
}

nlohmann::json network_to_json(const MeasuredNetwork& net) {
    nlohmann::json j;
    j["name"] = net.name();
    auto& vs = j["vertices"] = nlohmann::json::array();
    for (int v = 0; v < net.size(); ++v)
        vs.push_back({{"id", net.vertex_id(v)}, {"measure", net.measure(v)}});
    auto& es = j["edges"] = nlohmann::json::array();
    for (const auto& e : net.edges())
        es.push_back({{"u", net.vertex_id(e.u)},
                      {"v", net.vertex_id(e.v)},
                      {"conductance", e.conductance}});
    return j;
}

} // namespace

MeasuredNetwork network_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("network json parse error: ") + e.what());
    }
    return network_from_json(j);
}

std::string network_to_json_text(const MeasuredNetwork& net) {
    return network_to_json(net).dump(2) + "\n";
}

MeasuredNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return network_from_json_text(ss.str());
}

void save_network(const MeasuredNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write network file '" + path + "'");
    out << network_to_json_text(net);
}

} // namespace resform
