#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "resform/errors.hpp"

namespace resform {

/// Pointwise function on vertices, indexed by vertex order.
using VertexFunction = Eigen::VectorXd;

struct Edge {
    int u = -1;
    int v = -1;
    double conductance = 0.0;
};

/// Raw network description prior to validation. `measures[i]` and
/// `vertex_ids[i]` refer to the same vertex; edges name endpoints by id.
struct NetworkSpec {
    struct EdgeSpec {
        std::string u, v;
        double conductance = 1.0;
    };
    std::string name;
    std::vector<std::string> vertex_ids;
    std::vector<double> measures;
    std::vector<EdgeSpec> edges;
};

/// Finite connected weighted graph with a positive vertex measure.
/// Vertex indices are assigned by input order and never reordered, so every
/// derived quantity is deterministic for a given spec.
class MeasuredNetwork {
public:
    /// Validates and freezes a spec. Rejects: empty vertex set, duplicate or
    /// unknown ids, non-positive measures or conductances, self-loops,
    /// duplicate edges, disconnected graphs. Messages name the offending item.
    static MeasuredNetwork build(NetworkSpec spec);

    int size() const { return static_cast<int>(ids_.size()); }
    const std::string& name() const { return name_; }
    const std::string& vertex_id(int v) const { return ids_[static_cast<size_t>(v)]; }
    int index_of(const std::string& id) const;

    double measure(int v) const { return mu_[v]; }
    const Eigen::VectorXd& measures() const { return mu_; }
    double total_mass() const { return total_mass_; }

    const std::vector<Edge>& edges() const { return edges_; }
    /// Neighbor list of v as (vertex, conductance) pairs, sorted by vertex.
    const std::vector<std::pair<int, double>>& neighbors(int v) const {
        return adj_[static_cast<size_t>(v)];
    }

    /// Dense conductance Laplacian: diag = incident conductance sums,
    /// off-diagonal = -c(u,v). Built per call.
    Eigen::MatrixXd conductance_laplacian() const;

private:
    MeasuredNetwork() = default;
    std::string name_;
    std::vector<std::string> ids_;
    Eigen::VectorXd mu_;
    double total_mass_ = 0.0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
};

/// Energy of f: sum over edges of c(u,v) * (f(u) - f(v))^2. A unit potential
/// drop across a single conductance-c edge has energy c, so the effective
/// resistance of that edge is 1/c.
double dirichlet_energy(const MeasuredNetwork& net, const VertexFunction& f);

/// Bilinear form E(f, g) of the same energy.
double dirichlet_energy(const MeasuredNetwork& net, const VertexFunction& f,
                        const VertexFunction& g);

/// Solves the grounded problem: f fixed on the boundary set, and on interior
/// vertices (L f)(x) = measure(x) * source(x) where L is the conductance
/// Laplacian. `source` in generator units, i.e. source = 1 with zero boundary
/// is the expected-occupation (Poisson) problem. Direct symmetric
/// factorization with iterative refinement to relative residual 1e-12.
VertexFunction solve_grounded(const MeasuredNetwork& net,
                              const std::vector<std::pair<int, double>>& boundary,
                              const VertexFunction& source);

/// Convenience: zero source.
VertexFunction solve_grounded(const MeasuredNetwork& net,
                              const std::vector<std::pair<int, double>>& boundary);

/// JSON file format:
///   {"name": str,
///    "vertices": [{"id": str, "measure": num}, ...],
///    "edges": [{"u": id, "v": id, "conductance": num}, ...]}
/// Indices follow file order.
MeasuredNetwork load_network(const std::string& path);
void save_network(const MeasuredNetwork& net, const std::string& path);
MeasuredNetwork network_from_json_text(const std::string& text);
std::string network_to_json_text(const MeasuredNetwork& net);

} // namespace resform
