#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "resform/network.hpp"

namespace resform {

/// Unit path on n vertices, ids "0".."n-1".
MeasuredNetwork gen_path(int n, double conductance = 1.0, double measure = 1.0);

/// Star with k leaves around center "c"; unit conductances and measures.
MeasuredNetwork gen_star(int leaves);

/// Two vertices "a","b" joined by one edge.
MeasuredNetwork gen_two_state(double mu_a, double mu_b, double conductance);

/// Complete binary tree of the given depth (root at depth 0), unit everything.
MeasuredNetwork gen_binary_tree(int depth);

/// Sierpinski gasket approximation: `level` rounds of triangle subdivision.
/// Integer coordinates on side 2^level; unit conductances on the smallest
/// triangle edges; self-similar measure (each smallest triangle carries mass
/// 3^{-level}, split equally among its corners). Vertex ids are "x_y".
MeasuredNetwork gen_sierpinski(int level);

/// Random recursive gasket: like gen_sierpinski, but every cell independently
/// subdivides either into 3 half-scale cells or into 6 third-scale cells
/// (probability p_fine for the finer rule), drawn deterministically from the
/// seed in depth-first cell order. Coordinates on side 6^level; each cell
/// splits its mass equally among its children.
MeasuredNetwork gen_random_recursive_gasket(int level, std::uint64_t seed,
                                            double p_fine = 0.5);

/// Binary tree with multiplicative vertex masses: the two children of a
/// vertex of mass m get masses w1*m and (1-w1)*m, so every level carries the
/// same total mass and ball masses fluctuate by (w1/(1-w1))^depth across the
/// tree. Unit conductances.
MeasuredNetwork gen_two_weighted_tree(int depth, double w1);

/// Critical branching tree (offspring 0/1/2 with probabilities 1/4,1/2,1/4),
/// grown breadth-first from the seed; attempts are retried until the tree
/// reaches at least half the target size, then growth is truncated at the
/// target. Unit conductances and measures.
MeasuredNetwork gen_gw_dendrite(std::uint64_t seed, int target_vertices);

/// Dispatch on {"generator": name, "params": {...}}.
MeasuredNetwork generate_from_json(const nlohmann::json& spec);

} // namespace resform
