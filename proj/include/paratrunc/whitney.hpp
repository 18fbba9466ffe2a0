#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "paratrunc/grid.hpp"
#include "paratrunc/maximal.hpp"

namespace paratrunc {

using Mask = std::vector<std::uint8_t>;

/// Cover of an open node set O by node-centred α-parabolic cylinders, with
/// partition weights once partition_of_unity has run.
struct WhitneyCover {
  GridSpec grid;
  double alpha = 1.0;
  std::vector<Cylinder> cylinders;
  /// ρ_j as (node, value) pairs on the nodes where it is positive.
  std::vector<std::vector<std::pair<std::size_t, double>>> rho;
  /// A_k: indices j whose ¾-cylinder shares a node with that of k.
  std::vector<std::vector<int>> neighbours;
};

/// α-parabolic distance from each node to the nearest node outside O
/// (0 off O).
std::vector<double> complement_distance(const Mask& o, const GridSpec& g, double alpha);

/// Builds the cover. Every selected radius r is dyadic in h with
/// 8r < dist(centre, O^c) ≤ 16r. Throws when O reaches the outer grid faces.
WhitneyCover whitney_cover(const Mask& o, const GridSpec& g, double alpha);

/// Tensor bump equal to 1 on ½Q, vanishing off ¾Q, C² piecewise quintic.
double cover_bump(const GridSpec& g, const Cylinder& q, double alpha, int k, int i, int j);

/// Fills rho (normalised bumps) and neighbours.
void partition_of_unity(WhitneyCover& cover);

/// Membership of a node in σQ.
bool in_scaled(const GridSpec& g, const Cylinder& q, double alpha, double sigma, int k, int i, int j);

struct CoverDiagnostics {
  std::size_t cylinders = 0;
  std::size_t half_cover_mismatch = 0;   ///< nodes where ∪½Q_j and O differ
  std::size_t inner_violations = 0;      ///< j with 8Q_j ⊄ O
  std::size_t outer_violations = 0;      ///< j with 16Q_j ⊂ O
  std::size_t radius_violations = 0;     ///< intersecting pairs with r ratio outside [½, 2]
  std::size_t quarter_overlaps = 0;      ///< pairs whose ¼-cylinders share a node
  int max_overlap = 0;                   ///< max number of Q_j containing one node
  int max_overlap_4q = -1;               ///< same for 4Q_j (−1 when not measured)
  int max_neighbours = 0;                ///< max #A_k
  double min_fat_ratio = 0.0;            ///< min |Q_j ∩ Q_k| / max(|Q_j|, |Q_k|) over j ∈ A_k
  std::size_t bump_sandwich_violations = 0;  ///< χ_{½Q} ≤ θ_j ≤ χ_{¾Q} failures
  std::size_t rho_support_violations = 0;    ///< ρ_j > 0 off ¾Q_j
  double partition_error = 0.0;          ///< max |Σ_j ρ_j − 1| on O
  double local_partition_error = 0.0;    ///< max |Σ_{j∈A_k} ρ_j − 1| on ¾Q_k
  double derivative_bound = 0.0;         ///< max_j of ‖ρ‖ + r‖∇ρ‖ + r²‖∇²ρ‖ + αr²‖∂_t ρ‖
};

CoverDiagnostics check_cover(const WhitneyCover& cover, const Mask& o, bool measure_4q);

}  // namespace paratrunc
