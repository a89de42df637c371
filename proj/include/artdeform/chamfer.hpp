#pragma once

#include "artdeform/mesh.hpp"

#include <vector>

namespace artdeform {

/// Nearest-neighbour correspondences behind one Chamfer evaluation.
struct ChamferMatches {
  std::vector<int> p_to_q;  // nearest q for every p
  std::vector<int> q_to_p;  // nearest p for every q
  double forward = 0.0;     // mean squared distance P -> Q
  double backward = 0.0;    // mean squared distance Q -> P
  double value() const { return forward + backward; }
};

/// Symmetric Chamfer distance: mean squared nearest distance P -> Q plus Q -> P.
/// kd-tree accelerated; throws ValidationError on an empty set.
double chamfer_distance(const Points& p, const Points& q);

ChamferMatches chamfer_matches(const Points& p, const Points& q);

}  // namespace artdeform
