#pragma once

#include "artdeform/mesh.hpp"

#include <vector>

namespace artdeform {

/// Static 3-d tree over a point block for exact nearest-neighbour queries.
/// The tree copies the points; ties resolve to the lowest point index.
class KdTree {
 public:
  explicit KdTree(const Points& points);

  struct Hit {
    int index = -1;
    double squared_distance = 0.0;
  };

  Hit nearest(const Vec3& query) const;
  int size() const { return static_cast<int>(points_.rows()); }

 private:
  struct Node {
    int begin, end;  // range into order_
    int left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };

  int build(int begin, int end);
  void search(int node, const Vec3& q, Hit& best) const;

  Points points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace artdeform
