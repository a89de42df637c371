#pragma once

#include <Eigen/Core>

#include <vector>

namespace artdeform {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols), via the
/// shortest-augmenting-path Hungarian method, O(rows^2 * cols). Among equal-cost
/// candidates the lowest column index is taken first, so results are deterministic.
/// Returns the column assigned to each row. Throws ShapeError if rows > cols.
std::vector<int> linear_sum_assignment(const Eigen::MatrixXd& cost);

}  // namespace artdeform
