#pragma once

#include "fjsteer/types.hpp"

#include <vector>

namespace fjsteer::hull {

using Point2 = Eigen::Vector2d;

/// Andrew's monotone chain. Counter-clockwise, no repeated or collinear
/// vertices; degenerate inputs give 1 or 2 vertices.
std::vector<Point2> convex_hull_2d(std::vector<Point2> points);

/// Signed distance-style test against a counter-clockwise convex polygon,
/// tolerating points up to `slack` outside an edge.
bool inside_convex_polygon(const std::vector<Point2>& polygon, const Point2& p, double slack);

/// Lawson-Hanson non-negative least squares: argmin ||A w - b||, w >= 0.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations = 0);

/// Membership of `p` in the convex hull of the rows of `vertices` (k x n).
/// n = 1 uses the interval, n = 2 the polygon test, larger n a convex-weight
/// feasibility search. `tolerance` is the allowed distance outside the hull.
bool in_convex_hull(const Eigen::MatrixXd& vertices, const Eigen::VectorXd& p, double tolerance);

}  // namespace fjsteer::hull
