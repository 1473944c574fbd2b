#include "fjsteer/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fjsteer::hull {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double distance_to_segment(const Point2& a, const Point2& b, const Point2& p) {
    const Point2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

}  // namespace

std::vector<Point2> convex_hull_2d(std::vector<Point2> points) {
    std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 3) return points;

    std::vector<Point2> hull(2 * points.size());
    std::size_t k = 0;
    for (const auto& p : points) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);
    return hull;
}

bool inside_convex_polygon(const std::vector<Point2>& polygon, const Point2& p, double slack) {
    if (polygon.empty()) return false;
    if (polygon.size() == 1) return (p - polygon.front()).norm() <= slack;
    if (polygon.size() == 2) return distance_to_segment(polygon[0], polygon[1], p) <= slack;
    for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Point2& a = polygon[i];
        const Point2& b = polygon[(i + 1) % polygon.size()];
        // cross / |ab| is the signed distance of p to the left of edge ab
        if (cross(a, b, p) < -slack * (b - a).norm()) return false;
    }
    return true;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations) {
    const Index n = A.cols();
    if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
    const double tol = 10 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().colwise().sum().maxCoeff() *
                       static_cast<double>(std::max(A.rows(), A.cols()));

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Index> idx;
        for (Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        z = Eigen::VectorXd::Zero(n);
        if (idx.empty()) return;
        Eigen::MatrixXd Ap(A.rows(), static_cast<Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(static_cast<Index>(c)) = A.col(idx[c]);
        const Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Index>(c));
    };

    for (int outer = 0; outer < max_iterations; ++outer) {
        const Eigen::VectorXd grad = A.transpose() * (b - A * x);
        Index best = -1;
        double best_val = tol;
        for (Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_val) {
                best_val = grad(j);
                best = j;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        Eigen::VectorXd z;
        for (int inner = 0; inner < max_iterations; ++inner) {
            solve_passive(z);
            bool feasible = true;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) feasible = false;
            if (feasible) break;

            double alpha = 1.0;
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0)
                    alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && std::abs(x(j)) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0;
                }
        }
        x = z;
    }
    return x;
}

bool in_convex_hull(const Eigen::MatrixXd& vertices, const Eigen::VectorXd& p, double tolerance) {
    const Index n = vertices.cols();
    if (p.size() != n) throw InvalidInput("in_convex_hull: point dimension mismatch");
    if (vertices.rows() == 0) return false;
    if (n == 1) {
        return p(0) >= vertices.col(0).minCoeff() - tolerance && p(0) <= vertices.col(0).maxCoeff() + tolerance;
    }
    if (n == 2) {
        std::vector<Point2> pts;
        for (Index r = 0; r < vertices.rows(); ++r) pts.emplace_back(vertices(r, 0), vertices(r, 1));
        return inside_convex_polygon(convex_hull_2d(std::move(pts)), Point2(p(0), p(1)), tolerance);
    }

    // Find convex weights w reproducing p; the affine row forces sum(w) = 1.
    const Index k = vertices.rows();
    Eigen::MatrixXd M(n + 1, k);
    M.topRows(n) = vertices.transpose();
    M.row(n).setOnes();
    Eigen::VectorXd rhs(n + 1);
    rhs << p, 1.0;
    const Eigen::VectorXd w = nnls(M, rhs);
    return (M * w - rhs).norm() <= tolerance;
}

}  // namespace fjsteer::hull
