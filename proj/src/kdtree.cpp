#include "gdd/kdtree.hpp"

#include "gdd/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace gdd {

namespace {
constexpr int kLeafSize = 8;
}

KdTree::KdTree(Eigen::MatrixXd points) : pts_(std::move(points)) {
    if (pts_.rows() == 0) throw ValidationError("KdTree needs at least one point");
    order_.resize(static_cast<size_t>(pts_.rows()));
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(static_cast<size_t>(2 * pts_.rows() / kLeafSize + 2));
    root_ = build(0, static_cast<int>(pts_.rows()));
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[static_cast<size_t>(id)].begin = begin;
    nodes_[static_cast<size_t>(id)].end = end;
    if (end - begin <= kLeafSize) return id;

    // Split along the axis of largest spread within this span.
    int axis = 0;
    double best_spread = -1.0;
    for (int c = 0; c < pts_.cols(); ++c) {
        double lo = pts_(order_[static_cast<size_t>(begin)], c), hi = lo;
        for (int t = begin + 1; t < end; ++t) {
            const double v = pts_(order_[static_cast<size_t>(t)], c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            axis = c;
        }
    }

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double va = pts_(a, axis), vb = pts_(b, axis);
                         return va < vb || (va == vb && a < b);
                     });

    nodes_[static_cast<size_t>(id)].axis = axis;
    nodes_[static_cast<size_t>(id)].split = pts_(order_[static_cast<size_t>(mid)], axis);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[static_cast<size_t>(id)].left = left;
    nodes_[static_cast<size_t>(id)].right = right;
    return id;
}

void KdTree::search(int node, const Eigen::RowVectorXd& query, int& best, double& best_d) const {
    const Node& nd = nodes_[static_cast<size_t>(node)];
    if (nd.axis < 0) {
        for (int t = nd.begin; t < nd.end; ++t) {
            const int row = order_[static_cast<size_t>(t)];
            const double d = (pts_.row(row) - query).squaredNorm();
            if (d < best_d || (d == best_d && row < best)) {
                best = row;
                best_d = d;
            }
        }
        return;
    }
    const double diff = query[nd.axis] - nd.split;
    const int near = diff < 0.0 ? nd.left : nd.right;
    const int far = diff < 0.0 ? nd.right : nd.left;
    search(near, query, best, best_d);
    // <= keeps equal-distance candidates reachable so the lowest index wins.
    if (diff * diff <= best_d) search(far, query, best, best_d);
}

int KdTree::nearest(const Eigen::RowVectorXd& query, double* dist_sq) const {
    if (query.size() != pts_.cols())
        throw ValidationError("KdTree query dimension mismatch");
    int best = static_cast<int>(pts_.rows());
    double best_d = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_d);
    if (dist_sq) *dist_sq = best_d;
    return best;
}

} // namespace gdd
