#pragma once

#include <Eigen/Core>

#include <vector>

namespace gdd {

// Exact nearest-neighbor index over the rows of a point matrix. Ties on
// distance resolve to the lowest row index, so queries are deterministic.
// Thread-safe for concurrent nearest() calls once built.
class KdTree {
public:
    explicit KdTree(Eigen::MatrixXd points);

    // Index of the nearest row; optionally reports the squared distance.
    int nearest(const Eigen::RowVectorXd& query, double* dist_sq = nullptr) const;

    int size() const { return static_cast<int>(pts_.rows()); }

private:
    struct Node {
        int axis = -1;      // -1 marks a leaf
        double split = 0.0; // splitting coordinate
        int begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(int begin, int end);
    void search(int node, const Eigen::RowVectorXd& query, int& best, double& best_d) const;

    Eigen::MatrixXd pts_;
    std::vector<int> order_; // row indices, partitioned by the tree
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace gdd
