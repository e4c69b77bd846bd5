#include "gdd/descriptor.hpp"

#include "gdd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace gdd {

namespace {

void check_index(const GeodesicDistanceDescriptor& g, int i, int j) {
    const int n = static_cast<int>(g.X.rows());
    if (i < 0 || i >= n || j < 0 || j >= n)
        throw ValidationError("descriptor index out of range");
}

} // namespace

GeodesicDistanceDescriptor build_gdd(const GeodesicBasis& basis) {
    const int k_in = static_cast<int>(basis.eigenvalues.size());
    const double max_mag = k_in ? basis.eigenvalues.cwiseAbs().maxCoeff() : 0.0;

    std::vector<int> keep;
    for (int c = 0; c < k_in; ++c)
        if (std::abs(basis.eigenvalues[c]) > 1e-12 * max_mag) keep.push_back(c);

    GeodesicDistanceDescriptor g;
    const int k = static_cast<int>(keep.size());
    g.X.resize(basis.Q.rows(), k);
    g.signature.resize(k);
    g.eigenvalues.resize(k);
    for (int c = 0; c < k; ++c) {
        const double lambda = basis.eigenvalues[keep[static_cast<size_t>(c)]];
        g.X.col(c) = basis.Q.col(keep[static_cast<size_t>(c)]) * std::sqrt(std::abs(lambda));
        g.signature[c] = lambda > 0.0 ? 1 : -1;
        g.eigenvalues[c] = lambda;
    }
    return g;
}

DescriptorRow descriptor_row(const GeodesicDistanceDescriptor& g, int i) {
    check_index(g, i, i);
    DescriptorRow row;
    row.values = g.X.row(i);
    row.signature = g.signature;
    return row;
}

double descriptor_distance(const GeodesicDistanceDescriptor& g, int i, int j) {
    check_index(g, i, j);
    return (g.X.row(i) - g.X.row(j)).norm();
}

double reconstruct_distance(const GeodesicDistanceDescriptor& g, int i, int j) {
    check_index(g, i, j);
    double sum = 0.0;
    for (int c = 0; c < g.X.cols(); ++c)
        sum += static_cast<double>(g.signature[c]) * (g.X(i, c) * g.X(j, c));
    return sum;
}

GhObjective gh_objective_sampled(const Correspondence& corr, const TriangleMesh& mesh1,
                                 const TriangleMesh& mesh2, int sample_size, unsigned seed,
                                 GeodesicSolver solver) {
    const int n1 = static_cast<int>(mesh1.vertices.rows());
    const int n2 = static_cast<int>(mesh2.vertices.rows());
    if (static_cast<int>(corr.map.size()) != n1)
        throw ValidationError("gh_objective_sampled: correspondence must cover every vertex of mesh 1");
    for (int t : corr.map)
        if (t < 0 || t >= n2)
            throw ValidationError("gh_objective_sampled: correspondence entry out of range");
    if (sample_size < 1 || sample_size > n2 || sample_size > n1)
        throw ValidationError("gh_objective_sampled: sample_size must be in [1, min(n1, n2)], got " +
                              std::to_string(sample_size));

    // Sample source vertices without replacement; the matched pairs
    // (s, corr[s]) select the rows and columns of both distance matrices.
    std::vector<int> pool(static_cast<size_t>(n1));
    std::iota(pool.begin(), pool.end(), 0);
    std::mt19937 rng(seed);
    for (int i = 0; i < sample_size; ++i) {
        std::uniform_int_distribution<int> pick(i, n1 - 1);
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(pick(rng))]);
    }
    std::vector<int> sources(pool.begin(), pool.begin() + sample_size);
    std::vector<int> targets(static_cast<size_t>(sample_size));
    for (int i = 0; i < sample_size; ++i)
        targets[static_cast<size_t>(i)] = corr.map[static_cast<size_t>(sources[static_cast<size_t>(i)])];

    const Eigen::MatrixXd rows1 = geodesic_rows(mesh1, sources, solver);
    const Eigen::MatrixXd rows2 = geodesic_rows(mesh2, targets, solver);

    double sum = 0.0;
    for (int a = 0; a < sample_size; ++a) {
        for (int b = 0; b < sample_size; ++b) {
            const double diff = rows1(a, sources[static_cast<size_t>(b)]) -
                                rows2(a, targets[static_cast<size_t>(b)]);
            sum += diff * diff;
        }
    }

    GhObjective result;
    result.raw_squared_sum = sum;
    result.sample_size = sample_size;
    result.rms = std::sqrt(sum / (static_cast<double>(sample_size) * sample_size));
    return result;
}

} // namespace gdd
