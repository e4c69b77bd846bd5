#include "gdd/evaluation.hpp"

#include "gdd/descriptor.hpp"
#include "gdd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

namespace gdd {

std::vector<double> default_thresholds() {
    std::vector<double> t;
    t.reserve(51);
    for (int i = 0; i <= 50; ++i) t.push_back(i * 0.005);
    return t;
}

DistortionCurve distortion_curve(const Correspondence& corr, const Correspondence& truth,
                                 const TriangleMesh& mesh2, const std::vector<double>& thresholds,
                                 GeodesicSolver solver) {
    const int n2 = static_cast<int>(mesh2.vertices.rows());
    if (corr.map.empty()) throw ValidationError("distortion_curve: empty correspondence");
    if (corr.map.size() != truth.map.size())
        throw ValidationError("distortion_curve: correspondence covers " +
                              std::to_string(corr.map.size()) + " vertices, ground truth " +
                              std::to_string(truth.map.size()));
    for (const auto* m : {&corr.map, &truth.map})
        for (int t : *m)
            if (t < 0 || t >= n2)
                throw ValidationError("distortion_curve: target index out of range");
    if (thresholds.empty()) throw ValidationError("distortion_curve: no thresholds");
    if (thresholds.front() < 0.0)
        throw ValidationError("distortion_curve: thresholds must be non-negative");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw ValidationError("distortion_curve: thresholds must be ascending");

    // One distance field per distinct source vertex; source from whichever
    // side repeats more, so constant or near-constant maps stay cheap.
    auto distinct = [](const std::vector<int>& m) {
        std::vector<int> d = m;
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
        return d;
    };
    std::vector<int> truth_sources = distinct(truth.map);
    std::vector<int> corr_sources = distinct(corr.map);
    const bool corr_side = corr_sources.size() < truth_sources.size();
    const std::vector<int>& sources = corr_side ? corr_sources : truth_sources;
    const std::vector<int>& keyed = corr_side ? corr.map : truth.map;
    const std::vector<int>& lookup = corr_side ? truth.map : corr.map;

    const Eigen::MatrixXd rows = geodesic_rows(mesh2, sources, solver);
    std::unordered_map<int, int> row_of;
    row_of.reserve(sources.size());
    for (size_t s = 0; s < sources.size(); ++s) row_of[sources[s]] = static_cast<int>(s);

    const double norm = std::sqrt(total_area(mesh2));
    std::vector<double> errors(corr.map.size());
    for (size_t v = 0; v < corr.map.size(); ++v)
        errors[v] = rows(row_of.at(keyed[v]), lookup[v]) / norm;
    std::sort(errors.begin(), errors.end());

    DistortionCurve curve;
    curve.thresholds = thresholds;
    curve.fractions.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto it = std::upper_bound(errors.begin(), errors.end(), t);
        curve.fractions.push_back(static_cast<double>(it - errors.begin()) /
                                  static_cast<double>(errors.size()));
    }
    return curve;
}

std::vector<ObjectiveRow> objective_table(
    const std::vector<std::pair<std::string, Correspondence>>& corrs, const TriangleMesh& mesh1,
    const TriangleMesh& mesh2, int sample_size, unsigned seed, GeodesicSolver solver) {
    std::vector<ObjectiveRow> rows;
    rows.reserve(corrs.size());
    for (const auto& [name, corr] : corrs) {
        const GhObjective obj = gh_objective_sampled(corr, mesh1, mesh2, sample_size, seed, solver);
        rows.push_back({name, obj.rms, obj.raw_squared_sum, obj.sample_size});
    }
    return rows;
}

} // namespace gdd
