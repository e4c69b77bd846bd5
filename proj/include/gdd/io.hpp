#pragma once

#include "gdd/correspondence.hpp"
#include "gdd/descriptor.hpp"
#include "gdd/evaluation.hpp"
#include "gdd/lbo.hpp"
#include "gdd/lowrank.hpp"
#include "gdd/matching.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gdd {

// All artifact files are CSV with one leading "# {...}" JSON comment line
// carrying provenance and any vector-valued metadata. Numbers round-trip
// exactly, so re-reading a file reproduces the values bit for bit.

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::string& header_json = "");
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::string* header_json = nullptr);

// FNV-1a over the raw file bytes, for manifest provenance.
std::uint64_t file_content_hash(const std::string& path);
std::string file_hash_hex(const std::string& path);

// Typed artifacts. `provenance` is free-form text (typically a JSON object)
// stored under the "provenance" key of the header line.
void write_basis(const std::string& path, const GeodesicBasis& basis,
                 const std::string& provenance = "");
GeodesicBasis read_basis(const std::string& path);

void write_lbo_basis(const std::string& path, const LboBasis& basis,
                     const std::string& provenance = "");
LboBasis read_lbo_basis(const std::string& path);

void write_gdd(const std::string& path, const GeodesicDistanceDescriptor& gdd,
               const std::string& provenance = "");
GeodesicDistanceDescriptor read_gdd(const std::string& path);

// Two-column CSV: "source,target" per line.
void write_correspondence(const std::string& path, const Correspondence& corr,
                          const std::string& provenance = "");
// Sources must cover 0..n-1 exactly once (any order).
Correspondence read_correspondence(const std::string& path);
// Arbitrary distinct index pairs.
LandmarkSet read_landmarks(const std::string& path);

void write_curve(const std::string& path, const DistortionCurve& curve,
                 const std::string& provenance = "");
void write_objective(const std::string& path, const std::vector<ObjectiveRow>& rows,
                     const std::string& provenance = "");
DistortionCurve read_curve(const std::string& path);

// Flat "key = value" lines; '#' starts a comment; later keys override
// earlier ones. Unknown keys are the caller's business.
std::map<std::string, std::string> read_config(const std::string& path);

} // namespace gdd
