#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifiseg/distance.hpp"
#include "wifiseg/eval.hpp"
#include "wifiseg/likelihood.hpp"
#include "wifiseg/motionseg.hpp"

namespace wifiseg::io {

/// Writes through a temporary sibling file and renames it into place.
void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& writer);

std::string read_file(const std::filesystem::path& path);

/// FNV-1a 64-bit hash of `text`, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

// segment_id,device,start_ms,end_ms,n_observations
void write_segments(std::ostream& out, std::span<const WifiSegment> segs);
struct SegmentRow {
  std::size_t segment_id;
  std::string device;
  Timestamp start;
  Timestamp end;
  std::size_t n_observations;
};
std::vector<SegmentRow> read_segments(std::istream& in);

// index,timestamp_ms,parity
void write_boundaries(std::ostream& out, const MotionSegmentation& seg);

nlohmann::json to_json(const SegmentFingerprint& fp);
SegmentFingerprint fingerprint_from_json(const nlohmann::json& j);
void write_fingerprints(std::ostream& out, std::span<const SegmentFingerprint> fps);
std::vector<SegmentFingerprint> read_fingerprints(std::istream& in);

nlohmann::json matrix_metadata(const DistanceMatrix& m);
/// Square CSV; the header row and first column carry segment ids.
void write_matrix_csv(std::ostream& out, const DistanceMatrix& m);
/// n*n little-endian IEEE-754 doubles, row-major.
void write_matrix_binary(std::ostream& out, const DistanceMatrix& m);
DistanceMatrix read_matrix(std::istream& binary, const nlohmann::json& metadata);
DistanceMatrix read_matrix_csv(std::istream& in);

// threshold,fpr,tpr
void write_roc(std::ostream& out, const RocCurve& curve);

nlohmann::json to_json(const EstimatorOptions& o);
EstimatorOptions estimator_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvaluationGrid& g);
EvaluationGrid grid_from_json(const nlohmann::json& j);

}  // namespace wifiseg::io
