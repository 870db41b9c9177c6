#pragma once

// CSV ingestion and output. Readers accept a header row, ignore blank lines and
// lines starting with '#', and throw FormatError with the offending line number.
// Writers print doubles in shortest round-trip form, so reading back a written
// file reproduces the values exactly.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gangtrack/geo_prior.hpp"
#include "gangtrack/inference.hpp"
#include "gangtrack/missing_likelihood.hpp"
#include "gangtrack/predict_eval.hpp"
#include "gangtrack/simgen.hpp"

namespace gangtrack {

std::string format_double(double v);

/// gang_id, day_index, lon, lat. Tracks come back in order of first appearance;
/// a repeated (gang, day) pair is an error.
std::vector<Track> read_observations(std::istream& is);
void write_observations(std::ostream& os, const std::vector<Track>& tracks);

CampSet read_camps(std::istream& is);
void write_camps(std::ostream& os, const CampSet& camps);

struct IntelRecord {
  IntelInput input;
  /// Empty when the input applies to every gang.
  std::string gang_id;
};

/// lon, lat, received_day and an optional gang_id column.
std::vector<IntelRecord> read_intel(std::istream& is);
void write_intel(std::ostream& os, const std::vector<IntelRecord>& intel);

/// Intel inputs that apply to `gang_id`.
std::vector<IntelInput> intel_for(const std::vector<IntelRecord>& intel, const std::string& gang_id);

/// Either sparse rows "row, col, density" (header required, absent cells are 0)
/// or a dense grid of grid.rows() lines with grid.cols() values, row 0 first.
ForestRaster read_forest(std::istream& is, const Grid& grid);
void write_forest(std::ostream& os, const ForestRaster& forest, const Grid& grid);

void write_summaries(std::ostream& os, const std::vector<PosteriorSummary>& summaries);
std::vector<PosteriorSummary> read_summaries(std::istream& is);

/// Particle set plus the resume state of the sequential driver.
void write_snapshot(std::ostream& os, const SequentialState& state);
SequentialState read_snapshot(std::istream& is);

struct DensityRow {
  GeoPoint center;
  double density = 0.0;
};

/// lon, lat, density for every grid cell in index order.
void write_density(std::ostream& os, const Grid& grid, const std::vector<double>& values);
std::vector<DensityRow> read_density(std::istream& is);

void write_assessments(std::ostream& os, const std::vector<AssessmentRecord>& records);
std::vector<AssessmentRecord> read_assessments(std::istream& is);

/// update, day, theta_mean, theta_lo, theta_hi, h_mean, h_lo, h_hi.
void write_study_series(std::ostream& os, const StudySeries& series);

}  // namespace gangtrack
