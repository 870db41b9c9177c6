#pragma once

// Hand-built scenarios shared by the unit tests and the acceptance run.

#include <vector>

#include "gangtrack/geo.hpp"
#include "gangtrack/geo_prior.hpp"

namespace fixture {

using namespace gangtrack;

/// A 24 x 24 grid of 1 km cells where each branch of the marking rules is hit
/// by a known cell. Forest is dense (0.6) west of column 12 and sparse (0.3)
/// east of it; one camp; a single recent sighting so the extended hull is a
/// 10 km disk; three fresh intel inputs (the oldest must be ignored) and one
/// stale one.
struct CaseTable {
  KmScale scale = KmScale::at_latitude(23.1);
  Grid grid{{85.0, 23.0}, 24, 24, 1.0, scale};
  ForestRaster forest;
  CampSet camps;
  std::vector<GeoPoint> recent;
  std::vector<IntelInput> intel;
  int today = 20;

  struct Expectation {
    int row;
    int col;
    int level;
    const char* label;
  };
  std::vector<Expectation> expected{
      {12, 8, 1, "dense forest, far from camps, in hull, no intel"},
      {16, 9, 2, "dense forest, far from camps, in hull, one intel"},
      {19, 11, 3, "dense forest, far from camps, in hull, two intel"},
      {22, 20, 1, "sparse forest, outside hull, one intel"},
      {0, 23, 0, "sparse forest, outside hull, no intel"},
      {12, 5, 0, "dense forest in hull but within 3 km of a camp"},
      {0, 0, 0, "dense forest outside hull, only stale intel nearby"},
      {10, 15, 0, "sparse forest in hull, no intel"},
      {14, 14, 1, "sparse forest in hull, one intel"},
  };

  CaseTable() {
    forest.density.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) forest.density[i] = grid.col_of(i) < 12 ? 0.6 : 0.3;
    camps = {grid.center(12, 4)};
    recent = {grid.center(12, 12)};
    intel = {
        {grid.center(20, 20), 18},
        {grid.center(22, 2), 15},
        {grid.center(16, 9), 12},  // third most recent: ignored
        {grid.center(2, 2), 3},    // stale
    };
  }
};

}  // namespace fixture
