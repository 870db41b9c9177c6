#include "gangtrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "gangtrack/errors.hpp"

namespace gangtrack {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Row {
  int line = 0;
  std::vector<std::string> cells;
};

// Non-empty, non-comment lines.
std::vector<Row> read_rows(std::istream& is) {
  std::vector<Row> rows;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back({number, split(t)});
  }
  return rows;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw FormatError("line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(line, "not a number: '" + s + "'");
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) fail(line, "not an integer: '" + s + "'");
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Column positions by header name.
class Header {
 public:
  Header(const Row& row, const std::vector<std::string>& required) : line_(row.line) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) index_[lower(row.cells[i])] = i;
    for (const auto& name : required) {
      if (!index_.contains(name)) fail(line_, "missing column '" + name + "'");
    }
    width_ = row.cells.size();
  }

  bool has(const std::string& name) const { return index_.contains(name); }

  const std::string& get(const Row& row, const std::string& name) const {
    if (row.cells.size() != width_) fail(row.line, "expected " + std::to_string(width_) + " fields");
    return row.cells[index_.at(name)];
  }

 private:
  int line_;
  std::size_t width_ = 0;
  std::map<std::string, std::size_t> index_;
};

std::vector<Row> require_header(std::istream& is, const char* what) {
  auto rows = read_rows(is);
  if (rows.empty()) throw FormatError(std::string("empty ") + what + " file");
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<Track> read_observations(std::istream& is) {
  auto rows = read_rows(is);
  if (rows.empty()) return {};
  const Header header(rows.front(), {"gang_id", "day_index", "lon", "lat"});
  std::vector<Track> tracks;
  std::map<std::string, std::size_t> slot;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto& id = header.get(row, "gang_id");
    if (id.empty()) fail(row.line, "empty gang_id");
    const int day = parse_int(header.get(row, "day_index"), row.line);
    const GeoPoint p{parse_double(header.get(row, "lon"), row.line), parse_double(header.get(row, "lat"), row.line)};
    auto [it, fresh] = slot.try_emplace(id, tracks.size());
    if (fresh) tracks.push_back(Track{id, {}});
    auto& obs = tracks[it->second].observations;
    if (!obs.emplace(day, p).second) fail(row.line, "duplicate day " + std::to_string(day) + " for gang " + id);
  }
  return tracks;
}

void write_observations(std::ostream& os, const std::vector<Track>& tracks) {
  os << "gang_id,day_index,lon,lat\n";
  for (const auto& t : tracks) {
    for (const auto& [day, p] : t.observations) {
      os << t.gang_id << ',' << day << ',' << format_double(p.lon) << ',' << format_double(p.lat) << '\n';
    }
  }
}

CampSet read_camps(std::istream& is) {
  auto rows = read_rows(is);
  if (rows.empty()) return {};
  const Header header(rows.front(), {"lon", "lat"});
  CampSet camps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    camps.push_back({parse_double(header.get(rows[r], "lon"), rows[r].line),
                     parse_double(header.get(rows[r], "lat"), rows[r].line)});
  }
  return camps;
}

void write_camps(std::ostream& os, const CampSet& camps) {
  os << "lon,lat\n";
  for (const auto& c : camps) os << format_double(c.lon) << ',' << format_double(c.lat) << '\n';
}

std::vector<IntelRecord> read_intel(std::istream& is) {
  auto rows = read_rows(is);
  if (rows.empty()) return {};
  const Header header(rows.front(), {"lon", "lat", "received_day"});
  const bool with_gang = header.has("gang_id");
  std::vector<IntelRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    IntelRecord rec;
    rec.input.location = {parse_double(header.get(row, "lon"), row.line), parse_double(header.get(row, "lat"), row.line)};
    rec.input.received_day = parse_int(header.get(row, "received_day"), row.line);
    if (rec.input.received_day < 1) fail(row.line, "received_day must be at least 1");
    if (with_gang) rec.gang_id = header.get(row, "gang_id");
    out.push_back(std::move(rec));
  }
  return out;
}

void write_intel(std::ostream& os, const std::vector<IntelRecord>& intel) {
  os << "lon,lat,received_day,gang_id\n";
  for (const auto& r : intel) {
    os << format_double(r.input.location.lon) << ',' << format_double(r.input.location.lat) << ','
       << r.input.received_day << ',' << r.gang_id << '\n';
  }
}

std::vector<IntelInput> intel_for(const std::vector<IntelRecord>& intel, const std::string& gang_id) {
  std::vector<IntelInput> out;
  for (const auto& r : intel) {
    if (r.gang_id.empty() || r.gang_id == gang_id) out.push_back(r.input);
  }
  return out;
}

ForestRaster read_forest(std::istream& is, const Grid& grid) {
  auto rows = require_header(is, "forest");
  ForestRaster forest;
  forest.density.assign(grid.size(), 0.0);
  const bool dense = !rows.front().cells.empty() && [&] {
    double v = 0.0;
    const auto& s = rows.front().cells.front();
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
  }();
  if (dense) {
    if (rows.size() != static_cast<std::size_t>(grid.rows())) {
      throw FormatError("dense forest grid has " + std::to_string(rows.size()) + " rows, expected " +
                        std::to_string(grid.rows()));
    }
    for (int r = 0; r < grid.rows(); ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (row.cells.size() != static_cast<std::size_t>(grid.cols())) {
        fail(row.line, "expected " + std::to_string(grid.cols()) + " values");
      }
      for (int c = 0; c < grid.cols(); ++c) {
        forest.density[grid.index(r, c)] = parse_double(row.cells[static_cast<std::size_t>(c)], row.line);
      }
    }
  } else {
    const Header header(rows.front(), {"row", "col", "density"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      const int r = parse_int(header.get(row, "row"), row.line);
      const int c = parse_int(header.get(row, "col"), row.line);
      if (r < 0 || r >= grid.rows() || c < 0 || c >= grid.cols()) fail(row.line, "cell outside the grid");
      forest.density[grid.index(r, c)] = parse_double(header.get(row, "density"), row.line);
    }
  }
  forest.validate(grid);
  return forest;
}

void write_forest(std::ostream& os, const ForestRaster& forest, const Grid& grid) {
  forest.validate(grid);
  os << "row,col,density\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    os << grid.row_of(i) << ',' << grid.col_of(i) << ',' << format_double(forest.density[i]) << '\n';
  }
}

void write_summaries(std::ostream& os, const std::vector<PosteriorSummary>& summaries) {
  os << "day,theta_mean,theta_lo,theta_hi,h_mean,h_lo,h_hi,q0_prior,q0_posterior,gang_id\n";
  for (const auto& s : summaries) {
    os << s.day << ',' << format_double(s.theta.mean) << ',' << format_double(s.theta.lo) << ','
       << format_double(s.theta.hi) << ',' << format_double(s.h.mean) << ',' << format_double(s.h.lo) << ','
       << format_double(s.h.hi) << ',' << format_double(s.q0_prior) << ',' << format_double(s.q0_posterior) << ','
       << s.gang_id << '\n';
  }
}

std::vector<PosteriorSummary> read_summaries(std::istream& is) {
  auto rows = require_header(is, "summary");
  const Header header(rows.front(), {"day", "theta_mean", "theta_lo", "theta_hi", "h_mean", "h_lo", "h_hi",
                                     "q0_prior", "q0_posterior"});
  std::vector<PosteriorSummary> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto num = [&](const char* name) { return parse_double(header.get(row, name), row.line); };
    PosteriorSummary s;
    s.day = parse_int(header.get(row, "day"), row.line);
    s.theta = {num("theta_mean"), num("theta_lo"), num("theta_hi")};
    s.h = {num("h_mean"), num("h_lo"), num("h_hi")};
    s.q0_prior = num("q0_prior");
    s.q0_posterior = num("q0_posterior");
    if (header.has("gang_id")) s.gang_id = header.get(row, "gang_id");
    out.push_back(std::move(s));
  }
  return out;
}

void write_snapshot(std::ostream& os, const SequentialState& state) {
  const auto& ps = state.particles;
  os << "# initialized=" << (state.initialized ? 1 : 0) << '\n'
     << "# updates=" << state.updates << '\n'
     << "# last_day=" << state.last_day << '\n'
     << "# day=" << ps.day << '\n'
     << "# nominal_size=" << ps.nominal_size << '\n'
     << "# expert_mass=" << format_double(ps.expert_mass) << '\n'
     << "theta,h,weight\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    os << format_double(ps.particles[i].theta) << ',' << format_double(ps.particles[i].h) << ','
       << format_double(ps.weights[i]) << '\n';
  }
}

SequentialState read_snapshot(std::istream& is) {
  std::map<std::string, std::string> meta;
  std::stringstream body;
  std::string line;
  while (std::getline(is, line)) {
    const auto t = trim(line);
    if (t.rfind("#", 0) == 0) {
      const auto eq = t.find('=');
      if (eq != std::string::npos) meta[trim(std::string_view(t).substr(1, eq - 1))] = trim(std::string_view(t).substr(eq + 1));
      continue;
    }
    body << line << '\n';
  }
  for (const char* key : {"initialized", "updates", "last_day", "day", "nominal_size", "expert_mass"}) {
    if (!meta.contains(key)) throw FormatError(std::string("snapshot lacks '") + key + "'");
  }
  SequentialState state;
  state.initialized = parse_int(meta["initialized"], 0) != 0;
  state.updates = parse_int(meta["updates"], 0);
  state.last_day = parse_int(meta["last_day"], 0);
  auto& ps = state.particles;
  ps.day = parse_int(meta["day"], 0);
  ps.nominal_size = parse_int(meta["nominal_size"], 0);
  ps.expert_mass = parse_double(meta["expert_mass"], 0);
  const auto rows = require_header(body, "snapshot");
  const Header header(rows.front(), {"theta", "h", "weight"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    ps.particles.push_back({parse_double(header.get(row, "theta"), row.line), parse_double(header.get(row, "h"), row.line)});
    ps.weights.push_back(parse_double(header.get(row, "weight"), row.line));
  }
  return state;
}

void write_density(std::ostream& os, const Grid& grid, const std::vector<double>& values) {
  if (values.size() != grid.size()) throw InvalidParameter("density does not match the grid");
  os << "lon,lat,density\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto c = grid.center(i);
    os << format_double(c.lon) << ',' << format_double(c.lat) << ',' << format_double(values[i]) << '\n';
  }
}

std::vector<DensityRow> read_density(std::istream& is) {
  auto rows = require_header(is, "density");
  const Header header(rows.front(), {"lon", "lat", "density"});
  std::vector<DensityRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out.push_back({{parse_double(header.get(row, "lon"), row.line), parse_double(header.get(row, "lat"), row.line)},
                   parse_double(header.get(row, "density"), row.line)});
  }
  return out;
}

void write_assessments(std::ostream& os, const std::vector<AssessmentRecord>& records) {
  os << "gang_id,instance,day,ram_km2,aupc_km,variant\n";
  for (const auto& r : records) {
    os << r.gang_id << ',' << r.instance << ',' << r.day << ',' << format_double(r.ram_km2) << ','
       << format_double(r.aupc_km) << ',' << r.variant << '\n';
  }
}

std::vector<AssessmentRecord> read_assessments(std::istream& is) {
  auto rows = require_header(is, "assessment");
  const Header header(rows.front(), {"gang_id", "instance", "day", "ram_km2", "aupc_km", "variant"});
  std::vector<AssessmentRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    out.push_back({header.get(row, "gang_id"), parse_int(header.get(row, "instance"), row.line),
                   parse_int(header.get(row, "day"), row.line), parse_double(header.get(row, "ram_km2"), row.line),
                   parse_double(header.get(row, "aupc_km"), row.line), header.get(row, "variant")});
  }
  return out;
}

void write_study_series(std::ostream& os, const StudySeries& series) {
  os << "update,day,theta_mean,theta_lo,theta_hi,h_mean,h_lo,h_hi\n";
  for (std::size_t k = 0; k < series.updates.size(); ++k) {
    const auto& s = series.updates[k];
    os << k + 1 << ',' << s.day << ',' << format_double(s.theta.mean) << ',' << format_double(s.theta.lo) << ','
       << format_double(s.theta.hi) << ',' << format_double(s.h.mean) << ',' << format_double(s.h.lo) << ','
       << format_double(s.h.hi) << '\n';
  }
}

}  // namespace gangtrack
