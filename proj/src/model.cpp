#include "catedrift/model.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace catedrift {

namespace {

std::string record_name(std::int64_t t, std::int64_t subject) {
  return "record (t=" + std::to_string(t) + ", i=" + std::to_string(subject) + ")";
}

void check_row(const Observation& row, int d) {
  if (static_cast<int>(row.x.size()) != d) {
    throw StreamError(StreamErrorKind::DimensionMismatch,
                      record_name(row.t, row.subject) + ": covariate dimension " +
                          std::to_string(row.x.size()) + ", expected " + std::to_string(d));
  }
  if (row.z != 0 && row.z != 1) {
    throw StreamError(StreamErrorKind::NonBinaryTreatment,
                      record_name(row.t, row.subject) + ": z=" + std::to_string(row.z));
  }
  if (!std::isfinite(row.y)) {
    throw StreamError(StreamErrorKind::NonFiniteValue,
                      record_name(row.t, row.subject) + ": non-finite outcome");
  }
  for (double v : row.x) {
    if (!std::isfinite(v)) {
      throw StreamError(StreamErrorKind::NonFiniteValue,
                        record_name(row.t, row.subject) + ": non-finite covariate");
    }
  }
}

}  // namespace

const std::vector<TimeBatch>& validate_stream(const std::vector<TimeBatch>& batches,
                                              const StreamMeta& meta) {
  std::int64_t expected_t = batches.empty() ? 0 : batches.front().t;
  for (const TimeBatch& batch : batches) {
    if (batch.t != expected_t) {
      throw StreamError(StreamErrorKind::NonContiguousTime,
                        "batch t=" + std::to_string(batch.t) + ", expected t=" +
                            std::to_string(expected_t));
    }
    ++expected_t;
    std::unordered_set<std::int64_t> seen;
    for (const Observation& row : batch.rows) {
      if (row.t != batch.t) {
        throw StreamError(StreamErrorKind::NonContiguousTime,
                          record_name(row.t, row.subject) + ": row time differs from batch t=" +
                              std::to_string(batch.t));
      }
      if (!seen.insert(row.subject).second) {
        throw StreamError(StreamErrorKind::DuplicateSubject,
                          record_name(row.t, row.subject) + ": duplicate subject id");
      }
      check_row(row, meta.d);
    }
  }
  return batches;
}

std::vector<TimeBatch> read_ndjson(std::istream& in) {
  std::vector<TimeBatch> batches;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    Observation row;
    row.t = j.at("t").get<std::int64_t>();
    row.subject = j.at("i").get<std::int64_t>();
    row.y = j.at("y").get<double>();
    row.x = j.at("x").get<std::vector<double>>();
    row.z = j.at("z").get<int>();
    if (batches.empty() || batches.back().t != row.t) {
      batches.push_back(TimeBatch{row.t, {}});
    }
    batches.back().rows.push_back(std::move(row));
  }
  return batches;
}

std::vector<TimeBatch> read_csv(std::istream& in) {
  std::vector<TimeBatch> batches;
  std::string line;
  if (!std::getline(in, line)) return batches;  // header required
  std::size_t ncols = 1;
  for (char c : line) ncols += (c == ',');
  if (ncols < 4) throw std::runtime_error("csv: expected header t,i,y,x1..xd,z");
  const int d = static_cast<int>(ncols) - 4;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != d + 4) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": wrong column count");
    }
    Observation row;
    row.t = std::stoll(cells[0]);
    row.subject = std::stoll(cells[1]);
    row.y = std::stod(cells[2]);
    for (int k = 0; k < d; ++k) row.x.push_back(std::stod(cells[3 + k]));
    row.z = std::stoi(cells.back());
    if (batches.empty() || batches.back().t != row.t) {
      batches.push_back(TimeBatch{row.t, {}});
    }
    batches.back().rows.push_back(std::move(row));
  }
  return batches;
}

void write_ndjson(std::ostream& out, std::span<const TimeBatch> batches) {
  for (const TimeBatch& batch : batches) {
    for (const Observation& row : batch.rows) {
      nlohmann::json j;
      j["t"] = row.t;
      j["i"] = row.subject;
      j["y"] = row.y;
      j["x"] = row.x;
      j["z"] = row.z;
      out << j.dump() << '\n';
    }
  }
}

void write_csv(std::ostream& out, std::span<const TimeBatch> batches) {
  int d = 0;
  for (const TimeBatch& b : batches) {
    if (!b.rows.empty()) {
      d = static_cast<int>(b.rows.front().x.size());
      break;
    }
  }
  out << "t,i,y";
  for (int k = 1; k <= d; ++k) out << ",x" << k;
  out << ",z\n";
  out.precision(17);
  for (const TimeBatch& batch : batches) {
    for (const Observation& row : batch.rows) {
      out << row.t << ',' << row.subject << ',' << row.y;
      for (double v : row.x) out << ',' << v;
      out << ',' << row.z << '\n';
    }
  }
}

}  // namespace catedrift
