#pragma once

// Serialization of run outputs.
//
// Metrics stream (famus-stream-v1): CSV with one row per server per measured
// slot plus a system aggregate row with server = -1. The first header line
// stamps the schema version. Doubles are written as shortest round-trip
// decimals, so equal runs produce byte-identical files.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "famus/config.hpp"
#include "famus/engine.hpp"

namespace famus {

inline constexpr const char* kStreamSchema = "famus-stream-v1";
inline constexpr const char* kSweepSchema = "famus-sweep-v1";
inline constexpr const char* kSummarySchema = "famus-summary-v1";

// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{})
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

// Creates parent directories as needed and refuses to clobber an existing
// file unless forced.
inline void ensure_output_file(const std::filesystem::path& path, bool force) {
  if (std::filesystem::exists(path) && !force)
    throw std::runtime_error("refusing to overwrite " + path.string() +
                             "; pass --force to replace it");
  const std::filesystem::path parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

inline const char* stream_columns() {
  return "slot,server,delegated,queue,reputation,sigma,al,participants,"
         "rewards,realized_cost,expected_cost,participant_cost";
}

class StreamCsvWriter {
 public:
  StreamCsvWriter(const std::filesystem::path& path, const SimConfig& cfg,
                  bool force) {
    ensure_output_file(path, force);
    out_.open(path, std::ios::binary);  // keep \n endings everywhere
    if (!out_)
      throw std::runtime_error("cannot open " + path.string() +
                               " for writing");
    out_ << "# " << kStreamSchema << "\n";
    out_ << "# policy=" << cfg.policy << " seed=" << cfg.seed
         << " scenario=" << cfg.scenario << "\n";
    out_ << stream_columns() << "\n";
  }

  void write(const SlotRow& r) {
    out_ << r.slot << ',' << r.server << ',' << r.delegated << ','
         << format_double(r.queue) << ',' << format_double(r.reputation)
         << ',' << format_double(r.sigma) << ',' << format_double(r.al) << ','
         << r.participants << ',' << format_double(r.rewards) << ','
         << format_double(r.realized_cost) << ','
         << format_double(r.expected_cost) << ','
         << format_double(r.participant_cost) << '\n';
  }

  void close() {
    out_.flush();
    out_.close();
    if (out_.fail()) throw std::runtime_error("stream write failed");
  }

 private:
  std::ofstream out_;
};

// In-memory form of a stream file, for replay checks and plotting glue.
struct ParsedStream {
  std::string schema;
  std::vector<SlotRow> rows;
};

inline ParsedStream read_stream_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  ParsedStream parsed;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (parsed.schema.empty() && line.size() > 2)
        parsed.schema = line.substr(2);
      continue;
    }
    if (!header_seen) {
      if (line != stream_columns())
        throw std::runtime_error(path.string() + ": unexpected column header");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12)
      throw std::runtime_error(path.string() + ": malformed row: " + line);
    SlotRow r;
    r.slot = std::stoll(cells[0]);
    r.server = std::stoi(cells[1]);
    r.delegated = std::stoi(cells[2]);
    r.queue = std::stod(cells[3]);
    r.reputation = std::stod(cells[4]);
    r.sigma = std::stod(cells[5]);
    r.al = std::stod(cells[6]);
    r.participants = std::stoi(cells[7]);
    r.rewards = std::stod(cells[8]);
    r.realized_cost = std::stod(cells[9]);
    r.expected_cost = std::stod(cells[10]);
    r.participant_cost = std::stod(cells[11]);
    parsed.rows.push_back(r);
  }
  return parsed;
}

inline nlohmann::json summary_to_json(const SimConfig& cfg,
                                      const RunSummary& s) {
  nlohmann::json j;
  j["schema"] = kSummarySchema;
  j["policy"] = cfg.policy;
  j["seed"] = cfg.seed;
  j["measured_slots"] = s.measured_slots;
  j["releases"] = s.releases;
  j["time_avg_cost"] = s.time_avg_cost;
  j["time_avg_expected_cost"] = s.time_avg_expected_cost;
  j["time_avg_al"] = s.time_avg_al;
  j["jfi"] = s.jfi;  // serialized as null when undefined
  j["rewards_total"] = s.rewards_total;
  j["max_queue_slope"] = s.max_queue_slope;
  j["drift_max_violation"] = s.drift_max_violation;
  j["ic_violations"] = s.ic_violations;
  j["queue_time_avg"] = s.queue_time_avg;
  j["queue_slope"] = s.queue_slope;
  j["queue_final"] = s.queue_final;
  j["delegations"] = s.delegations;
  j["sigma_sum"] = s.sigma_sum;
  if (s.releases > 0) {
    std::vector<double> freq;
    freq.reserve(s.delegations.size());
    for (std::int64_t d : s.delegations)
      freq.push_back(static_cast<double>(d) /
                     static_cast<double>(s.releases));
    j["delegation_frequency"] = freq;
  }
  j["config"] = cfg.to_json();
  return j;
}

inline void write_summary_json(const std::filesystem::path& path,
                               const SimConfig& cfg, const RunSummary& s,
                               bool force) {
  ensure_output_file(path, force);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << summary_to_json(cfg, s).dump(2) << "\n";
  out.flush();
  if (out.fail()) throw std::runtime_error("summary write failed");
}

}  // namespace famus
