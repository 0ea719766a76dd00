#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fphi/field.hpp"

namespace fphi {

// Exit-code contract of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 2, // bad flag/config value, mismatched checkpoint params
  exit_runtime = 3,    // integrator failure, NaN, statistical machinery error
  exit_io = 4,         // unreadable/corrupt files, write failures
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- field checkpoint (binary) ----
// magic "FPHI43\0" | u16 version | f64 alpha | i32 trunc_n | ball
// coefficients as little-endian f64 (re, im) pairs in storage order.
void write_field_checkpoint(const std::string& path, const LatticeField& f);
LatticeField read_field_checkpoint(const std::string& path);

// Full simulation state: two field blocks (pos, vel) followed by a footer
// (master seed u64, stream_id u64, rng counter u64, step index u64,
// sim time f64, dt f64).
struct SimCheckpoint {
  PhaseState state;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t rng_counter = 0;
  std::uint64_t step_index = 0;
  double sim_time = 0.0;
  double dt = 0.0;
};
void write_sim_checkpoint(const std::string& path, const SimCheckpoint& cp);
SimCheckpoint read_sim_checkpoint(const std::string& path);

// ---- CSV + JSON sidecar ----
// CSV: one header line, rows of %.17g-formatted numbers (byte-stable across
// identical-seed runs). The sidecar carries config echo, tool version, seed,
// alpha, N, dt, wall-clock and a file manifest; it is the only place
// wall-clock time appears.
struct CsvWriter {
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<double>& vals);
  void add_row_mixed(const std::vector<std::string>& vals);
  std::string str() const;
  // Atomic write (temp file + rename).
  void write(const std::string& path) const;

  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

std::string format_double(double v); // %.17g

// Minimal ordered-key JSON emitter for the sidecar (string/number/bool and
// flat arrays; enough for the metadata contract).
struct JsonSidecar {
  void set(const std::string& key, const std::string& v);
  void set(const std::string& key, double v);
  void set(const std::string& key, std::int64_t v);
  void set(const std::string& key, bool v);
  void set_array(const std::string& key, const std::vector<std::string>& v);
  void set_array(const std::string& key, const std::vector<double>& v);
  std::string str() const;
  void write(const std::string& path) const;

  std::map<std::string, std::string> entries_; // key -> rendered value
};

void write_text_atomic(const std::string& path, const std::string& content);

} // namespace fphi
