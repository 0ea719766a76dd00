#pragma once

#include <map>
#include <string>
#include <vector>

#include "fphi/io.hpp"

namespace fphi {

// Flat key=value configuration. Keys are normalized ('-' -> '_'); values are
// raw strings parsed on access. Command-line flags overwrite file entries.
struct RunConfig {
  std::map<std::string, std::string> kv;

  static std::string normalize(std::string key);
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key) const; // required
  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const; // required
  double get_double(const std::string& key, double def) const;
  long long get_int(const std::string& key) const; // required
  long long get_int(const std::string& key, long long def) const;
  bool get_bool(const std::string& key, bool def) const;
  std::vector<long long> get_int_list(const std::string& key,
                                      const std::string& def) const;
  std::vector<double> get_double_list(const std::string& key) const; // required
};

// Parses a flat key=value file ('#' comments, blank lines allowed).
RunConfig parse_config_file(const std::string& path);

// All experiment subcommand names, dispatch order.
const std::vector<std::string>& subcommand_names();

// Runs one experiment; writes <out>.csv and <out>.json. Throws
// ValidationError / IoError / std::runtime_error per the exit-code contract.
// Returns a one-line human-readable summary.
std::string run_subcommand(const std::string& name, const RunConfig& cfg);

} // namespace fphi
