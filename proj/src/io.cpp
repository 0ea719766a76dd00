#include "fphi/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "fphi/version.hpp"

namespace fphi {

namespace {

constexpr char magic[7] = {'F', 'P', 'H', 'I', '4', '3', '\0'};

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& os, T v) {
  put_bytes(os, &v, sizeof v); // little-endian platform assumed (documented)
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("checkpoint: truncated file");
  return v;
}

void write_field_block(std::ostream& os, const LatticeField& f) {
  put_bytes(os, magic, sizeof magic);
  put<std::uint16_t>(os, checkpoint_version);
  put<double>(os, f.lat.alpha);
  put<std::int32_t>(os, f.lat.trunc_n);
  const ModeTable& tab = f.lat.table();
  for (std::int32_t idx : tab.ball) {
    put<double>(os, f.coeffs[idx].real());
    put<double>(os, f.coeffs[idx].imag());
  }
}

LatticeField read_field_block(std::istream& is) {
  char m[sizeof magic];
  is.read(m, sizeof m);
  if (!is || std::memcmp(m, magic, sizeof magic) != 0)
    throw IoError("checkpoint: bad magic");
  std::uint16_t ver = get<std::uint16_t>(is);
  if (ver != checkpoint_version)
    throw IoError("checkpoint: unsupported version");
  double alpha = get<double>(is);
  std::int32_t n = get<std::int32_t>(is);
  if (!(alpha > 0.0) || n < 1 || n > 4096)
    throw IoError("checkpoint: implausible header values");
  LatticeField f{Lattice(alpha, n)};
  const ModeTable& tab = f.lat.table();
  for (std::int32_t idx : tab.ball) {
    double re = get<double>(is);
    double im = get<double>(is);
    f.coeffs[idx] = cplx(re, im);
  }
  return f;
}

std::string tmp_name(const std::string& path) { return path + ".tmp"; }

void commit_tmp(const std::string& path) {
  if (std::rename(tmp_name(path).c_str(), path.c_str()) != 0)
    throw IoError("atomic write: rename failed for " + path);
}

} // namespace

void write_field_checkpoint(const std::string& path, const LatticeField& f) {
  std::ofstream os(tmp_name(path), std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_field_block(os, f);
  os.flush();
  if (!os) throw IoError("write failed: " + path);
  os.close();
  commit_tmp(path);
}

LatticeField read_field_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return read_field_block(is);
}

void write_sim_checkpoint(const std::string& path, const SimCheckpoint& cp) {
  if (!(cp.state.pos.lat == cp.state.vel.lat))
    throw ValidationError("sim checkpoint: pos/vel lattice mismatch");
  std::ofstream os(tmp_name(path), std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_field_block(os, cp.state.pos);
  write_field_block(os, cp.state.vel);
  put<std::uint64_t>(os, cp.master_seed);
  put<std::uint64_t>(os, cp.stream_id);
  put<std::uint64_t>(os, cp.rng_counter);
  put<std::uint64_t>(os, cp.step_index);
  put<double>(os, cp.sim_time);
  put<double>(os, cp.dt);
  os.flush();
  if (!os) throw IoError("write failed: " + path);
  os.close();
  commit_tmp(path);
}

SimCheckpoint read_sim_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  SimCheckpoint cp;
  cp.state.pos = read_field_block(is);
  cp.state.vel = read_field_block(is);
  if (!(cp.state.pos.lat == cp.state.vel.lat))
    throw IoError("sim checkpoint: pos/vel lattice mismatch");
  cp.master_seed = get<std::uint64_t>(is);
  cp.stream_id = get<std::uint64_t>(is);
  cp.rng_counter = get<std::uint64_t>(is);
  cp.step_index = get<std::uint64_t>(is);
  cp.sim_time = get<double>(is);
  cp.dt = get<double>(is);
  return cp;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<double>& vals) {
  std::string row;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) row += ',';
    row += format_double(vals[i]);
  }
  rows_.push_back(std::move(row));
}

void CsvWriter::add_row_mixed(const std::vector<std::string>& vals) {
  std::string row;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) row += ',';
    row += vals[i];
  }
  rows_.push_back(std::move(row));
}

std::string CsvWriter::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const std::string& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

void CsvWriter::write(const std::string& path) const {
  write_text_atomic(path, str());
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string json_number(double v) {
  if (!(v == v)) return "null"; // NaN has no JSON literal
  return format_double(v);
}

} // namespace

void JsonSidecar::set(const std::string& key, const std::string& v) {
  entries_[key] = "\"" + json_escape(v) + "\"";
}
void JsonSidecar::set(const std::string& key, double v) {
  entries_[key] = json_number(v);
}
void JsonSidecar::set(const std::string& key, std::int64_t v) {
  entries_[key] = std::to_string(v);
}
void JsonSidecar::set(const std::string& key, bool v) {
  entries_[key] = v ? "true" : "false";
}
void JsonSidecar::set_array(const std::string& key,
                            const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + json_escape(v[i]) + "\"";
  }
  entries_[key] = out + "]";
}
void JsonSidecar::set_array(const std::string& key,
                            const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += json_number(v[i]);
  }
  entries_[key] = out + "]";
}

std::string JsonSidecar::str() const {
  std::string out = "{\n";
  std::size_t i = 0;
  for (const auto& [k, v] : entries_) {
    out += "  \"" + json_escape(k) + "\": " + v;
    if (++i < entries_.size()) out += ',';
    out += '\n';
  }
  out += "}\n";
  return out;
}

void JsonSidecar::write(const std::string& path) const {
  write_text_atomic(path, str());
}

void write_text_atomic(const std::string& path, const std::string& content) {
  std::ofstream os(tmp_name(path), std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << content;
  os.flush();
  if (!os) throw IoError("write failed: " + path);
  os.close();
  commit_tmp(path);
}

} // namespace fphi
