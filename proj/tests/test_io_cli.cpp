#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fphi/experiments.hpp"
#include "fphi/field.hpp"
#include "fphi/io.hpp"
#include "fphi/rng.hpp"
#include "fphi/version.hpp"

using namespace fphi;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / ("fphi_io_cli_" + leaf);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Run the command-line tool; returns the process exit code.
int run_cli(const std::string& args) {
  std::string cmd = std::string(FPHI_CLI_PATH) + " " + args +
                    " >/dev/null 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(static_cast<bool>(is));
  std::string s((std::istreambuf_iterator<char>(is)),
                std::istreambuf_iterator<char>());
  return s;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> split_csv_row(const std::string& row) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double roundtrip(double v) {
  return std::strtod(format_double(v).c_str(), nullptr);
}

} // namespace

TEST_CASE("seventeen-digit formatting reproduces every double bit for bit") {
  const double vals[] = {0.1,
                         1.0 / 3.0,
                         3.141592653589793,
                         -2.718281828459045e-5,
                         1e-300,
                         5e-324, // smallest denormal
                         6.02214076e23,
                         123456789.123456789,
                         1.5,
                         -0.0};
  for (double v : vals) {
    CAPTURE(v);
    double back = roundtrip(v);
    CHECK(back == v);
    CHECK(std::signbit(back) == std::signbit(v));
  }
  // Integral doubles render without an exponent or trailing zeros.
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(1.5) == "1.5");
}

TEST_CASE("csv body renders header plus one line per row") {
  CsvWriter csv({"a", "b"});
  csv.add_row({1.5, 2.0});
  csv.add_row_mixed({"x", "-1"});
  CHECK(csv.str() == "a,b\n1.5,2\nx,-1\n");
}

TEST_CASE("json sidecar is sorted, escaped, and atomic") {
  JsonSidecar js;
  js.set("zeta", 0.5);
  js.set("alpha", 1.25);
  js.set("note", std::string("say \"hi\"\nthere"));
  js.set("count", static_cast<std::int64_t>(42));
  js.set("flag", true);
  js.set("bad", std::nan(""));
  std::string s = js.str();
  CHECK(s ==
        "{\n  \"alpha\": 1.25,\n  \"bad\": null,\n  \"count\": 42,\n"
        "  \"flag\": true,\n  \"note\": \"say \\\"hi\\\"\\nthere\",\n"
        "  \"zeta\": 0.5\n}\n");

  fs::path dir = fresh_dir("json");
  fs::path out = dir / "side.json";
  js.write(out.string());
  CHECK(read_file(out) == s);
  CHECK(!fs::exists(out.string() + ".tmp"));
}

TEST_CASE("field checkpoint reproduces every coefficient bit for bit") {
  Lattice lat(1.25, 5);
  RngStream rng(99, 0);
  LatticeField f = sample_position_field(lat, rng);
  fs::path dir = fresh_dir("fieldckpt");
  fs::path p = dir / "field.ckpt";
  write_field_checkpoint(p.string(), f);
  CHECK(!fs::exists(p.string() + ".tmp"));

  LatticeField g = read_field_checkpoint(p.string());
  CHECK(g.lat == lat);
  REQUIRE(g.coeffs.size() == f.coeffs.size());
  for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
    CHECK(g.coeffs[i].real() == f.coeffs[i].real());
    CHECK(g.coeffs[i].imag() == f.coeffs[i].imag());
  }

  SUBCASE("corrupt or short files are io errors") {
    std::string bytes = read_file(p);
    fs::path bad = dir / "bad.ckpt";
    std::string flipped = bytes;
    flipped[0] = 'X';
    {
      std::ofstream os(bad, std::ios::binary);
      os << flipped;
    }
    CHECK_THROWS_AS(read_field_checkpoint(bad.string()), IoError);

    std::string wrong_ver = bytes;
    wrong_ver[7] = static_cast<char>(checkpoint_version + 1);
    {
      std::ofstream os(bad, std::ios::binary);
      os << wrong_ver;
    }
    CHECK_THROWS_AS(read_field_checkpoint(bad.string()), IoError);

    {
      std::ofstream os(bad, std::ios::binary);
      os << bytes.substr(0, 40);
    }
    CHECK_THROWS_AS(read_field_checkpoint(bad.string()), IoError);

    CHECK_THROWS_AS(read_field_checkpoint((dir / "missing.ckpt").string()),
                    IoError);
  }
}

TEST_CASE("simulation checkpoint restores state and generator position") {
  Lattice lat(1.3, 4);
  RngStream rng(5, 3);
  SimCheckpoint cp;
  cp.state = sample_gaussian_pair(lat, rng);
  cp.master_seed = 5;
  cp.stream_id = 3;
  cp.rng_counter = rng.counter;
  cp.step_index = 123;
  cp.sim_time = 1.23;
  cp.dt = 0.01;

  fs::path dir = fresh_dir("simckpt");
  fs::path p = dir / "sim.ckpt";
  write_sim_checkpoint(p.string(), cp);
  SimCheckpoint back = read_sim_checkpoint(p.string());
  CHECK(back.state.pos.lat == lat);
  CHECK(back.master_seed == cp.master_seed);
  CHECK(back.stream_id == cp.stream_id);
  CHECK(back.rng_counter == cp.rng_counter);
  CHECK(back.step_index == cp.step_index);
  CHECK(back.sim_time == cp.sim_time);
  CHECK(back.dt == cp.dt);
  for (std::size_t i = 0; i < cp.state.pos.coeffs.size(); ++i) {
    CHECK(back.state.pos.coeffs[i] == cp.state.pos.coeffs[i]);
    CHECK(back.state.vel.coeffs[i] == cp.state.vel.coeffs[i]);
  }

  SUBCASE("mismatched component lattices are rejected before writing") {
    SimCheckpoint broken = cp;
    broken.state.vel = LatticeField(Lattice(1.3, 8));
    CHECK_THROWS_AS(write_sim_checkpoint((dir / "x.ckpt").string(), broken),
                    ValidationError);
  }
}

TEST_CASE("config files parse key=value lines and reject malformed input") {
  fs::path dir = fresh_dir("config");
  fs::path good = dir / "run.cfg";
  {
    std::ofstream os(good);
    os << "# comment\n\nalpha = 1.5\ntrunc-n=2\n  seed =  9\n";
  }
  RunConfig cfg = parse_config_file(good.string());
  CHECK(cfg.get_double("alpha") == 1.5);
  CHECK(cfg.get_int("trunc_n") == 2); // dashes normalize to underscores
  CHECK(cfg.get_int("seed") == 9);

  fs::path bad = dir / "bad.cfg";
  {
    std::ofstream os(bad);
    os << "alpha 1.5\n";
  }
  CHECK_THROWS_AS(parse_config_file(bad.string()), ValidationError);
  CHECK_THROWS_AS(parse_config_file((dir / "nope.cfg").string()), IoError);

  SUBCASE("typed getters validate their strings") {
    RunConfig c;
    c.set("alpha", "abc");
    CHECK_THROWS_AS(c.get_double("alpha"), ValidationError);
    c.set("trunc-n", "7x");
    CHECK_THROWS_AS(c.get_int("trunc_n"), ValidationError);
    c.set("tune-beta", "maybe");
    CHECK_THROWS_AS(c.get_bool("tune_beta", true), ValidationError);
    CHECK_THROWS_AS(c.get_str("out"), ValidationError);
    CHECK(c.get_str("out", "fallback") == "fallback");
  }
}

TEST_CASE("unknown subcommand names are validation errors") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_subcommand("no-such-thing", cfg), ValidationError);
  CHECK(subcommand_names().size() == 13);
}

TEST_CASE("smoothing-constant table run emits the documented value") {
  fs::path dir = fresh_dir("wicktable");
  std::string out = (dir / "wt").string();
  REQUIRE(run_cli("wick-table --alpha 1.5 --trunc-n 1 --out " + out) == 0);
  auto rows = lines_of(read_file(out + ".csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "alpha,trunc_n,sigma_n,quad_conv,alpha_n");
  auto cells = split_csv_row(rows[1]);
  REQUIRE(cells.size() == 5);
  CHECK(std::strtod(cells[2].c_str(), nullptr) ==
        doctest::Approx(3.1213203).epsilon(1e-6));

  SUBCASE("metadata sidecar carries the reproducibility tuple") {
    std::string js = read_file(out + ".json");
    CHECK(js.find("\"alpha\": 1.5") != std::string::npos);
    CHECK(js.find("\"trunc_n\": 1") != std::string::npos);
    CHECK(js.find("\"seed\": 0") != std::string::npos);
    CHECK(js.find("\"dt\": 0") != std::string::npos);
    CHECK(js.find(std::string("\"version\": \"") + version_string) !=
          std::string::npos);
    CHECK(js.find("\"wall_seconds\":") != std::string::npos);
  }
}

TEST_CASE("config file drives a run and explicit flags override it") {
  fs::path dir = fresh_dir("cfgrun");
  fs::path cfgp = dir / "run.cfg";
  {
    std::ofstream os(cfgp);
    os << "alpha=1.5\ntrunc-n=2\nout=" << (dir / "from_cfg").string() << "\n";
  }
  REQUIRE(run_cli("wick-table --config " + cfgp.string()) == 0);
  auto rows = lines_of(read_file((dir / "from_cfg").string() + ".csv"));
  REQUIRE(rows.size() == 2);
  CHECK(std::strtod(split_csv_row(rows[1])[2].c_str(), nullptr) ==
        doctest::Approx(6.9673770).epsilon(1e-6));

  // Same config, but the command line pins the cutoff back to 1.
  std::string out2 = (dir / "override").string();
  REQUIRE(run_cli("wick-table --config " + cfgp.string() +
                  " --trunc-n 1 --out " + out2) == 0);
  auto rows2 = lines_of(read_file(out2 + ".csv"));
  REQUIRE(rows2.size() == 2);
  CHECK(std::strtod(split_csv_row(rows2[1])[2].c_str(), nullptr) ==
        doctest::Approx(3.1213203).epsilon(1e-6));
}

TEST_CASE("bad invocations exit with the validation code") {
  CHECK(run_cli("wick-table") == 2);            // missing --alpha
  CHECK(run_cli("wick-table --alpha 0.99 --trunc-n 1 --out /tmp/nope") == 2);
  CHECK(run_cli("wick-table --alpha abc --trunc-n 1 --out /tmp/nope") == 2);
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  CHECK(run_cli("") == 2); // no subcommand at all
  CHECK(run_cli("evolve --alpha 1.25 --trunc-n 4 --dt 0 --out /tmp/nope") ==
        2);
}

TEST_CASE("identical seeds give byte-identical result files") {
  fs::path dir = fresh_dir("determinism");
  std::string base = "evolve --alpha 1.25 --trunc-n 4 --tfinal 0.2 --dt 0.01 "
                     "--seed 11 --out ";
  REQUIRE(run_cli(base + (dir / "a").string()) == 0);
  REQUIRE(run_cli(base + (dir / "b").string()) == 0);
  CHECK(read_file((dir / "a").string() + ".csv") ==
        read_file((dir / "b").string() + ".csv"));
  CHECK(read_file((dir / "a").string() + ".ckpt") ==
        read_file((dir / "b").string() + ".ckpt"));
}

TEST_CASE("interrupted and resumed trajectories match the uninterrupted run") {
  fs::path dir = fresh_dir("resume");
  const std::string common =
      "--alpha 1.25 --trunc-n 4 --dt 0.01 --seed 21 ";
  REQUIRE(run_cli("evolve " + common + "--tfinal 1.0 --out " +
                  (dir / "full").string()) == 0);
  REQUIRE(run_cli("evolve " + common + "--tfinal 0.5 --out " +
                  (dir / "leg1").string()) == 0);
  const std::string leg_ckpt = (dir / "leg1").string() + ".ckpt";
  REQUIRE(run_cli("evolve --resume " + leg_ckpt + " --tfinal 1.0 --out " +
                  (dir / "leg2").string()) == 0);

  // Final checkpoints agree byte for byte.
  CHECK(read_file((dir / "full").string() + ".ckpt") ==
        read_file((dir / "leg2").string() + ".ckpt"));

  // Observable rows of leg1 followed by leg2 reproduce the full run exactly.
  auto full = lines_of(read_file((dir / "full").string() + ".csv"));
  auto leg1 = lines_of(read_file((dir / "leg1").string() + ".csv"));
  auto leg2 = lines_of(read_file((dir / "leg2").string() + ".csv"));
  REQUIRE(full.size() >= 2);
  CHECK(full[0] == leg1[0]);
  CHECK(full[0] == leg2[0]);
  std::vector<std::string> stitched(leg1.begin() + 1, leg1.end());
  stitched.insert(stitched.end(), leg2.begin() + 1, leg2.end());
  CHECK(stitched == std::vector<std::string>(full.begin() + 1, full.end()));

  SUBCASE("resume validates the flags against the checkpoint") {
    CHECK(run_cli("evolve --resume " + leg_ckpt + " --alpha 1.4 --tfinal 1.0 "
                  "--out " + (dir / "x").string()) == 2);
    CHECK(run_cli("evolve --resume " + leg_ckpt + " --dt 0.02 --tfinal 1.0 "
                  "--out " + (dir / "x").string()) == 2);
    CHECK(run_cli("evolve --resume " + leg_ckpt + " --tfinal 0.2 --out " +
                  (dir / "x").string()) == 2); // target time already passed
  }
  SUBCASE("corrupt checkpoints exit with the io code") {
    std::string bytes = read_file(leg_ckpt);
    fs::path short_ckpt = dir / "short.ckpt";
    {
      std::ofstream os(short_ckpt, std::ios::binary);
      os << bytes.substr(0, 64);
    }
    CHECK(run_cli("evolve --resume " + short_ckpt.string() + " --tfinal 1.0 "
                  "--out " + (dir / "x").string()) == 4);

    fs::path bad_magic = dir / "magic.ckpt";
    std::string flipped = bytes;
    flipped[2] = 'x';
    {
      std::ofstream os(bad_magic, std::ios::binary);
      os << flipped;
    }
    CHECK(run_cli("evolve --resume " + bad_magic.string() + " --tfinal 1.0 "
                  "--out " + (dir / "x").string()) == 4);
    CHECK(run_cli("evolve --resume " + (dir / "absent.ckpt").string() +
                  " --tfinal 1.0 --out " + (dir / "x").string()) == 4);
  }
}

TEST_CASE("an initial-condition checkpoint seeds the flow") {
  fs::path dir = fresh_dir("initfrom");
  // Keep one Gibbs sample as a field checkpoint, then start a flow from it.
  std::string field_ckpt = (dir / "state.field").string();
  REQUIRE(run_cli("sample-gibbs --alpha 1.25 --trunc-n 2 --burn-in 50 "
                  "--thinning 2 --draws 5 --seed 3 --save-state " +
                  field_ckpt + " --out " + (dir / "chain").string()) == 0);
  REQUIRE(fs::exists(field_ckpt));
  REQUIRE(run_cli("evolve --alpha 1.25 --trunc-n 2 --tfinal 0.1 --dt 0.01 "
                  "--seed 4 --init " + field_ckpt + " --out " +
                  (dir / "flow").string()) == 0);
  // The recorded t = 0 row starts exactly from the stored sample.
  LatticeField f = read_field_checkpoint(field_ckpt);
  auto rows = lines_of(read_file((dir / "flow").string() + ".csv"));
  REQUIRE(rows.size() >= 2);
  auto cells = split_csv_row(rows[1]);
  CHECK(std::strtod(cells.back().c_str(), nullptr) == f.at(1, 0, 0).real());
  // A cutoff mismatch between flags and the stored field is a usage error.
  CHECK(run_cli("evolve --alpha 1.25 --trunc-n 4 --tfinal 0.1 --dt 0.01 "
                "--seed 4 --init " + field_ckpt + " --out " +
                (dir / "bad").string()) == 2);
}

TEST_CASE("counting subcommand writes one row per query") {
  fs::path dir = fresh_dir("counting");
  std::string out = (dir / "basic").string();
  REQUIRE(run_cli("counting-verify --mode basic --n-scale 4 --a-scale 2 "
                  "--shift 2,1,0 --sign -1 --out " + out) == 0);
  auto rows = lines_of(read_file(out + ".csv"));
  REQUIRE(rows.size() == 2);
  auto cells = split_csv_row(rows[1]);
  CHECK(cells[0] == "basic");
  CHECK(run_cli("counting-verify --mode bogus --out " +
                (dir / "x").string()) == 2);
  CHECK(run_cli("counting-verify --mode basic --zeta-step 0 --out " +
                (dir / "x").string()) == 2);
}
