#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cfmpp/cli.hpp"

using namespace cfmpp;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("cfmpp_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write(const std::string& file, const json& doc) const {
    std::ofstream(dir / file) << doc.dump(2);
    return dir / file;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json poisson_doc(double rate) {
  return json{{"seed", 5},
              {"replicates", 2},
              {"window", {{"lower", {0, 0}}, {"upper", {1, 1}}}},
              {"ground", {{"type", "homogeneous_poisson"}, {"rate", rate}}}};
}

RunOutcome run_cmd(const fs::path& config, const std::string& command, const fs::path& out) {
  return run(load_run_config(config, command, out));
}

}  // namespace

TEST_CASE("simulate is reproducible") {
  Scratch s("repro");
  const auto cfg = s.write("p.json", poisson_doc(50.0));
  REQUIRE(run_cmd(cfg, "simulate", s.dir / "a").exit_code == kExitOk);
  REQUIRE(run_cmd(cfg, "simulate", s.dir / "b").exit_code == kExitOk);
  for (const char* f : {"replicate_000.json", "replicate_001.json", "replicate_000_marks.csv"}) {
    CHECK(slurp(s.dir / "a" / f) == slurp(s.dir / "b" / f));
  }
  CHECK(slurp(s.dir / "a" / "replicate_000.json") != slurp(s.dir / "a" / "replicate_001.json"));
  const json manifest = json::parse(slurp(s.dir / "a" / "manifest.json"));
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.at("replicates") == 2);
  CHECK(manifest.at("config_hash") == fnv1a_hex(slurp(cfg)));

  // the seed flag overrides the file
  const auto other = load_run_config(cfg, "simulate", s.dir / "c", 6);
  run(other);
  CHECK(slurp(s.dir / "a" / "replicate_000.json") != slurp(s.dir / "c" / "replicate_000.json"));
}

TEST_CASE("zero rate writes empty configurations") {
  Scratch s("empty");
  const auto cfg = s.write("p.json", poisson_doc(0.0));
  REQUIRE(run_cmd(cfg, "simulate", s.dir / "o").exit_code == kExitOk);
  const Configuration c = read_configuration_json(s.dir / "o" / "replicate_000.json");
  CHECK(c.size() == 0);
  CHECK_THROWS_AS(run_cmd(cfg, "summarize", s.dir / "o"), ValidationError);
}

TEST_CASE("config errors name the field") {
  Scratch s("errors");
  json doc = poisson_doc(10.0);
  doc["ground"].erase("rate");
  const auto cfg = s.write("bad.json", doc);
  try {
    load_run_config(cfg, "simulate");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("ground.rate") != std::string::npos);
  }
  doc = poisson_doc(10.0);
  doc["window"]["upper"] = {1};
  CHECK_THROWS_AS(load_run_config(s.write("w.json", doc), "simulate"), ValidationError);
  CHECK_THROWS_AS(load_run_config(s.dir / "missing.json", "simulate"), ValidationError);
}

TEST_CASE("growth-interaction round trip through summarize and geometry") {
  Scratch s("growth");
  const json doc = {
      {"seed", 3},
      {"replicates", 2},
      {"window", {{"lower", {0, 0}}, {"upper", {1, 1}}, {"horizon", 3}, {"torus", true}}},
      {"ground", {{"type", "immigration_death"}, {"arrival_rate", 15}, {"death_rate", 0.5}}},
      {"marks",
       {{"type", "growth_interaction"},
        {"growth", {{"name", "linear"}, {"params", {1.0, 0.05}}}},
        {"interaction", {{"name", "disk_overlap"}, {"params", {0.5}}}}}},
      {"mark_grid", {{"step", 0.01}}},
      {"schedule", {1, 2, 3}},
      {"summarize", {{"coverage_times", {1, 3}}, {"coverage_resolution", 64}}},
      {"geometry", {{"times", {1, 3}}, {"resolution", 64}}},
      {"estimate", {{"scheme", "least-squares"}, {"data", "o/replicate_000.json"}}}};
  const auto cfg = s.write("g.json", doc);
  REQUIRE(run_cmd(cfg, "simulate", s.dir / "o").exit_code == kExitOk);
  const Configuration c = read_configuration_json(s.dir / "o" / "replicate_000.json");
  REQUIRE(c.size() > 0);
  CHECK(c.points()[0].mark.grid().back() == doctest::Approx(3.0));

  const auto sum = run_cmd(cfg, "summarize", s.dir / "o");
  CHECK(sum.exit_code == kExitOk);
  for (const char* f : {"intensity.csv", "pcf.csv", "variogram.csv", "coverage.csv"}) {
    CHECK(fs::exists(s.dir / "o" / f));
  }
  CHECK(run_cmd(cfg, "geometry", s.dir / "o").exit_code == kExitOk);
  CHECK(fs::exists(s.dir / "o" / "sections.csv"));

  const auto est = run_cmd(cfg, "estimate", s.dir / "fit");
  CHECK(est.exit_code == kExitOk);
  const json fit = json::parse(slurp(s.dir / "fit" / "fit.json"));
  CHECK(fit.at("scheme") == "least-squares");
  CHECK(fit.at("converged") == true);
  CHECK(std::abs(fit.at("theta_hat")[0].get<double>() - 1.0) < 0.05);
}

TEST_CASE("estimate rejects temporal MLE without a temporal ground") {
  Scratch s("mle");
  json doc = poisson_doc(40.0);
  doc["estimate"] = {{"scheme", "mle-temporal"}, {"data", "o/replicate_000.json"}};
  const auto cfg = s.write("p.json", doc);
  run_cmd(cfg, "simulate", s.dir / "o");
  CHECK_THROWS_AS(run_cmd(cfg, "estimate", s.dir / "fit"), ValidationError);

  doc["estimate"] = {{"scheme", "mle-janossy"}, {"data", "o/replicate_000.json"}};
  const auto ok = s.write("q.json", doc);
  CHECK(run_cmd(ok, "estimate", s.dir / "fit").exit_code == kExitOk);
  const json fit = json::parse(slurp(s.dir / "fit" / "fit.json"));
  const double n = static_cast<double>(read_configuration_json(s.dir / "o" / "replicate_000.json").size());
  CHECK(std::abs(fit.at("theta_hat")[0].get<double>() - n) <= 1e-6 * n);
}

TEST_CASE("pseudo-likelihood on a Gibbs fixture") {
  Scratch s("gibbs");
  const json doc = {{"seed", 3},
                    {"window", {{"lower", {0, 0}}, {"upper", {1, 1}}}},
                    {"ground", {{"type", "gibbs"}, {"beta", 50}, {"gamma", 0.5}, {"range", 0.05}, {"steps", 10000}}},
                    {"estimate", {{"scheme", "pseudo"}, {"data", "o/replicate_000.json"}, {"theta0", {30, 0.8}}}}};
  const auto cfg = s.write("g.json", doc);
  run_cmd(cfg, "simulate", s.dir / "o");
  const auto r = run_cmd(cfg, "estimate", s.dir / "fit");
  CHECK(r.exit_code == kExitOk);
  const json fit = json::parse(slurp(s.dir / "fit" / "fit.json"));
  CHECK(fit.at("converged") == true);
  CHECK(fit.at("theta_hat").size() == 2);
  // no check for Gibbs grounds
  CHECK_THROWS_AS(run_cmd(cfg, "check", s.dir / "chk"), ValidationError);
}

TEST_CASE("check command on a Poisson model") {
  Scratch s("check");
  json doc = poisson_doc(60.0);
  doc["check"] = {{"replicates", 200}};
  const auto cfg = s.write("p.json", doc);
  REQUIRE(run_cmd(cfg, "check", s.dir / "chk").exit_code == kExitOk);
  const json out = json::parse(slurp(s.dir / "chk" / "check.json"));
  CHECK(out.at("campbell").at("pass") == true);
  CHECK(out.at("gnz").at("pass") == true);
  CHECK(std::abs(out.at("janossy").at("value").get<double>() - 1.0) < 1e-6);
}
