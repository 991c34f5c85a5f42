#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result valsel_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"valsel"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = valsel::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "valsel_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = path(name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

const std::string& numeric_csv() {
  static const std::string p =
      write("numeric.csv", valsel::testing::pendigits_like_csv(200, 3, 3, 4, 4.0, 5));
  return p;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(valsel_cli({}).code == 2);
  CHECK(valsel_cli({"--help"}).code == 0);
  CHECK(valsel_cli({"frobnicate"}).code == 2);
  CHECK(valsel_cli({"filter", "-i", numeric_csv()}).code == 2);  // -o is required
  const auto missing = valsel_cli({"stats", "-i", path("does_not_exist.csv")});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("does_not_exist.csv") != std::string::npos);
  const auto bad_eps = valsel_cli({"filter", "-i", numeric_csv(), "-o", path("x.csv"), "--method",
                                   "pvs", "--epsilon", "1.5"});
  CHECK(bad_eps.code == 2);
  CHECK(bad_eps.err.find("config error") != std::string::npos);
  CHECK(valsel_cli({"filter", "-i", numeric_csv(), "-o", path("x.csv"), "--method", "fs_cfs"}).code == 2);
  CHECK(valsel_cli({"experiment", "--repeats", "1"}).code == 2);  // no input
  const auto ragged = write("ragged.csv", "a,b,class\n1,2,x\n1,x\n");
  CHECK(valsel_cli({"stats", "-i", ragged}).code == 1);
}

TEST_CASE("discretize: deterministic files and a reusable spec") {
  const auto a = valsel_cli({"discretize", "-i", numeric_csv(), "-o", path("d1.csv")});
  REQUIRE(a.code == 0);
  REQUIRE(valsel_cli({"discretize", "-i", numeric_csv(), "-o", path("d2.csv")}).code == 0);
  CHECK(slurp(path("d1.csv")) == slurp(path("d2.csv")));
  CHECK(fs::exists(path("d1.csv.spec")));
  REQUIRE(valsel_cli({"discretize", "-i", numeric_csv(), "-o", path("d3.arff"), "--apply-spec",
                      path("d1.csv.spec"), "--spec-out", path("d3.spec")})
              .code == 0);
  CHECK(slurp(path("d3.arff")).find("@attribute") != std::string::npos);
  CHECK(slurp(path("d1.csv.spec")) == slurp(path("d3.spec")));

  // Supervised cut points on a separable column.
  const auto two = write("two.csv", "x,class\n1,A\n2,A\n3,B\n4,B\n");
  REQUIRE(valsel_cli({"discretize", "-i", two, "--method", "mdl", "-o", path("two_d.csv")}).code == 0);
  CHECK(slurp(path("two_d.csv")) ==
        "x,class\n(-inf-2.5],A\n(-inf-2.5],A\n(2.5-inf),B\n(2.5-inf),B\n");
}

TEST_CASE("filter: none is the identity; value selection writes an audit mask") {
  const auto t2 = write("t2.csv", valsel::testing::kTable2Csv);
  REQUIRE(valsel_cli({"filter", "-i", t2, "--missing", "-", "--discretization", "none",
                      "--method", "none", "-o", path("t2_none.csv")})
              .code == 0);
  CHECK(slurp(path("t2_none.csv")) == valsel::testing::kTable2Csv);

  for (const char* m : {"pvs", "pvs_plus"}) {
    const std::string out1 = path(std::string(m) + "_1.csv");
    const std::string out2 = path(std::string(m) + "_2.csv");
    const auto r = valsel_cli({"filter", "-i", numeric_csv(), "--method", m, "--seed", "4", "-o", out1});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("kept") != std::string::npos);
    REQUIRE(valsel_cli({"filter", "-i", numeric_csv(), "--method", m, "--seed", "4", "-o", out2}).code == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1 + ".mask.tsv") == slurp(out2 + ".mask.tsv"));
    CHECK_FALSE(slurp(out1 + ".mask.tsv").empty());
  }
  REQUIRE(valsel_cli({"filter", "-i", numeric_csv(), "--iota", "infogain", "--method", "pvs",
                      "-o", path("ig.csv")})
              .code == 0);
}

TEST_CASE("filter: baselines") {
  REQUIRE(valsel_cli({"filter", "-i", numeric_csv(), "--method", "reservoir", "-o", path("res.csv")}).code == 0);
  const auto res = valsel::testing::from_csv(slurp(path("res.csv")));
  CHECK(res.num_instances() == 10);  // 5% of 200
  REQUIRE(valsel_cli({"filter", "-i", numeric_csv(), "--method", "drop_columns", "--drop",
                      "input1", "input2", "-o", path("drop.csv")})
              .code == 0);
  CHECK(valsel::testing::from_csv(slurp(path("drop.csv"))).num_features() == 4);
  CHECK(valsel_cli({"filter", "-i", numeric_csv(), "--method", "drop_columns", "--drop", "nope",
                    "-o", path("drop2.csv")})
            .code == 2);
  CHECK(valsel_cli({"filter", "-i", numeric_csv(), "--method", "misclassified", "-o",
                    path("mis.csv")})
            .code == 0);
  CHECK(valsel_cli({"filter", "-i", numeric_csv(), "--method", "random_value", "--rate", "0.2",
                    "-o", path("rv.csv")})
            .code == 0);
}

TEST_CASE("stats and train") {
  const auto t2 = write("t2s.csv", valsel::testing::kTable2Csv);
  const auto s = valsel_cli({"stats", "-i", t2, "--missing", "-", "--discretization", "none"});
  REQUIRE(s.code == 0);
  CHECK(s.out.find("f3\t1\t3\t0.918296\t0\t0\t1\n") != std::string::npos);
  CHECK(valsel_cli({"stats", "-i", t2, "--missing", "-", "--confusion", "bogus"}).code == 2);

  const auto xor_csv = write("xor.csv", "a,b,class\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n");
  const auto t = valsel_cli({"train", "-i", xor_csv, "--discretization", "none", "--min-leaf",
                             "1", "--cf", "1"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("model size 7, training accuracy 4/4") != std::string::npos);
  const auto r = valsel_cli({"train", "-i", numeric_csv(), "--learner", "rules"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("=> class=") != std::string::npos);
}

TEST_CASE("experiment: table, JSON and epsilon sweep") {
  const auto r = valsel_cli({"experiment", "-i", numeric_csv(), "--repeats", "2", "--folds", "3",
                             "-o", path("exp.json")});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("dataset", 0) == 0);
  const auto j = nlohmann::json::parse(slurp(path("exp.json")));
  CHECK(j["config"]["method"] == "pvs_plus");
  CHECK(j["config"]["metric"] == "entropy");
  CHECK(j["runs"]["processed"].size() == 6);

  const auto sweep = valsel_cli({"experiment", "-i", numeric_csv(), "--repeats", "1", "--folds",
                                 "3", "--epsilon", "0.1..1.0", "--step", "0.1", "--iota",
                                 "infogain", "-o", path("sweep.json")});
  REQUIRE(sweep.code == 0);
  const auto a = nlohmann::json::parse(slurp(path("sweep.json")));
  REQUIRE(a.size() == 10);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(a[k]["config"]["epsilon"].get<double>() == (static_cast<double>(k) + 1) / 10);
    CHECK(a[k]["config"]["metric"] == "infogain");
  }
  CHECK(valsel_cli({"experiment", "-i", numeric_csv(), "--epsilon", "0.5..0.1"}).code == 2);
  CHECK(valsel_cli({"experiment", "-i", numeric_csv(), "--epsilon", "abc"}).code == 2);

  const auto timed = valsel_cli({"experiment", "-i", numeric_csv(), "--repeats", "1", "--folds",
                                 "3", "--timings", "-o", path("timed.json")});
  REQUIRE(timed.code == 0);
  CHECK(nlohmann::json::parse(slurp(path("timed.json"))).contains("timings_s"));
}

TEST_CASE("experiment: a written config reproduces the report byte for byte") {
  REQUIRE(valsel_cli({"experiment", "-i", numeric_csv(), "--method", "pvs", "--epsilon", "0.3",
                      "--repeats", "2", "--folds", "4", "--seed", "9", "--prune-fraction",
                      "0.3333333333333333", "-o", path("direct.json"), "--write-config",
                      path("run.cfg")})
              .code == 0);
  CHECK_FALSE(fs::exists(path("direct.json")));
  const std::string cfg = slurp(path("run.cfg"));
  CHECK(cfg.find("epsilon=\"0.3\"") != std::string::npos);
  CHECK(cfg.find("prune-fraction=0.3333333333333333") != std::string::npos);

  REQUIRE(valsel_cli({"experiment", "--config", path("run.cfg")}).code == 0);
  const std::string first = slurp(path("direct.json"));
  REQUIRE(valsel_cli({"experiment", "--config", path("run.cfg"), "-o", path("again.json")}).code == 0);
  CHECK(slurp(path("again.json")) == first);
  REQUIRE(valsel_cli({"experiment", "-i", numeric_csv(), "--method", "pvs", "--epsilon", "0.3",
                      "--repeats", "2", "--folds", "4", "--seed", "9", "-o", path("flags.json")})
              .code == 0);
  CHECK(slurp(path("flags.json")) == first);

  // Flags override the file.
  REQUIRE(valsel_cli({"experiment", "--config", path("run.cfg"), "--seed", "10", "-o",
                      path("over.json")})
              .code == 0);
  CHECK(nlohmann::json::parse(slurp(path("over.json")))["config"]["seed"] == 10);

  CHECK(valsel_cli({"experiment", "--config", write("bad.cfg", "bogus=1\n")}).code == 2);
  CHECK(valsel_cli({"experiment", "--config", write("sec.cfg", "[other]\nseed=1\n")}).code == 2);
  CHECK(valsel_cli({"experiment", "--config", write("val.cfg", "seed=abc\n")}).code == 2);
  CHECK(valsel_cli({"experiment", "--config", path("no_such.cfg")}).code == 2);
}

TEST_CASE("relative outputs go under VALSEL_OUTPUT_DIR") {
  const auto dir = scratch() / "outdir";
  ::setenv("VALSEL_OUTPUT_DIR", dir.string().c_str(), 1);
  const auto r = valsel_cli({"filter", "-i", numeric_csv(), "--method", "none", "-o", "sub/rel.csv"});
  ::unsetenv("VALSEL_OUTPUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "sub" / "rel.csv"));
}
