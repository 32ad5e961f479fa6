#include <cmath>
#include <fstream>
#include <sstream>

#include "gramsel/cli.h"
#include "gramsel/lti.h"
#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"

namespace gramsel {
namespace {

using nlohmann::json;

struct Invocation {
  int code;
  std::string out;
  std::string err;
  json doc() const { return json::parse(out); }
};

Invocation run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name()); }

  std::string write(const std::string& name, const std::string& text) {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << text;
    return path;
  }

  std::string diag3() {
    return write("diag3.json", R"({"A": [[-1, 0, 0], [0, -2, 0], [0, 0, -3]],
      "candidates": [{"id": "e1", "column": [1, 0, 0]}, {"id": "e2", "column": [0, 1, 0]},
                     {"id": "e3", "column": [0, 0, 1]}]})");
  }

  std::string randsys(int n, std::uint64_t seed, int m = -1) {
    const std::string path = (dir_ / ("rand" + std::to_string(n) + ".json")).string();
    std::vector<std::string> args{"randsys", "--n", std::to_string(n), "--seed", std::to_string(seed), "--out", path};
    if (m >= 0) {
      args.push_back("--candidates");
      args.push_back(std::to_string(m));
    }
    EXPECT_EQ(run(args).code, cli::kOk);
    return path;
  }

  std::filesystem::path dir_;
};

TEST_F(CliTest, PlaceTraceOnDiagonalSystem) {
  const Invocation r = run({"place", "--system", diag3(), "--metric", "trace", "--k", "2"});
  EXPECT_EQ(r.code, cli::kUncontrollable);  // two actuators cannot control three states
  const json d = r.doc();
  EXPECT_EQ(d["selected"], json({"e1", "e2"}));
  EXPECT_NEAR(d["value"].get<double>(), 0.75, 1e-15);
  EXPECT_EQ(d["controllable"], false);
  EXPECT_TRUE(d.contains("certified_upper_bound"));
  EXPECT_DOUBLE_EQ(d["theoretical_ratio"].get<double>(), 0.75);
}

TEST_F(CliTest, PlaceLogDetPaperScale) {
  const std::string sys = randsys(25, 1);
  for (bool lazy : {false, true}) {
    std::vector<std::string> args{"place", "--system", sys, "--metric", "logdet", "--k", "7", "--two-stage"};
    if (lazy) args.push_back("--lazy");
    const Invocation r = run(args);
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    const json d = r.doc();
    ASSERT_EQ(d["selected"].size(), 7u);
    EXPECT_TRUE(d["value"].is_number());
    EXPECT_EQ(d["controllable"], true);
  }
}

TEST_F(CliTest, PlaceLambdaMinCarriesNoGuarantee) {
  const std::string sys = randsys(4, 3);
  const Invocation r = run({"place", "--system", sys, "--metric", "lambda-min", "--k", "4"});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(r.doc()["guarantee"], "none (metric not submodular)");
}

TEST_F(CliTest, PlaceErrors) {
  EXPECT_EQ(run({"place", "--system", diag3(), "--metric", "nope", "--k", "1"}).code, cli::kInvalidInput);
  EXPECT_EQ(run({"place", "--system", diag3(), "--metric", "trace", "--k", "9"}).code, cli::kInvalidInput);
  EXPECT_EQ(run({"place", "--system", diag3(), "--metric", "trace", "--k", "1", "--two-stage"}).code,
            cli::kInvalidInput);
  EXPECT_EQ(run({"place", "--system", (dir_ / "missing.json").string(), "--k", "1"}).code, cli::kInvalidInput);
  const std::string unstable = write("unstable.json", R"({"A": [[0.5]], "candidates": [{"id": "b", "column": [1]}]})");
  const Invocation r = run({"place", "--system", unstable, "--k", "1"});
  EXPECT_EQ(r.code, cli::kInvalidInput);
  EXPECT_NE(r.err.find("0.5"), std::string::npos) << r.err;
  EXPECT_EQ(run({"bogus"}).code, cli::kInvalidInput);
}

TEST_F(CliTest, PlaceIsByteIdenticalAcrossRuns) {
  const std::string sys = randsys(10, 5);
  const std::vector<std::string> args{"place", "--system", sys, "--metric", "trace-inv", "--k", "4"};
  EXPECT_EQ(run(args).out, run(args).out);
}

TEST_F(CliTest, Counterexample) {
  // the middle gain computes to 0.032485, just outside 0.033 +/- 0.0005
  const Invocation text = run({"counterexample"});
  EXPECT_EQ(text.code, cli::kCounterexampleMismatch);
  EXPECT_NE(text.out.find("0.032485"), std::string::npos) << text.out;

  const Invocation js = run({"counterexample", "--json"});
  const json d = js.doc();
  EXPECT_NEAR(d["gain_b3_given_b1"].get<double>(), 0.036929, 1e-6);
  EXPECT_NEAR(d["gain_b3_given_b1b2"].get<double>(), 0.032485, 1e-6);
  EXPECT_NEAR(d["gain_b3_given_b2"].get<double>(), 0.001068, 1e-6);
  EXPECT_EQ(d["violated"], true);
  EXPECT_EQ(d["matches_reference"], false);

  EXPECT_EQ(run({"counterexample", "--tamper"}).code, cli::kCounterexampleMismatch);
}

TEST_F(CliTest, Verify) {
  const std::string sys = write("rand10.json", "");
  ASSERT_EQ(run({"randsys", "--n", "10", "--seed", "42", "--out", sys}).code, cli::kOk);
  // a base input keeps every subset controllable
  json doc = json::parse(std::ifstream(sys));
  json b0 = json::array();
  json col = json::array();
  for (int i = 0; i < 10; ++i) col.push_back(i == 0 ? 1.0 : 0.0);
  b0.push_back(col);
  doc["B0"] = b0;
  std::ofstream(sys) << doc.dump();

  const Invocation logdet = run({"verify", "--system", sys, "--metric", "logdet", "--trials", "1000", "--seed", "42"});
  EXPECT_EQ(logdet.code, cli::kOk) << logdet.out;
  EXPECT_EQ(logdet.doc()["violations"].size(), 0u);

  const Invocation trace = run({"verify", "--system", sys, "--metric", "trace", "--trials", "300"});
  EXPECT_EQ(trace.code, cli::kOk);
  EXPECT_EQ(trace.doc()["mode"], "modularity");
  EXPECT_LE(trace.doc()["max_abs_deficit"].get<double>(), 1e-9);

  const Invocation lmin = run({"verify", "--system", "counterexample", "--metric", "lambda-min"});
  EXPECT_EQ(lmin.code, cli::kOk);
  EXPECT_GE(lmin.doc()["violations"].size(), 1u);
  EXPECT_EQ(lmin.doc()["mode"], "expect-violation");

  EXPECT_EQ(run({"verify", "--system", diag3(), "--metric", "logdet", "--trials", "10"}).code,
            cli::kSamplingExhausted);
}

TEST_F(CliTest, Brute) {
  const std::string csv = (dir_ / "scores.csv").string();
  const Invocation r = run({"brute", "--system", diag3(), "--metric", "trace", "--k", "3", "--emit-histogram", csv});
  EXPECT_EQ(r.code, cli::kOk) << r.err;
  const json d = r.doc();
  EXPECT_EQ(d["rows"], 1);
  EXPECT_EQ(d["raw_ratio"], 1.0);
  EXPECT_EQ(d["shifted_ratio"], 1.0);
  std::ifstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "subset;value");
  EXPECT_EQ(row.substr(0, 9), "e1+e2+e3;");

  const std::string big = randsys(30, 1);
  EXPECT_EQ(run({"brute", "--system", big, "--metric", "trace", "--k", "10"}).code, cli::kEnumerationLimit);
}

TEST_F(CliTest, BruteSeedOneFixture) {
  const std::string sys = randsys(8, 1);
  const Invocation r = run({"brute", "--system", sys, "--metric", "logdet", "--k", "3"});
  ASSERT_EQ(r.code, cli::kOk);
  const json d = r.doc();
  EXPECT_EQ(d["rows"], 56);
  EXPECT_EQ(d["greedy_selected"], json({"e8", "e6", "e2"}));
  EXPECT_EQ(d["raw_ratio"], 1.0);
}

TEST_F(CliTest, RandsysRoundTrip) {
  const std::string path = randsys(25, 1);
  const LtiSystem sys = load_system_file(path);
  EXPECT_EQ(sys.n(), 25);
  EXPECT_EQ(sys.num_candidates(), 25);
  EXPECT_TRUE(sys == random_stable_system(25, 25, 1));
}

TEST_F(CliTest, Energy) {
  const std::string one = write("one.json", "[1]");
  // integrator: W(1) = 1, so the energy is exactly 1
  const std::string integrator = write("int.json", R"({"A": [[0]], "candidates": [{"id": "b", "column": [1]}]})");
  Invocation r = run({"energy", "--system", integrator, "--horizon", "1", "--target", one});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NEAR(r.doc()["energy"].get<double>(), 1.0, 1e-12);
  EXPECT_LE(r.doc()["endpoint_error"].get<double>(), 1e-6);
  EXPECT_EQ(r.doc()["samples"].size(), 11u);
  EXPECT_EQ(run({"place", "--system", integrator, "--k", "1"}).code, cli::kInvalidInput);

  // a = -1: 2a / (e^{2at} - 1) = 2 / (1 - e^-2)
  const std::string stable = write("s.json", R"({"A": [[-1]], "candidates": [{"id": "b", "column": [1]}]})");
  r = run({"energy", "--system", stable, "--horizon", "1", "--target", one});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NEAR(r.doc()["energy"].get<double>(), 2.0 / (1.0 - std::exp(-2.0)), 1e-10);

  const std::string two = write("two.json", R"({"A": [[-1, 1], [0, -2]], "candidates": [{"id": "b", "column": [0, 1]}]})");
  const std::string xf = write("xf.json", "[1, -0.5]");
  r = run({"energy", "--system", two, "--horizon", "2", "--target", xf});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_LE(r.doc()["endpoint_error"].get<double>(), 1e-6);

  const std::string xf3 = write("xf3.json", "[1, 2, 3]");
  EXPECT_EQ(run({"energy", "--system", two, "--target", xf3}).code, cli::kInvalidInput);
}

}  // namespace
}  // namespace gramsel
