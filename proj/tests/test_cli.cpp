// End-to-end checks of the command-line binary: exit codes, output
// formats, and determinism. Fixtures are written into a scratch directory
// and the binary runs through the shell (see support/cli.hpp).

#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "miest/miest.hpp"
#include "miest/serialize.hpp"
#include "support/cli.hpp"

namespace {

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + needle.size()))
    ++n;
  return n;
}

// 1-D continuous X with alternating binary labels.
std::string mixed_fixture(int n, std::uint64_t seed) {
  miest::Rng rng(seed);
  miest::Dataset d;
  miest::RowMatrixXd x(n, 1);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    y[i] = i % 2;
  }
  d.x_cont = x;
  d.y_disc = y;
  const std::string path = cli::scratch_path("mixed_" + std::to_string(seed) + ".csv");
  cli::spit(path, miest::dataset_to_csv(d));
  return path;
}

// Continuous X, continuous Y, and a label column all at once.
std::string general_fixture(int n, std::uint64_t seed) {
  miest::Rng rng(seed);
  miest::Dataset d;
  miest::RowMatrixXd x(n, 1), yc(n, 1);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform();
    yc(i, 0) = rng.uniform();
    y[i] = i % 2;
  }
  d.x_cont = x;
  d.y_cont = yc;
  d.y_disc = y;
  const std::string path = cli::scratch_path("general_" + std::to_string(seed) + ".csv");
  cli::spit(path, miest::dataset_to_csv(d));
  return path;
}

double value_line(const std::string& out) {
  const auto at = out.find("value: ");
  REQUIRE(at != std::string::npos);
  return std::stod(out.substr(at + 7));
}

}  // namespace

TEST_CASE("selftest runs every internal check") {
  const cli::RunResult r = cli::run("selftest");
  CHECK(r.exit_code == 0);
  CHECK(count_occurrences(r.out, "ok   ") == 6);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("weights: exact two-member solve prints the solution JSON") {
  const cli::RunResult r = cli::run("weights --dx 1 --L 1,2 --exact");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("status") == "optimal");
  CHECK(j.at("weights").at("1").get<double>() == Catch::Approx(2.0).margin(1e-9));
  CHECK(j.at("weights").at("2").get<double>() == Catch::Approx(-1.0).margin(1e-9));

  // --out routes the same JSON into a file instead of stdout.
  const std::string out_path = cli::scratch_path("wsol.json");
  const cli::RunResult rf = cli::run("weights --dx 1 --L 1,2 --exact --out " + out_path);
  REQUIRE(rf.exit_code == 0);
  CHECK(rf.out.empty());
  CHECK(nlohmann::json::parse(cli::slurp(out_path)) == j);
}

TEST_CASE("weights: an unreachable norm cap exits through the solver path") {
  // Four members, cap below the 1/C floor of the squared norm.
  const cli::RunResult r = cli::run("weights --dx 2 --L 1,1.5,2,2.5 --eta 0.2");
  CHECK(r.exit_code == 5);
  CHECK(r.err.find("solver: infeasible") != std::string::npos);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("status") == "infeasible");
}

TEST_CASE("weights: flag combinations are rejected") {
  CHECK(cli::run("weights --dx 1").exit_code == 2);                       // no L at all
  CHECK(cli::run("weights --dx 1 --L 1,2 --l-min 1 --l-max 2").exit_code == 2);
  CHECK(cli::run("weights --L 1,2").exit_code == 2);                      // --dx required
  CHECK(cli::run("weights --dx 0 --L 1,2").exit_code == 2);
  CHECK(cli::run("weights --dx 1 --L 1,2 --eta nonsense").exit_code == 2);
}

TEST_CASE("estimate: single-class data hits the functional fixed points") {
  miest::Rng rng(3);
  miest::Dataset d;
  miest::RowMatrixXd x(40, 1);
  for (int i = 0; i < 40; ++i) x(i, 0) = rng.uniform();
  d.x_cont = x;
  d.y_disc = std::vector<int>(40, 0);
  const std::string path = cli::scratch_path("oneclass.csv");
  cli::spit(path, miest::dataset_to_csv(d));

  const cli::RunResult renyi =
      cli::run("estimate " + path + " --plugin --functional renyi --alpha 0.5");
  REQUIRE(renyi.exit_code == 0);
  CHECK(renyi.out.find("value: 1\n") != std::string::npos);
  CHECK(renyi.out.find("case: cont-disc") != std::string::npos);
  CHECK(renyi.out.find("n: 40") != std::string::npos);

  const cli::RunResult shannon = cli::run("estimate " + path + " --plugin");
  REQUIRE(shannon.exit_code == 0);
  CHECK(shannon.out.find("value: 0\n") != std::string::npos);
}

TEST_CASE("estimate: renyi without alpha is a usage error") {
  const std::string path = mixed_fixture(20, 17);
  const cli::RunResult r = cli::run("estimate " + path + " --plugin --functional renyi");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("usage error") != std::string::npos);
  CHECK(r.err.find("--alpha") != std::string::npos);
}

TEST_CASE("estimate: case override forces the chosen reduction") {
  const std::string path = general_fixture(24, 5);

  const cli::RunResult plain = cli::run("estimate " + path + " --plugin");
  REQUIRE(plain.exit_code == 0);
  CHECK(plain.out.find("case: mixed-general") != std::string::npos);

  const cli::RunResult cc = cli::run("estimate " + path + " --plugin --case cont-cont");
  REQUIRE(cc.exit_code == 0);
  CHECK(cc.out.find("case: cont-cont") != std::string::npos);

  const cli::RunResult mx = cli::run("estimate " + path + " --plugin --case mixed");
  REQUIRE(mx.exit_code == 0);
  CHECK(mx.out.find("case: cont-disc") != std::string::npos);

  // The ensemble path has no general-case member sweep; it must refuse.
  const cli::RunResult ens = cli::run("estimate " + path);
  CHECK(ens.exit_code == 2);
  CHECK(ens.err.find("--plugin") != std::string::npos);

  // Overriding to a case whose columns are missing is caught up front.
  const std::string mixed_only = mixed_fixture(20, 6);
  const cli::RunResult bad = cli::run("estimate " + mixed_only + " --case cont-cont");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("estimate: ensemble output reports the weight solve") {
  const std::string path = mixed_fixture(60, 21);
  const cli::RunResult r =
      cli::run("estimate " + path + " --l-min 1.2 --l-max 3 --L-count 6");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("weights: 6 members, status=optimal") != std::string::npos);
  CHECK(r.out.find("case: cont-disc") != std::string::npos);

  // Same command again: bit-identical stdout.
  const cli::RunResult again =
      cli::run("estimate " + path + " --l-min 1.2 --l-max 3 --L-count 6");
  CHECK(again.out == r.out);
}

TEST_CASE("estimate: unbounded kernels need the explicit opt-in") {
  const std::string path = mixed_fixture(40, 9);
  const cli::RunResult refused = cli::run("estimate " + path + " --kernel gaussian");
  CHECK(refused.exit_code == 2);
  CHECK(refused.err.find("--unsafe-kernel") != std::string::npos);

  const cli::RunResult forced = cli::run(
      "estimate " + path +
      " --kernel gaussian --unsafe-kernel --l-min 1.2 --l-max 3 --L-count 5");
  CHECK(forced.exit_code == 0);
  CHECK(forced.out.find("weights: 5 members") != std::string::npos);
}

TEST_CASE("estimate: strict mode turns clamps into a numerical failure") {
  // Two far-apart pairs: each point's within-class neighbour is out of
  // kernel range, so the conditional density is zero at default bandwidths.
  miest::Dataset d;
  miest::RowMatrixXd x(4, 1);
  x << 0.0, 0.001, 10.0, 10.001;
  d.x_cont = x;
  d.y_disc = std::vector<int>{0, 1, 0, 1};
  const std::string path = cli::scratch_path("farpairs.csv");
  cli::spit(path, miest::dataset_to_csv(d));

  const cli::RunResult clamped = cli::run("estimate " + path + " --plugin");
  REQUIRE(clamped.exit_code == 0);
  CHECK(clamped.out.find("clamped to the floor") != std::string::npos);

  const cli::RunResult strict = cli::run("estimate " + path + " --plugin --strict");
  CHECK(strict.exit_code == 4);
  CHECK(strict.err.find("numerical error") != std::string::npos);
}

TEST_CASE("estimate: confidence request prints the interval line") {
  const std::string path = mixed_fixture(40, 31);
  const std::string cmd =
      "estimate " + path + " --plugin --ci 0.9 --ci-reps 60 --seed 5";
  const cli::RunResult r = cli::run(cmd);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("ci: [") != std::string::npos);
  CHECK(r.out.find("at level 0.9") != std::string::npos);
  CHECK(r.out.find("(se ") != std::string::npos);
  CHECK(cli::run(cmd).out == r.out);

  const cli::RunResult sub = cli::run(
      "estimate " + path + " --plugin --ci 0.95 --ci-method subsample --ci-reps 60");
  CHECK(sub.exit_code == 0);
  CHECK(sub.out.find("ci: [") != std::string::npos);
}

TEST_CASE("estimate: --out writes the JSON report next to the stdout summary") {
  const std::string path = mixed_fixture(40, 41);
  const std::string out_path = cli::scratch_path("report.json");
  const cli::RunResult r =
      cli::run("estimate " + path + " --plugin --functional renyi --alpha 0.5 --out " +
               out_path);
  REQUIRE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(cli::slurp(out_path));
  CHECK(j.at("case") == "cont-disc");
  CHECK(j.at("n_samples") == 40);
  CHECK(j.at("value").get<double>() ==
        Catch::Approx(value_line(r.out)).epsilon(1e-12));
  CHECK(j.contains("per_class_values"));
}

TEST_CASE("estimate: missing input exits with the data code") {
  const cli::RunResult r = cli::run("estimate /nonexistent/nope.csv --plugin");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("data error") != std::string::npos);
}

TEST_CASE("oracle: builtin model quadrature matches the library call") {
  const cli::RunResult r = cli::run(
      "oracle --case 1 --d 1 --functional renyi --alpha 0.5 --method quadrature");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("method") == "quadrature");
  const miest::OracleResult want =
      miest::oracle_mi(miest::case1_spec(1), miest::Functional::renyi(0.5),
                       miest::OracleMethod::Quadrature);
  CHECK(j.at("value").get<double>() == want.value);
  CHECK(j.at("std_error").get<double>() == want.std_error);
}

TEST_CASE("oracle: spec file round trip and guard rails") {
  const nlohmann::json spec =
      miest::mixture_spec_to_json(miest::case1_spec(2));
  const std::string spec_path = cli::scratch_path("spec.json");
  cli::spit(spec_path, spec.dump(2));
  const cli::RunResult r =
      cli::run("oracle --spec " + spec_path + " --method quadrature");
  REQUIRE(r.exit_code == 0);
  const miest::OracleResult want =
      miest::oracle_mi(miest::case1_spec(2), miest::Functional::shannon(),
                       miest::OracleMethod::Quadrature);
  CHECK(nlohmann::json::parse(r.out).at("value").get<double>() == want.value);

  CHECK(cli::run("oracle").exit_code == 2);                          // neither source
  CHECK(cli::run("oracle --case 1 --spec " + spec_path).exit_code == 2);  // both
  CHECK(cli::run("oracle --case 3").exit_code == 2);
  // The closed-form quadrature stops at d = 2.
  const cli::RunResult high =
      cli::run("oracle --case 1 --d 3 --method quadrature");
  CHECK(high.exit_code == 3);
  CHECK(high.err.find("data error") != std::string::npos);
}

TEST_CASE("bench: smoke plan reruns are byte-identical in every format") {
  nlohmann::json plan;
  plan["seed"] = 3;
  plan["trials"] = 2;
  plan["sample_sizes"] = {32, 64};
  plan["functional"] = {{"kind", "renyi"}, {"alpha", 0.5}};
  plan["mixture"] = miest::mixture_spec_to_json(miest::case1_spec(1));
  plan["oracle"] = {{"method", "fixed"}, {"value", 1.05}, {"std_error", 0.0}};
  plan["estimators"] = {
      {{"name", "plugin"}, {"kind", "plugin"}, {"l", 2.1}},
      {{"name", "weighted"},
       {"kind", "ensemble-odin1"},
       {"l_count", 4},
       {"l_min", 1.2},
       {"l_max", 3.0}}};
  const std::string plan_path = cli::scratch_path("smoke_plan.json");
  cli::spit(plan_path, plan.dump(2));

  const std::string stem_a = cli::scratch_path("bench_a");
  const std::string stem_b = cli::scratch_path("bench_b");
  const cli::RunResult a =
      cli::run("bench " + plan_path + " --out " + stem_a + " --format csv,json,svg");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out.find("wrote " + stem_a + ".csv") != std::string::npos);
  CHECK(a.out.find("wrote " + stem_a + ".svg") != std::string::npos);
  CHECK(a.out.find("oracle value 1.05") != std::string::npos);

  const cli::RunResult b =
      cli::run("bench " + plan_path + " --out " + stem_b + " --format csv,json,svg");
  REQUIRE(b.exit_code == 0);
  for (const char* ext : {".csv", ".json", ".svg"}) {
    const std::string fa = cli::slurp(stem_a + ext);
    CHECK_FALSE(fa.empty());
    CHECK(fa == cli::slurp(stem_b + ext));
  }
  CHECK(cli::slurp(stem_a + ".csv").rfind(
            "estimator,N,trials,mse,bias,variance,mean_runtime_s,dropped", 0) == 0);

  // A different seed changes the trial draws.
  const std::string stem_c = cli::scratch_path("bench_c");
  const cli::RunResult c =
      cli::run("bench " + plan_path + " --out " + stem_c + " --format csv --seed 99");
  REQUIRE(c.exit_code == 0);
  CHECK(cli::slurp(stem_c + ".csv") != cli::slurp(stem_a + ".csv"));
}

TEST_CASE("bench: malformed plan JSON is reported as a usage problem") {
  const std::string plan_path = cli::scratch_path("broken_plan.json");
  cli::spit(plan_path, "{ this is not json");
  const cli::RunResult r = cli::run("bench " + plan_path);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("plan parse error:") != std::string::npos);
}

TEST_CASE("unknown subcommands and bad flags exit with the usage code") {
  CHECK(cli::run("frobnicate").exit_code == 2);
  CHECK(cli::run("").exit_code == 2);
  CHECK(cli::run("estimate").exit_code == 2);  // input is required
  const std::string path = mixed_fixture(20, 55);
  CHECK(cli::run("estimate " + path + " --functional bogus").exit_code == 2);
  CHECK(cli::run("estimate " + path + " --case sideways").exit_code == 2);
}
