#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <polywidth/cli.hpp>

namespace {

struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult result;
  result.exit_code = polywidth::cli::run(args, out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

const std::vector<std::vector<std::string>> kAllSubcommands = {
    {"spectrum1d"},    {"widths1d"},     {"asymptotics"}, {"jackson1d"},
    {"disk-spectrum"}, {"clamped-free"}, {"jackson-disk"}, {"extremality"},
    {"unbounded-demo"}, {"jacobi-check"}, {"green-check"},
};

}  // namespace

TEST_CASE("every subcommand passes its own checks and is byte-stable") {
  for (const auto& base : kAllSubcommands) {
    DYNAMIC_SECTION("subcommand " << base.front()) {
      for (const char* format : {"json", "csv"}) {
        std::vector<std::string> args = base;
        args.push_back("--format");
        args.push_back(format);
        const RunResult first = run_cli(args);
        const RunResult second = run_cli(args);
        INFO("format " << format << ", stderr: " << first.err);
        CHECK(first.exit_code == 0);
        CHECK(first.err.empty());
        CHECK(first.out == second.out);
        CHECK_FALSE(first.out.empty());
        // Line endings are bare \n in both formats.
        CHECK(first.out.find('\r') == std::string::npos);
      }
    }
  }
}

TEST_CASE("JSON output is well-formed and carries the envelope fields") {
  for (const auto& base : kAllSubcommands) {
    DYNAMIC_SECTION("subcommand " << base.front()) {
      const RunResult result = run_cli(base);
      REQUIRE(result.exit_code == 0);
      const nlohmann::json doc = nlohmann::json::parse(result.out);
      CHECK(doc.at("schema").get<int>() == 1);
      CHECK(doc.at("artifact").get<std::string>() == "polywidth");
      CHECK(doc.at("subcommand").get<std::string>() == base.front());
      CHECK(doc.at("all_pass").get<bool>());
      REQUIRE(doc.at("config").contains("seed"));
      REQUIRE(doc.at("checks").is_array());
      REQUIRE_FALSE(doc.at("checks").empty());
      for (const auto& check : doc.at("checks")) {
        CHECK(check.contains("id"));
        CHECK(check.contains("value"));
        CHECK(check.contains("oracle"));
        CHECK(check.contains("tolerance"));
        CHECK(check.contains("scale"));
        CHECK(check.contains("provenance"));
        CHECK(check.at("pass").get<bool>());
      }
      for (const auto& table : doc.at("tables")) {
        const std::size_t width = table.at("columns").size();
        for (const auto& row : table.at("rows")) CHECK(row.size() == width);
      }
    }
  }
}

TEST_CASE("infinite widths serialize as the quoted inf token") {
  const RunResult result = run_cli({"widths1d", "--p", "1", "--N", "0"});
  CHECK(result.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(result.out);
  const auto& check = doc.at("checks").at(0);
  REQUIRE(check.at("id").get<std::string>() == "width-0");
  CHECK(check.at("value").get<std::string>() == "inf");
  CHECK(check.at("oracle").get<std::string>() == "inf");
  CHECK(check.at("pass").get<bool>());
  CHECK(doc.at("tables").at(0).at("rows").at(0).at(1).get<std::string>() == "inf");
}

TEST_CASE("seventeen significant digits survive a JSON round trip") {
  const RunResult result = run_cli({"spectrum1d"});
  const nlohmann::json doc = nlohmann::json::parse(result.out);
  double lambda2 = 0.0;
  for (const auto& check : doc.at("checks"))
    if (check.at("id").get<std::string>() == "lambda-2")
      lambda2 = check.at("value").get<double>();
  CHECK(lambda2 == Catch::Approx(M_PI * M_PI).epsilon(1e-8));
  CHECK(lambda2 != 0.0);
  // The printed value re-parses to the identical double.
  CHECK(polywidth::format_double(lambda2) ==
        polywidth::format_double(std::stod(polywidth::format_double(lambda2))));
}

TEST_CASE("CSV output is tidy with the fixed header and summary") {
  const RunResult result = run_cli({"jacobi-check", "--format", "csv"});
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.rfind("table,row,column,value\n", 0) == 0);
  CHECK(result.out.find("meta,subcommand,value,jacobi-check\n") != std::string::npos);
  CHECK(result.out.find("checks,determinant-abs,value,2\n") != std::string::npos);
  const std::string tail = "summary,all_pass,value,true\n";
  REQUIRE(result.out.size() >= tail.size());
  CHECK(result.out.substr(result.out.size() - tail.size()) == tail);
}

TEST_CASE("usage errors exit 1 with a message on stderr") {
  CHECK(run_cli({"no-such-subcommand"}).exit_code == 1);
  CHECK(run_cli({}).exit_code == 1);
  CHECK(run_cli({"spectrum1d", "--p", "9"}).exit_code == 1);
  CHECK(run_cli({"spectrum1d", "--basis", "7", "--p", "3"}).exit_code == 1);
  CHECK(run_cli({"widths1d", "--N", "-2"}).exit_code == 1);
  CHECK(run_cli({"disk-spectrum", "--variant", "sideways"}).exit_code == 1);
  CHECK(run_cli({"unbounded-demo", "--M", "5"}).exit_code == 1);
  const RunResult bad = run_cli({"extremality", "--K", "0"});
  CHECK(bad.exit_code == 1);
  CHECK_FALSE(bad.err.empty());
  CHECK(bad.out.empty());
}

TEST_CASE("help exits 0 and documents the formats") {
  const RunResult help = run_cli({"--help"});
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("spectrum1d") != std::string::npos);
  CHECK(help.out.find("green-check") != std::string::npos);
  CHECK(help.out.find("table,row,column,value") != std::string::npos);
  CHECK(help.out.find("POLYWIDTH_THREADS") != std::string::npos);
}

TEST_CASE("a genuine tolerance violation exits 2 and names the failing row") {
  // At basis 8 the beam discretization cannot reach 1e-6 relative accuracy,
  // so the oracle rows must fail while the output stays well-formed.
  const RunResult result = run_cli({"spectrum1d", "--p", "2", "--basis", "8"});
  CHECK(result.exit_code == 2);
  const nlohmann::json doc = nlohmann::json::parse(result.out);
  CHECK_FALSE(doc.at("all_pass").get<bool>());
  std::vector<std::string> failing;
  for (const auto& check : doc.at("checks"))
    if (!check.at("pass").get<bool>()) failing.push_back(check.at("id").get<std::string>());
  REQUIRE_FALSE(failing.empty());
  CHECK(failing.front().rfind("lambda-", 0) == 0);
}

TEST_CASE("--out writes the same bytes the stream sees") {
  const std::string path = "test_cli_out.tmp.json";
  const RunResult direct = run_cli({"jacobi-check"});
  const RunResult filed = run_cli({"jacobi-check", "--out", path});
  CHECK(filed.exit_code == 0);
  CHECK(filed.out.empty());
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK(buffer.str() == direct.out);
  in.close();
  std::remove(path.c_str());
}

TEST_CASE("unwritable output path is a usage error") {
  const RunResult result = run_cli({"jacobi-check", "--out", "/no/such/dir/report.json"});
  CHECK(result.exit_code == 1);
  CHECK_FALSE(result.err.empty());
}

TEST_CASE("the thread cap never changes output bytes and rejects junk") {
  const RunResult base = run_cli({"disk-spectrum", "--l-max", "3"});
  setenv("POLYWIDTH_THREADS", "3", 1);
  const RunResult capped = run_cli({"disk-spectrum", "--l-max", "3"});
  setenv("POLYWIDTH_THREADS", "junk", 1);
  const RunResult junk = run_cli({"disk-spectrum", "--l-max", "3"});
  setenv("POLYWIDTH_THREADS", "0", 1);
  const RunResult zero = run_cli({"disk-spectrum", "--l-max", "3"});
  unsetenv("POLYWIDTH_THREADS");
  CHECK(base.exit_code == 0);
  CHECK(capped.exit_code == 0);
  CHECK(base.out == capped.out);
  CHECK(junk.exit_code == 1);
  CHECK(zero.exit_code == 1);
}

TEST_CASE("seeds are echoed and changing them changes random content") {
  const RunResult a = run_cli({"green-check", "--seed", "7"});
  const RunResult b = run_cli({"green-check", "--seed", "8"});
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  const nlohmann::json da = nlohmann::json::parse(a.out);
  const nlohmann::json db = nlohmann::json::parse(b.out);
  CHECK(da.at("config").at("seed").get<double>() == 7.0);
  CHECK(db.at("config").at("seed").get<double>() == 8.0);
  CHECK(a.out != b.out);
}
