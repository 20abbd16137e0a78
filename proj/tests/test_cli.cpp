#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gumbel/cli.hpp"

using namespace gumbel;
using nlohmann::json;

namespace {

const std::string kDataDir = GUMBEL_DATA_DIR;

struct CliRun {
    int code = 0;
    std::string out, err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace

TEST_CASE("usage errors exit with code 2 and help exits clean") {
    CHECK(run({}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"estimate", "--no-such-flag"}).code == 2);
    CliRun help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("estimate") != std::string::npos);
    CliRun sub = run({"estimate", "--help"});
    CHECK(sub.code == 0);
    CHECK(sub.out.find("--replicates") != std::string::npos);
}

TEST_CASE("estimation reports every input it used") {
    CliRun r = run({"estimate", "--replicates", "1500", "--seed", "4",
                    "--horizon", "500", "--no-timing"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["schema_version"] == 1);
    CHECK(rep["command"] == "estimate");
    CHECK(rep["lambda_hat"].get<double>() > 0.0);
    CHECK(rep["stderr"].get<double>() > 0.0);
    CHECK(rep["stderr_kind"] == "asymptotic");
    CHECK(rep["replicates"] == 1500);
    CHECK(rep["k"] == 3);
    CHECK(rep["k_prime"] == 4);
    CHECK(rep["seed"] == 4);
    CHECK(rep["horizon"] == 500);
    CHECK(rep["weight_mode"] == "per-epoch");
    CHECK(rep["budget"]["replicates"] == 1500);
    CHECK(rep["elapsed_seconds"] == 0.0);
    CHECK(rep["ungapped_lambda"].get<double>() > 0.0);
    CHECK(rep["scheme"]["gap_open"] == 11.0);
    CHECK(rep["scheme"]["gap_extend"] == 1.0);
    CHECK(!rep["scheme"]["digest"].get<std::string>().empty());
    CHECK(rep["trial"]["t"].size() == 3);
    CHECK(rep["trial"]["t"][0].size() == 3);
    // No thread count anywhere: the report must not depend on it.
    CHECK(r.out.find("thread") == std::string::npos);
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
    std::vector<std::string> base{"estimate", "--replicates", "1200",
                                  "--seed", "5", "--horizon", "500",
                                  "--no-timing"};
    CliRun a = run(base);
    REQUIRE(a.code == 0);
    CliRun b = run(base);
    CHECK(a.out == b.out);
    std::vector<std::string> t1 = base, t3 = base;
    t1.insert(t1.end(), {"--threads", "1"});
    t3.insert(t3.end(), {"--threads", "3"});
    CliRun c = run(t1);
    CliRun d = run(t3);
    CHECK(c.out == a.out);
    CHECK(d.out == a.out);
}

TEST_CASE("weight-mode and trial flags reach the engine") {
    // The shared-weight diagnostic only roots when some replicates censor
    // between the two epochs, so give it a short horizon and a loose cap.
    CliRun r = run({"estimate", "--replicates", "800", "--no-timing",
                    "--single-weight", "--horizon", "12",
                    "--max-censored-fraction", "0.95"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["weight_mode"] == "final-epoch");

    CliRun base = run({"estimate", "--replicates", "800", "--no-timing",
                       "--horizon", "500"});
    json brep = json::parse(base.out);
    CliRun half = run({"estimate", "--replicates", "800", "--no-timing",
                       "--horizon", "500", "--trial-c", "0.5"});
    REQUIRE(half.code == 0);
    json hrep = json::parse(half.out);
    double t_si_base = brep["trial"]["t"][0][1].get<double>();
    double t_si_half = hrep["trial"]["t"][0][1].get<double>();
    CHECK(t_si_half == doctest::Approx(0.5 * t_si_base).epsilon(1e-12));
}

TEST_CASE("invalid estimation arguments are refused with code 2") {
    CliRun bad_pair = run({"estimate", "--k", "4", "--k-prime", "4"});
    CHECK(bad_pair.code == 2);
    CHECK(bad_pair.err.find("k must be less than k-prime") != std::string::npos);
    CliRun both = run({"estimate", "--replicates", "10", "--seconds", "1"});
    CHECK(both.code == 2);
    CHECK(both.err.find("exactly one of") != std::string::npos);
    CHECK(run({"estimate", "--format", "yaml"}).code == 2);
    CliRun missing = run({"estimate", "--matrix", "NO_SUCH_MATRIX"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("cannot find data file") != std::string::npos);
}

TEST_CASE("batched estimation reports per-batch results and their spread") {
    CliRun r = run({"estimate", "--replicates", "400", "--batches", "3",
                    "--k", "1", "--k-prime", "2", "--no-timing",
                    "--horizon", "500"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["stderr_kind"] == "batch");
    CHECK(rep["batch_count"] == 3);
    REQUIRE(rep["batches"].size() == 3);
    CHECK(rep["replicates"] == 1200);
    double mean = (rep["batches"][0]["lambda_hat"].get<double>() +
                   rep["batches"][1]["lambda_hat"].get<double>() +
                   rep["batches"][2]["lambda_hat"].get<double>()) /
                  3.0;
    CHECK(rep["lambda_hat"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
    // Distinct stream blocks per batch: the estimates must not collapse.
    CHECK(rep["batches"][0]["lambda_hat"] != rep["batches"][1]["lambda_hat"]);
}

TEST_CASE("csv format emits one labeled row") {
    CliRun r = run({"estimate", "--replicates", "900", "--no-timing",
                    "--horizon", "500", "--format", "csv"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, row, extra;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row));
    CHECK(!std::getline(lines, extra));
    CHECK(header ==
          "scheme,gap_open,gap_extend,lambda_hat,stderr,pairs,mean_length");
    CHECK(row.substr(0, 9) == "BLOSUM62,");
    int commas = 0;
    for (char c : row) commas += c == ',';
    CHECK(commas == 6);
}

TEST_CASE("config files fill gaps but never override flags") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gumbel_cli_test";
    fs::create_directories(dir);
    fs::path cfg = dir / "est.json";
    {
        std::ofstream f(cfg);
        f << R"({"k": 1, "k-prime": 2, "seed": 9, "replicates": 700,
                 "no-timing": true, "horizon": 500, "trial": {"c": 0.5}})";
    }
    CliRun r = run({"estimate", "--config", cfg.string(), "--seed", "5"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["k"] == 1);
    CHECK(rep["k_prime"] == 2);
    CHECK(rep["seed"] == 5);  // the flag wins
    CHECK(rep["replicates"] == 700);
    CHECK(rep["elapsed_seconds"] == 0.0);

    fs::path bad = dir / "bad.json";
    {
        std::ofstream f(bad);
        f << R"({"k": 1, "mystery": true})";
    }
    CliRun rb = run({"estimate", "--config", bad.string()});
    CHECK(rb.code == 2);
    CHECK(rb.err.find("mystery") != std::string::npos);

    CliRun rm = run({"estimate", "--config", (dir / "absent.json").string()});
    CHECK(rm.code == 2);
    fs::remove_all(dir);
}

TEST_CASE("data files resolve through the environment directory") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "gumbel_env_test";
    fs::create_directories(dir);
    fs::copy_file(fs::path(kDataDir) / "NUC.5.-4", dir / "CUSTOM.MAT",
                  fs::copy_options::overwrite_existing);
    fs::copy_file(fs::path(kDataDir) / "acgt_uniform.freq", dir / "custom.freq",
                  fs::copy_options::overwrite_existing);
    setenv("GUMBEL_DATA_DIR", dir.c_str(), 1);
    CliRun r = run({"dump-dp", "--matrix", "CUSTOM.MAT", "--freq", "custom.freq",
                    "--alphabet", "ACGT", "--gap-open", "3", "--gap-extend", "2",
                    "--seq-a", "AC", "--seq-b", "AG"});
    unsetenv("GUMBEL_DATA_DIR");
    fs::remove_all(dir);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("CUSTOM") == std::string::npos);  // TSV content only
}

TEST_CASE("score table dump pins the worked example") {
    CliRun r = run({"dump-dp", "--matrix", "NUC.5.-4", "--freq",
                    "acgt_uniform.freq", "--alphabet", "ACGT", "--gap-open", "3",
                    "--gap-extend", "2", "--seq-a", "TACTAGCGCA", "--seq-b",
                    "ACGGTAGAT"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# edge_maxima\t-4\t0\t5\t1\t3\t8\t13\t9\t6\n") !=
          std::string::npos);
    CHECK(r.out.find("# ladder_epochs\t3\t6\t7\n") != std::string::npos);
    CHECK(r.out.find("# ladder_scores\t5\t8\t13\n") != std::string::npos);
    // Row for the final letter of A ends with the corner score 4.
    CHECK(r.out.find("A\t-23\t-16\t-12\t-8\t-4\t-6\t4\t2\t9\t4\n") !=
          std::string::npos);
    CHECK(run({"dump-dp", "--seq-a", "AC"}).code == 2);  // --seq-b required
}

TEST_CASE("trace dumps go to the diagnostic stream") {
    CliRun r = run({"estimate", "--replicates", "300", "--no-timing",
                    "--horizon", "500", "--dump-trace", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("# trace\treplicate\tatoms") != std::string::npos);
    CHECK(r.err.find("trace\t0\t") != std::string::npos);
    CHECK(r.err.find("trace\t1\t") != std::string::npos);
    CHECK(r.err.find("trace\t2\t") == std::string::npos);
    json rep = json::parse(r.out);  // the report stream stays pure JSON
    CHECK(rep["command"] == "estimate");
}

TEST_CASE("direct-sampling subcommand reports reach fractions") {
    CliRun r = run({"crude", "--k", "2", "--horizon", "40", "--replicates",
                    "800", "--seed", "3"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["command"] == "crude");
    REQUIRE(rep["fraction_reached"].size() == 2);
    double p0 = rep["fraction_reached"][0].get<double>();
    double p1 = rep["fraction_reached"][1].get<double>();
    CHECK(p0 >= p1);
    CHECK(p0 > 0.0);
    CHECK(rep["fraction_se"][0].get<double>() > 0.0);
}

TEST_CASE("weight validation subcommand cross-checks the engines") {
    CliRun r = run({"validate-weights", "--instances", "2", "--max-n", "3",
                    "--terms", "300", "--seed", "2"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["command"] == "validate-weights");
    CHECK(rep["instances"] == 2);
    CHECK(rep["pass"] == true);
    CHECK(rep["max_rel_error"].get<double>() < 1e-9);
}

TEST_CASE("chain validation subcommand reports the exact exponent") {
    CliRun r = run({"validate-map", "--map", kDataDir + "/map_scalar.json",
                    "--replicates", "4000"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["command"] == "validate-map");
    CHECK(rep["lambda_exact"].get<double>() ==
          doctest::Approx(std::log(3.0)).epsilon(1e-9));
    CHECK(std::abs(rep["z"].get<double>()) < 4.0);
    CHECK(run({"validate-map"}).code == 2);  // --map is required
}

TEST_CASE("seconds budgets are accepted and reported") {
    CliRun r = run({"estimate", "--seconds", "0.1", "--k", "1", "--k-prime", "2",
                    "--horizon", "500"});
    REQUIRE(r.code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["budget"]["seconds"] == 0.1);
    CHECK(rep["replicates"].get<std::uint64_t>() > 0);
    CHECK(rep["elapsed_seconds"].get<double>() > 0.0);
}
