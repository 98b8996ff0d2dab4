#include "doctest.h"

#include "renewalkit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#ifdef RENEWALKIT_CLI_PATH

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(RENEWALKIT_CLI_PATH) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const std::string& name) { return std::string(RENEWALKIT_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("renewalkit_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cli: exit codes") {
    CHECK(run("").code == 2);
    CHECK(run("reduce").code == 2);
    CHECK(run("reduce /nonexistent.json").code == 2);
    CHECK(run("demo no-such-preset").code == 2);
    CHECK(run("reduce " + data("two_state.json") + " --grid 1,0.5").code == 2);
    // unattainable tolerance is a numeric failure
    const fs::path d = scratch("exhaust");
    CHECK(run("approx --target 'A>B=point:1' --eps 1e-9 --max-M 8 --out " + d.string()).code == 3);
}

TEST_CASE("cli: reduce two-state gives e^{-t}") {
    const fs::path d = scratch("reduce");
    const Run r = run("reduce " + data("two_state.json") + " --grid 5,0.01 --out " + d.string());
    REQUIRE(r.code == 0);
    const rk::ScalarKernelSet sk = rk::read_scalar_kernels((d / "kernels.tsv").string());
    double err = 0.0;
    for (int i = 0; i < sk.grid.nodes(); ++i) err = std::max(err, std::abs(sk.Phi(0, 1)(i) - std::exp(-sk.grid.t(i))));
    CHECK(err <= 1e-10);
    CHECK(fs::exists(d / "mass_report.json"));
    CHECK(fs::exists(d / "kernels_full.tsv"));
}

TEST_CASE("cli: multiple entrances rejected in scalar mode") {
    const fs::path d = scratch("multi");
    const Run r = run("reduce " + data("multi_entrance.json") + " --scalar --grid 5,0.01 --out " + d.string());
    CHECK(r.code == 2);
    CHECK(r.out.find("multiple entrance points") != std::string::npos);
    CHECK(run("reduce " + data("multi_entrance.json") + " --grid 5,0.01 --out " + d.string()).code == 0);
}

TEST_CASE("cli: analyze reports Markovian kernels") {
    const fs::path d = scratch("analyze");
    const Run r = run("analyze " + data("two_state.json") + " --markov --grid 10,0.001 --out " + d.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("Markovian: yes") != std::string::npos);
    CHECK(fs::exists(d / "analysis.json"));
}

TEST_CASE("cli: demo prints the Hopfield target") {
    const Run r = run("demo hopfield-fig4");
    CHECK(r.code == 0);
    CHECK(r.out.find("0.0625") != std::string::npos);
}

TEST_CASE("cli: solve with ODE check") {
    const fs::path d = scratch("solve");
    const Run r = run("solve " + data("erlang_chain.json") + " --check-ode --grid 10,0.01 --out " + d.string());
    CHECK(r.code == 0);
    CHECK(fs::exists(d / "solution.tsv"));
}

TEST_CASE("cli: reduce, approximate, reduce again") {
    const fs::path d1 = scratch("rt1"), d2 = scratch("rt2"), d3 = scratch("rt3");
    REQUIRE(run("reduce " + data("erlang_chain.json") + " --scalar --grid 20,0.01 --out " + d1.string()).code == 0);
    const Run a = run("approx --kernels " + (d1 / "kernels.tsv").string() + " --eps 0.2 --out " + d2.string());
    REQUIRE(a.code == 0);
    CHECK(a.out.find("pair masses from") != std::string::npos);
    const rk::Json rep = rk::read_json((d2 / "approx_report.json").string());
    CHECK(rep["total_distance"].get<double>() <= 0.2);
    REQUIRE(run("reduce " + (d2 / "network.json").string() + " --scalar --grid 20,0.01 --out " + d3.string()).code == 0);
    const rk::Json m1 = rk::read_json((d1 / "mass_report.json").string());
    const rk::Json m3 = rk::read_json((d3 / "mass_report.json").string());
    REQUIRE(m1["pairs"].size() == m3["pairs"].size());
    for (size_t i = 0; i < m1["pairs"].size(); ++i) {
        CHECK(m1["pairs"][i]["from"] == m3["pairs"][i]["from"]);
        CHECK(m1["pairs"][i]["to"] == m3["pairs"][i]["to"]);
        CHECK(std::abs(m1["pairs"][i]["p_exact"].get<double>() - m3["pairs"][i]["p_exact"].get<double>()) <= 1e-6);
    }
    // the default tolerance needs a graph larger than the dense generator allows
    const Run big = run("approx --kernels " + (d1 / "kernels.tsv").string() + " --eps 0.05 --out " + d2.string());
    CHECK(big.code == 2);
    CHECK(big.out.find("states (limit") != std::string::npos);
}

TEST_CASE("cli: approx uniform target re-reduces within eps") {
    const fs::path d = scratch("uniform"), e = scratch("uniform_re");
    const Run a = run("approx --eps 0.05 --target uniform:1:2 --out " + d.string());
    REQUIRE(a.code == 0);
    const rk::Json rep = rk::read_json((d / "approx_report.json").string());
    CHECK(rep["total_distance"].get<double>() <= 0.05);
    CHECK(rep["max_mass_error"].get<double>() <= 1e-6);
    REQUIRE(run("reduce " + (d / "network.json").string() + " --scalar --grid 5,0.001 --out " + e.string()).code == 0);
    const rk::Json m = rk::read_json((e / "mass_report.json").string());
    CHECK(std::abs(m["pairs"][0]["p_exact"].get<double>() - 1.0) <= 1e-12);
}

TEST_CASE("cli: outputs are byte-identical across runs") {
    const fs::path d1 = scratch("det1"), d2 = scratch("det2");
    const std::string args = "reduce " + data("erlang_chain.json") + " --grid 5,0.01 --out ";
    REQUIRE(run(args + d1.string()).code == 0);
    REQUIRE(run(args + d2.string()).code == 0);
    for (const char* f : {"kernels.tsv", "kernels_full.tsv", "mass_report.json"}) CHECK(slurp(d1 / f) == slurp(d2 / f));
    CHECK(run("sweep --count 10 --out " + d1.string()).out == run("sweep --count 10 --out " + d2.string()).out);
}

#endif
