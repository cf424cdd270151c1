#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "support.hpp"

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(LCD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Fixture {
    testing_support::TempDir dir;
    std::string emb = (dir / "e.lce").string();
    std::string tok = (dir / "t.jsonl").string();

    Fixture() {
        REQUIRE(run("synth --n 2000 --dim 8 --components 10 --phrasal-fraction 0.1 --seed 3 --emb " + emb +
                    " --tok " + tok) == 0);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("pipeline runs and writes manifests") {
    Fixture f;
    CHECK(std::filesystem::exists(f.emb + ".manifest.json"));
    const auto a = f.path("a.json");
    REQUIRE(run("cluster --method kmeans --k 10 --restarts 2 --seed 1 --emb " + f.emb + " --tok " + f.tok +
                " --out " + a) == 0);
    const auto manifest = nlohmann::json::parse(slurp(a + ".manifest.json"));
    CHECK(manifest["command"] == "cluster");
    CHECK(manifest["params"]["k"] == 10);
    CHECK(manifest["inputs"].size() == 2);
    CHECK(manifest["inputs"][f.emb].get<std::string>().size() == 64);
    CHECK(manifest["command_line"].get<std::string>().rfind("lcd", 0) == 0);

    const auto c = f.path("c.jsonl");
    REQUIRE(run("concepts --assignment " + a + " --tok " + f.tok + " --out " + c) == 0);
    const auto r = f.path("r.json");
    const auto table = f.path("r.txt");
    REQUIRE(run("evaluate --concepts " + c + " --tok " + f.tok + " --theta 0.95 --min-types 5 --breakdown --out " +
                r + " --table " + table) == 0);
    const auto report = nlohmann::json::parse(slurp(r));
    CHECK(report.contains("per_label_aligned_counts"));
    CHECK(report["settings"]["min_types"] == 5);
    CHECK(slurp(table).find("Align. %") != std::string::npos);
    CHECK(std::filesystem::exists(r + ".manifest.json"));

    const auto h = f.path("h.json");
    CHECK(run("histogram --concepts " + c + " --tok " + f.tok + " --out " + h) == 0);
    CHECK(nlohmann::json::parse(slurp(h)).contains("median"));
    const auto p = f.path("p.json");
    CHECK(run("phrasal --concepts " + c + " --tok " + f.tok + " --out " + p) == 0);
    const auto counts = nlohmann::json::parse(slurp(p));
    std::size_t phrasal = 0;
    for (const char* n : {"2", "3", "4", "5"}) phrasal += counts["tokens"][n].get<std::size_t>();
    CHECK(phrasal == 200);
}

TEST_CASE("identical runs give identical bytes") {
    Fixture f;
    for (const char* method : {"kmeans", "leaders --budget 300", "agglo"}) {
        CAPTURE(method);
        const auto a = f.path("a1.json");
        const auto b = f.path("a2.json");
        const std::string args = std::string("cluster --k 10 --restarts 2 --method ") + method + " --emb " + f.emb +
                                 " --tok " + f.tok + " --out ";
        REQUIRE(run(args + a) == 0);
        REQUIRE(run(args + b) == 0);
        CHECK(slurp(a) == slurp(b));
        const auto ma = nlohmann::json::parse(slurp(a + ".manifest.json"));
        const auto mb = nlohmann::json::parse(slurp(b + ".manifest.json"));
        CHECK(ma["params"] == mb["params"]);
        CHECK(ma["inputs"] == mb["inputs"]);
    }
}

TEST_CASE("exit codes") {
    Fixture f;
    CHECK(run("cluster --method kmeans --k 10 --emb /nonexistent.lce --tok " + f.tok + " --out " + f.path("x.json")) == 2);
    CHECK(run("cluster --method kmeans --k 0 --emb " + f.emb + " --tok " + f.tok + " --out " + f.path("x.json")) == 2);
    CHECK(run("cluster --method dbscan --k 10 --emb " + f.emb + " --tok " + f.tok + " --out " + f.path("x.json")) == 2);
    CHECK(run("cluster --method agglo --k 10 --memory-budget 1M --emb " + f.emb + " --tok " + f.tok + " --out " +
              f.path("x.json")) == 3);
    CHECK_FALSE(std::filesystem::exists(f.path("x.json")));
    CHECK(run("evaluate --tok " + f.tok) == 2);
    CHECK(run("no-such-command") == 2);
}

TEST_CASE("bench writes a csv") {
    testing_support::TempDir dir;
    const auto out = (dir / "b.csv").string();
    REQUIRE(run("bench --methods kmeans,agglo --sizes 500,1000 --dim 4 --components 5 --k 5 --restarts 1 --out " +
                out) == 0);
    std::ifstream in(out);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
}
