#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "edgebatch_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(EDGEBATCH_CLI) + " " + args + " > " + (kDir / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (kDir / name).string(); }

std::string slurp(const std::string& name) {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct Workspace {
    Workspace() { fs::create_directories(kDir); }
    ~Workspace() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE("cli round trip and exit codes") {
    Workspace ws;
    REQUIRE(run("generate --num-tasks 25 --seed 4 --out " + path("s.json")) == 0);
    CHECK(run("solve --scenario " + path("s.json") + " --scheduler jbas --holes --out " + path("j.json")) == 0);
    CHECK(run("check --scenario " + path("s.json") + " --schedule " + path("j.json")) == 0);
    for (const char* name : {"equal", "greedy", "single", "jbas+holes"}) {
        CHECK(run(std::string("solve --scenario ") + path("s.json") + " --scheduler " + name + " --out " +
                  path("b.json")) == 0);
        CHECK(run("check --scenario " + path("s.json") + " --schedule " + path("b.json")) == 0);
    }

    // Cut every bandwidth by 100x: uploads fall short.
    auto doc = nlohmann::json::parse(slurp("j.json"));
    REQUIRE_FALSE(doc["bandwidths"].empty());
    for (auto& b : doc["bandwidths"]) b["hz"] = b["hz"].get<double>() / 100.0;
    doc.erase("segments");
    std::ofstream(path("bad.json")) << doc.dump();
    CHECK(run("check --scenario " + path("s.json") + " --schedule " + path("bad.json")) == 1);
    CHECK(slurp("stdout.txt").find("violations") != std::string::npos);

    std::ofstream(path("junk.json")) << "{\"version\": 1, \"batch_starts\": [";
    CHECK(run("check --scenario " + path("s.json") + " --schedule " + path("junk.json")) == 2);
}

TEST_CASE("cli oracle") {
    Workspace ws;
    REQUIRE(run("generate --num-tasks 10 --out " + path("big.json")) == 0);
    CHECK(run("oracle --scenario " + path("big.json") + " --out " + path("o.json")) == 2);
    REQUIRE(run("generate --num-tasks 3 --bandwidth 1e6 --out " + path("small.json")) == 0);
    CHECK(run("oracle --scenario " + path("small.json") + " --out " + path("o.json")) == 0);
    CHECK(run("check --scenario " + path("small.json") + " --schedule " + path("o.json")) == 0);
}

TEST_CASE("cli usage errors") {
    Workspace ws;
    CHECK(run("") == 2);
    CHECK(run("solve --bogus") == 2);
    CHECK(run("generate") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("solve --scenario " + path("missing.json") + " --out " + path("x.json")) == 2);
}

TEST_CASE("cli sweep is reproducible") {
    Workspace ws;
    std::ofstream(path("spec.json"))
        << R"({"parameter": "num_tasks", "values": [8, 16], "seeds": [1, 2],
               "schedulers": ["jbas", "jbas+holes", "equal", "greedy", "single"]})";
    REQUIRE(run("sweep --spec " + path("spec.json") + " --out " + path("a.csv") + " --threads 1") == 0);
    REQUIRE(run("sweep --spec " + path("spec.json") + " --out " + path("b.csv") + " --threads 2") == 0);
    CHECK(slurp("a.csv") == slurp("b.csv"));
    CHECK_FALSE(slurp("a.csv").empty());

    std::ofstream(path("broken.json")) << R"({"parameter": "num_tasks", "values": [8]})";
    CHECK(run("sweep --spec " + path("broken.json") + " --out " + path("c.csv")) == 2);
}
