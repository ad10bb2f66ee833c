// Drives the built `spa` binary as a user would.
#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <sys/wait.h>

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result spa(const std::string& args) {
    const std::string cmd = std::string(SPA_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "spa_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(spa("run bogus").code, 2);
    EXPECT_EQ(spa("run evacuation --seed notanumber").code, 2);
    EXPECT_EQ(spa("frobnicate").code, 2);
    EXPECT_EQ(spa("--help").code, 0);
}

TEST(Cli, RunPrintsAReport) {
    const auto r = spa("run evacuation --seed 7");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["scene"], "evacuation");
    EXPECT_TRUE(j["solved"].get<bool>());
    EXPECT_GT(j["solution_time"].get<double>(), 0);
    EXPECT_FALSE(j.contains("planning_time"));
    EXPECT_TRUE(nlohmann::json::parse(spa("run evacuation --seed 7 --timings").out).contains("planning_time"));
}

TEST(Cli, RequireSolvedFailsOnTimeout) {
    EXPECT_EQ(spa("run evacuation --max-ticks 5 --require-solved").code, 1);
    EXPECT_EQ(spa("run evacuation --max-ticks 5").code, 0);
}

TEST(Cli, CompareIsRepeatable) {
    const auto a = spa("compare evacuation --seed 7");
    const auto b = spa("compare evacuation --seed 7");
    ASSERT_EQ(a.code, 0);
    EXPECT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("without/with"), std::string::npos);
}

TEST(Cli, CsvHasHeaderAndRows) {
    const auto r = spa("compare tradeshow --seed 1 --csv");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("scene,agents,nli,", 0), 0u) << r.out;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
}

TEST(Cli, OutFileMatchesStdout) {
    const auto path = scratch("run.json");
    const auto r = spa("run tradeshow --seed 3 --out " + path.string());
    ASSERT_EQ(r.code, 0);
    std::ifstream in(path);
    const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(nlohmann::json::parse(file), nlohmann::json::parse(spa("run tradeshow --seed 3").out));
}

TEST(Cli, ExportThenValidate) {
    const auto dir = scratch("export");
    std::filesystem::remove_all(dir);
    ASSERT_EQ(spa("export museum --out-dir " + dir.string()).code, 0);
    ASSERT_TRUE(std::filesystem::exists(dir / "museum.json"));
    EXPECT_EQ(spa("validate " + (dir / "museum.json").string()).code, 0);
    {
        std::ofstream bad(dir / "broken.json");
        bad << R"({"name": "broken", "entities": [{"id": "A", "type": "nope"}]})";
    }
    EXPECT_EQ(spa("validate " + (dir / "broken.json").string()).code, 1);
}

TEST(Cli, ShippedDataValidates) {
    for (const char* name : {"antipodal", "evacuation", "museum", "tradeshow", "keys"})
        EXPECT_EQ(spa(std::string("validate ") + SPA_SOURCE_DIR + "/data/" + name + ".json").code, 0) << name;
}

TEST(Cli, NluEvalReportsAccuracy) {
    const auto r = spa("nlu-eval museum --seed 1");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("intent accuracy"), std::string::npos);
}
