#include "doctest.h"

#include "hjbsl/cli.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hjbsl;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("hjbsl_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("solve writes fields and a summary")
{
    const auto dir = scratch("solve");
    const auto r = run({"solve", "--problem", "test1", "--nu", "0", "--dx", "0.01", "--cfl", "1", "--out", dir.string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("E_inf=0") != std::string::npos);
    CHECK(fs::exists(dir / "fields" / "test1_t0.csv"));
    const auto j = nlohmann::json::parse(slurp(dir / "reports" / "test1_solve.json"));
    CHECK(j["err_linf_t0"] == 0.0);
    CHECK(j["steps"] == 100);
}

TEST_CASE("configuration errors")
{
    const auto dir = scratch("errors");
    CHECK(run({"solve", "--dx", "0.1", "--cfl", "1"}).code == kExitConfig);
    CHECK(run({"solve", "--problem", "test1", "--dx", "0.1", "--dt", "0.1", "--cfl", "1", "--out", dir.string()}).code ==
          kExitConfig);
    CHECK(run({"solve", "--problem", "test9", "--dx", "0.1", "--cfl", "1", "--out", dir.string()}).code == kExitConfig);
    CHECK(run({"solve", "--problem", "test1", "--nu", "-1", "--dx", "0.1", "--cfl", "1", "--out", dir.string()}).code ==
          kExitConfig);
    fs::create_directories(dir);
    std::ofstream(dir / "bad.mesh") << "2\n3 1\n0 0 1\n1 0 1\n";
    CHECK(run({"solve", "--problem", "test3", "--mesh", (dir / "bad.mesh").string(), "--cfl", "1", "--out", dir.string()})
              .code == kExitConfig);
    const auto missing = run({"solve"});
    CHECK(missing.code == kExitConfig);
    CHECK(missing.err.find("--problem") != std::string::npos);
}

TEST_CASE("converge writes a table")
{
    const auto dir = scratch("converge");
    const auto r = run({"converge", "--problem", "test2", "--rings", "2", "--angles", "8", "--levels", "1", "--out",
                        dir.string()});
    CHECK(r.code == kExitOk);
    const auto csv = slurp(dir / "reports" / "test2_converge_cfl1.csv");
    CHECK(csv.rfind("dx,dt,nodes,err_linf,order,seconds\n0.5,0.5,", 0) == 0);
}

TEST_CASE("check passes and detects an injected fault")
{
    const auto dir = scratch("check");
    const auto ok = run({"check", "--problem", "test1", "--samples", "200", "--out", dir.string()});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("FAIL") == std::string::npos);
    CHECK(fs::exists(dir / "reports" / "test1_check.json"));
    const auto bad = run({"check", "--problem", "test1", "--samples", "200", "--inject-fault", "--out", dir.string()});
    CHECK(bad.code == kExitCheckFailed);
    CHECK(bad.out.find("FAIL  monotonicity") != std::string::npos);
}

TEST_CASE("trajectories are reproducible")
{
    const auto a = scratch("traj_a");
    const auto b = scratch("traj_b");
    const std::vector<std::string> base{"trajectories", "--dx", "0.1", "--rings", "2", "--angles", "8", "--seeds", "3"};
    auto args = base;
    args.insert(args.end(), {"--out", a.string()});
    const auto ra = run(args);
    args = base;
    args.insert(args.end(), {"--out", b.string()});
    const auto rb = run(args);
    REQUIRE(ra.code == kExitOk);
    REQUIRE(rb.code == kExitOk);
    for (int p = 1; p <= 6; ++p) {
        const std::string f = "test4_P" + std::to_string(p) + "_seed3.csv";
        CHECK(slurp(a / "trajectories" / f) == slurp(b / "trajectories" / f));
        CHECK_FALSE(slurp(a / "trajectories" / f).empty());
    }
    const auto summary = nlohmann::json::parse(slurp(a / "trajectories" / "summary.json"));
    CHECK(summary["count"] == 6);

    const auto q = scratch("traj_quiet");
    CHECK(run({"trajectories", "--dx", "0.1", "--rings", "2", "--angles", "8", "--sigma-off", "--seeds", "1", "--seeds",
               "2", "--start", "0,0", "--out", q.string()})
              .code == kExitOk);
    const auto s1 = slurp(q / "trajectories" / "test4_P1_seed1.csv");
    const auto s2 = slurp(q / "trajectories" / "test4_P1_seed2.csv");
    CHECK(s1 == s2);
}

TEST_CASE("room solve stays within its bound")
{
    const auto dir = scratch("room");
    const auto r = run({"solve", "--problem", "test4", "--dx", "0.1", "--rings", "2", "--angles", "8", "--cfl", "1",
                        "--out", dir.string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("convergence theory does not apply") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(dir / "reports" / "test4_solve.json"));
    CHECK(j["max_abs_v"].get<double>() <= 302.5);
    CHECK(j["max_abs_v"].get<double>() <= j["stability_bound"].get<double>());
}
