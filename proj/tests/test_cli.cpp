#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include <mastl/export.hpp>
#include <mastl/scenario.hpp>

using namespace mastl;

namespace {

const std::filesystem::path dir = std::filesystem::temp_directory_path() / "mastl_cli_test";

int run(const std::string& args, const std::string& out = "/dev/null", const std::string& err = "/dev/null")
{
    const std::string cmd = std::string(MASTL_CLI) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (dir / name).string(); }

// Every agent parked at one point for the whole horizon.
std::string parked_table(double px, double py)
{
    const auto doc = builtin_scenario("r2am");
    Trajectory x;
    for (std::size_t i = 0; i < doc.agents.size(); ++i) {
        Matrix s(2, 101);
        s.row(0).setConstant(px);
        s.row(1).setConstant(py);
        x.states.push_back(s);
    }
    std::vector<std::string> ids;
    for (const auto& a : doc.agents) ids.push_back(a.id);
    return format_table(x, ControlSequence{}, ids);
}

} // namespace

TEST_CASE("command line")
{
    std::filesystem::create_directories(dir);

    SUBCASE("check on a trajectory parked inside an obstacle fails")
    {
        write_file(path("parked.csv"), parked_table(5.5, 5.0));
        CHECK(run("check r2am " + path("parked.csv"), path("check.txt")) == 1);
        const std::string out = read_file(path("check.txt"));
        CHECK(out.find("satisfied false") != std::string::npos);
    }
    SUBCASE("plot writes an svg")
    {
        write_file(path("parked.csv"), parked_table(1.0, 1.0));
        CHECK(run("plot r2am " + path("parked.csv") + " -o " + path("p.svg")) == 0);
        CHECK(read_file(path("p.svg")).rfind("<svg", 0) == 0);
    }
    SUBCASE("an exhausted budget exits with status 1 and still writes artifacts")
    {
        const std::string out = path("solve");
        CHECK(run("solve r2am --max-outer 1 --max-iters 20 --plot -o " + out, "/dev/null", path("err.txt")) == 1);
        CHECK(std::filesystem::exists(out + "/report.txt"));
        CHECK(std::filesystem::exists(out + "/trajectory.csv"));
        CHECK(std::filesystem::exists(out + "/plot.svg"));
        CHECK(read_file(path("err.txt")).find("\"error\"") != std::string::npos);
    }
    SUBCASE("identical invocations give identical reports apart from wall time")
    {
        const std::string a = path("det_a"), b = path("det_b");
        run("solve r2amca --max-outer 1 --max-iters 30 --seed 5 -o " + a);
        run("solve r2amca --max-outer 1 --max-iters 30 --seed 5 -o " + b);
        auto strip = [](const std::string& text) {
            std::string out, line;
            std::istringstream in(text);
            while (std::getline(in, line))
                if (line.rfind("wall", 0) != 0) out += line + "\n";
            return out;
        };
        CHECK(strip(read_file(a + "/report.txt")) == strip(read_file(b + "/report.txt")));
        CHECK(read_file(a + "/trajectory.csv") == read_file(b + "/trajectory.csv"));
    }
    SUBCASE("errors exit with status 2 and a machine readable record")
    {
        CHECK(run("solve no_such_scenario", "/dev/null", path("err.txt")) == 2);
        CHECK(read_file(path("err.txt")).find("\"error\"") != std::string::npos);
        CHECK(run("solve r2am --eta-lambda 0.5") == 2);
        CHECK(run("solve r2am --block-rule jacobi") == 2);
        write_file(path("bad.txt"), "mastl-scenario 1\n[agents]\n1 single_integrator 0 0\n[tasks]\nF[0,2 x(1,0) >= 0\n");
        CHECK(run("solve " + path("bad.txt"), "/dev/null", path("err.txt")) == 2);
        const std::string err = read_file(path("err.txt"));
        CHECK(err.find("parse_error") != std::string::npos);
        CHECK(err.find("\"line\"") != std::string::npos);
        CHECK(run("frobnicate") == 2);
    }
    SUBCASE("bench prints one row per scenario")
    {
        CHECK(run("bench r2am r2amca --max-outer 1 --max-iters 5", path("bench.txt")) >= 0);
        const std::string out = read_file(path("bench.txt"));
        CHECK(std::count(out.begin(), out.end(), '\n') == 3);
        CHECK(out.rfind("config scenario", 0) == 0);
    }
}
