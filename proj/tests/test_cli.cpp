#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "nssnn/io.hpp"

namespace fs = std::filesystem;
using nssnn::io::Json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "nssnn_cli_test";

struct RunResult {
    int code;
    std::string err;
};

RunResult run(const std::string& args)
{
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd = std::string(NSSNN_CLI_PATH) + " " + args + " > " + (kWork / "stdout.txt").string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        ++n;
    return n;
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path write_config(const std::string& name, const Json& j)
{
    const fs::path p = kWork / name;
    std::ofstream(p) << j.dump(2);
    return p;
}

struct Workspace {
    Workspace()
    {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

}  // namespace

TEST_CASE_FIXTURE(Workspace, "gen-data writes a deterministic dataset")
{
    const auto cfg = write_config("c.json", {{"version", 1}, {"n_samples", 4}, {"batch_size", 4}, {"seed", 7}});
    const std::string args = "gen-data --system spring --config " + cfg.string() + " --out ";
    REQUIRE(run(args + (kWork / "a.csv").string()).code == 0);
    REQUIRE(run(args + (kWork / "b.csv").string()).code == 0);
    CHECK(line_count(kWork / "a.csv") == 9);  // header plus 4 pairs
    CHECK(first_line(kWork / "a.csv") == "sample_id,role,comp_0,comp_1");
    CHECK(slurp(kWork / "a.csv") == slurp(kWork / "b.csv"));
    const std::string summary = slurp(kWork / "stdout.txt");
    CHECK(summary.find("n_samples") != std::string::npos);
    CHECK(fs::exists(kWork / "run_meta.json"));
}

TEST_CASE_FIXTURE(Workspace, "error categories and exit codes")
{
    auto r = run("gen-data --system nope --out " + (kWork / "x.csv").string());
    CHECK(r.code == 3);
    CHECK(r.err.rfind("error: UnknownSystem", 0) == 0);
    CHECK(r.err.find("pendulum") != std::string::npos);

    const auto bad = write_config("bad.json", {{"version", 1}, {"bogus", 1}});
    r = run("gen-data --config " + bad.string() + " --out " + (kWork / "x.csv").string());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: InvalidConfig", 0) == 0);

    r = run("gen-data");
    CHECK(r.code == 2);

    r = run("predict --ckpt /nonexistent.json --system spring --out " + (kWork / "p.csv").string());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: Io", 0) == 0);
}

TEST_CASE_FIXTURE(Workspace, "train, predict and eval chain")
{
    const auto cfg = write_config("c.json", {{"version", 1}, {"n_samples", 32}, {"batch_size", 16}, {"epochs", 2}});
    REQUIRE(run("gen-data --config " + cfg.string() + " --out " + (kWork / "d.csv").string()).code == 0);
    REQUIRE(run("train --config " + cfg.string() + " --data " + (kWork / "d.csv").string() + " --out " +
                (kWork / "ckpt.json").string())
                .code == 0);
    CHECK(line_count(kWork / "loss_history.csv") == 3);
    const auto ckpt = nssnn::io::read_json(kWork / "ckpt.json");
    CHECK(ckpt.at("training_meta").at("epochs") == 2);

    REQUIRE(run("predict --ckpt " + (kWork / "ckpt.json").string() +
                " --system spring --q0 1 --p0 0 --t 1 --out " + (kWork / "p.csv").string())
                .code == 0);
    CHECK(first_line(kWork / "p.csv") == "t,q_0,p_0,x_0,y_0");
    CHECK(line_count(kWork / "p.csv") == 102);

    REQUIRE(run("eval --ckpt " + (kWork / "ckpt.json").string() + " --system spring --t 2 --report " +
                (kWork / "r.json").string())
                .code == 0);
    const auto report = nssnn::io::read_json(kWork / "r.json");
    for (const char* key : {"prediction_error", "hamiltonian_deviation", "diverged"}) CHECK(report.contains(key));
    const auto meta = nssnn::io::read_json(kWork / "run_meta.json");
    CHECK(meta.at("command") == "eval");
}

TEST_CASE_FIXTURE(Workspace, "omega-study writes one trace per preset")
{
    const fs::path out = kWork / "omega";
    REQUIRE(run("omega-study --t 1 --out " + out.string()).code == 0);
    for (const char* name : {"omega_0.csv", "omega_0.8.csv", "omega_0.9.csv", "omega_10.csv", "deviation.csv"})
        CHECK(fs::exists(out / name));
    CHECK(first_line(out / "omega_10.csv") == "t,q_0,p_0,x_0,y_0");
    CHECK(fs::exists(out / "run_meta.json"));
}

TEST_CASE_FIXTURE(Workspace, "vortex-sim writes frames")
{
    const fs::path out = kWork / "vortex";
    REQUIRE(run("vortex-sim --analytic --init leapfrog --n 8 --t 0.5 --dt 0.01 --stride 10 --out " + out.string())
                .code == 0);
    CHECK(line_count(out / "frames" / "index.csv") == 7);
    CHECK(fs::exists(out / "diagnostics.csv"));
    CHECK(run("vortex-sim --init taylor --out " + out.string()).code == 2);  // no kernel chosen
}

TEST_CASE_FIXTURE(Workspace, "ablate-dt writes both sweeps")
{
    const auto cfg = write_config("c.json", {{"version", 1}, {"n_samples", 32}, {"batch_size", 16}, {"epochs", 1}});
    const fs::path out = kWork / "ablate";
    REQUIRE(run("ablate-dt --config " + cfg.string() + " --seeds 1 --out " + out.string()).code == 0);
    CHECK(line_count(out / "ablation_dt.csv") >= 5);
    CHECK(line_count(out / "ablation_t_train.csv") >= 4);
}
