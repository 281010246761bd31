#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nssnn/evaluation.hpp"
#include "nssnn/io.hpp"
#include "nssnn/systems.hpp"
#include "nssnn/training.hpp"
#include "nssnn/vortex.hpp"

using namespace nssnn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::UnknownSystem:
        return 3;
    case ErrorKind::InvalidConfig:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::Io:
        return 2;
    default:
        return 1;
    }
}

io::ExperimentConfig load_config_or_default(const std::string& path)
{
    if (path.empty())
        return {};
    return io::load_experiment_config(path);
}

PhaseState state_from(const std::vector<double>& q, const std::vector<double>& p,
                      const SystemEntry& system)
{
    if (q.empty() && p.empty())
        return system.eval_state;
    if (q.size() != system.dimension || p.size() != system.dimension)
        throw Error(ErrorKind::DimensionMismatch,
                    system.name + " needs " + std::to_string(system.dimension) +
                        " values each for --q0 and --p0");
    return {q, p};
}

fs::path directory_of(const fs::path& file)
{
    return file.has_parent_path() ? file.parent_path() : fs::path(".");
}

std::string omega_label(double omega)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", omega);
    return buf;
}

struct GenData {
    std::string system, config, out;

    void run() const
    {
        const auto start = Clock::now();
        io::ExperimentConfig cfg = load_config_or_default(config);
        if (!system.empty())
            cfg.training.system = system;
        find_system(cfg.training.system);
        const Dataset data = generate_dataset(cfg.training);
        io::write_dataset_csv(out, data);
        const auto& t = cfg.training;
        std::printf("system=%s n_samples=%zu t_train=%g dt=%g noise=%g seed=%llu\n",
                    t.system.c_str(), t.n_samples, t.t_train, t.dt, t.noise,
                    static_cast<unsigned long long>(t.seed));
        io::write_run_meta(directory_of(out), "gen-data", io::to_json(cfg), t.seed,
                           seconds_since(start));
    }
};

struct Train {
    std::string config, data, out;

    void run() const
    {
        const auto start = Clock::now();
        const io::ExperimentConfig cfg = load_config_or_default(config);
        const auto& t = cfg.training;
        find_system(t.system);
        const Dataset dataset = io::read_dataset_csv(data, t.system, t.t_train);
        if (dataset.dim() != find_system(t.system).dimension)
            throw Error(ErrorKind::DimensionMismatch, "dataset width does not match " + t.system);
        const TrainingResult result = train(t, dataset);
        const double final_loss = result.history.empty() ? 0.0 : result.history.back().train_loss;
        io::save_checkpoint(out, {result.theta, {t.system, t.seed, t.epochs, final_loss}});
        const fs::path dir = directory_of(out);
        io::write_loss_history_csv(dir / "loss_history.csv", result.history);
        std::printf("trained %s for %zu epochs, final loss %.6g\n", t.system.c_str(), t.epochs,
                    final_loss);
        io::write_run_meta(dir, "train", io::to_json(cfg), t.seed, seconds_since(start));
    }
};

struct Predict {
    std::string ckpt, system, out;
    std::vector<double> q0, p0;
    double t = 100.0;
    double dt = 0.01;
    double omega = kDefaultOmega;
    std::size_t stride = 1;

    void run() const
    {
        const auto start = Clock::now();
        const SystemEntry& entry = find_system(system);
        const io::Checkpoint c = io::load_checkpoint(ckpt);
        const PhaseState s0 = state_from(q0, p0, entry);
        const EvalConfig cfg{dt, omega, stride};
        const Trajectory traj = predict(c.theta, s0, t, cfg);
        io::write_trajectory_csv(out, traj);
        if (traj.diverged)
            std::fprintf(stderr, "warning: DivergedRollout: prediction stopped at t=%g\n",
                         traj.times.back());
        const io::Json meta{{"ckpt", ckpt}, {"system", system}, {"q0", s0.q}, {"p0", s0.p},
                            {"t", t}, {"dt", dt}, {"omega", omega}, {"stride", stride}};
        io::write_run_meta(directory_of(out), "predict", meta, c.meta.seed, seconds_since(start));
    }
};

struct Eval {
    std::string ckpt, system, report;
    std::vector<double> q0, p0;
    double t = 100.0;
    double dt = 0.01;
    double omega = kDefaultOmega;

    void run() const
    {
        const auto start = Clock::now();
        const SystemEntry& entry = find_system(system);
        const io::Checkpoint c = io::load_checkpoint(ckpt);
        const PhaseState s0 = state_from(q0, p0, entry);
        const EvaluationReport r = evaluate(c.theta, system, s0, t, {dt, omega, 1}, c.meta.seed);
        io::write_json(report, io::to_json(r));
        const fs::path dir = directory_of(report);
        io::write_trajectory_csv(dir / "prediction.csv", r.prediction);
        io::write_trajectory_csv(dir / "truth.csv", r.truth);
        std::vector<io::SeriesRow> rows;
        for (std::size_t k = 0; k < r.times.size(); ++k) {
            rows.push_back({"prediction_error", r.times[k], r.prediction_error_series[k]});
            rows.push_back({"hamiltonian_deviation", r.times[k], r.hamiltonian_deviation_series[k]});
        }
        io::write_series_csv(dir / "metrics.csv", rows);
        std::printf("prediction_error=%.6g hamiltonian_deviation=%.6g diverged=%s\n",
                    r.prediction_error, r.hamiltonian_deviation, r.diverged ? "true" : "false");
        const io::Json meta{{"ckpt", ckpt}, {"system", system}, {"q0", s0.q}, {"p0", s0.p},
                            {"t", t}, {"dt", dt}, {"omega", omega}};
        io::write_run_meta(dir, "eval", meta, c.meta.seed, seconds_since(start));
    }
};

struct OmegaStudy {
    std::string out;
    double t = 100.0;
    double dt = 1e-3;
    std::size_t stride = 100;

    void run() const
    {
        const auto start = Clock::now();
        OmegaStudyConfig cfg;
        cfg.horizon = t;
        cfg.dt = dt;
        cfg.stride = stride;
        const auto traces = omega_study(kOmegaStudyPresets, cfg);
        std::vector<io::SeriesRow> rows;
        for (const auto& trace : traces) {
            const std::string label = omega_label(trace.omega);
            io::write_trajectory_csv(fs::path(out) / ("omega_" + label + ".csv"), trace.trajectory);
            for (std::size_t k = 0; k < trace.deviation.size(); ++k)
                rows.push_back({"omega_" + label, trace.trajectory.times[k], trace.deviation[k]});
            std::printf("omega=%s terminal_deviation=%.6g\n", label.c_str(), trace.deviation.back());
        }
        io::write_series_csv(fs::path(out) / "deviation.csv", rows);
        const io::Json meta{{"omegas", kOmegaStudyPresets}, {"q0", cfg.s0.q}, {"p0", cfg.s0.p},
                            {"t", t}, {"dt", dt}, {"stride", stride}};
        io::write_run_meta(out, "omega-study", meta, 0, seconds_since(start));
    }
};

struct VortexSim {
    std::string ckpt, init = "taylor", out;
    bool analytic = false;
    std::size_t n = 500;
    double t = 5.0;
    double dt = 0.01;
    double omega = kDefaultOmega;
    std::size_t stride = 10;
    std::uint64_t seed = 0;

    void run() const
    {
        const auto start = Clock::now();
        std::shared_ptr<const PairKernel> kernel;
        if (analytic)
            kernel = std::make_shared<AnalyticPairKernel>();
        else
            kernel = std::make_shared<LearnedPairKernel>(io::load_checkpoint(ckpt).theta);

        VortexConfiguration config;
        if (init == "taylor")
            config = taylor_vortex_sample(n, TaylorGeometry{}, seed);
        else
            config = leapfrog_sample(n, LeapfrogGeometry{}, seed);
        const auto h = assemble_nbody_kernel(kernel, config);
        const VortexRollout run = nbody_rollout(config, *h, {dt, omega, t, stride});
        io::write_vortex_frames(fs::path(out) / "frames", run);

        std::vector<io::SeriesRow> rows;
        const Vector diag = init == "taylor" ? lobe_separation(run) : leapfrog_offset(run);
        const std::string name = init == "taylor" ? "lobe_separation" : "leapfrog_offset";
        for (std::size_t k = 0; k < diag.size(); ++k)
            rows.push_back({name, run.times[k], diag[k]});
        io::write_series_csv(fs::path(out) / "diagnostics.csv", rows);
        std::printf("frames=%zu diverged=%s %s_final=%.6g\n", run.frames.size(),
                    run.diverged ? "true" : "false", name.c_str(), diag.back());
        const io::Json meta{{"kernel", analytic ? "analytic" : ckpt}, {"init", init}, {"n", n},
                            {"t", t}, {"dt", dt}, {"omega", omega}, {"stride", stride}};
        io::write_run_meta(out, "vortex-sim", meta, seed, seconds_since(start));
    }
};

struct AblateDt {
    std::string out;
    std::string config;
    std::size_t seeds = 3;

    void run() const
    {
        const auto start = Clock::now();
        io::ExperimentConfig cfg = load_config_or_default(config);
        TrainingConfig base = cfg.training;
        base.system = "spring";
        std::vector<std::uint64_t> seed_list;
        for (std::size_t s = 0; s < seeds; ++s)
            seed_list.push_back(base.seed + s);

        auto dump = [&](const fs::path& path, const std::vector<AblationPoint>& points) {
            auto rows = std::vector<io::SeriesRow>{};
            for (const auto& p : points)
                for (std::size_t s = 0; s < p.validation_errors.size(); ++s)
                    rows.push_back({"seed_" + std::to_string(seed_list[s]),
                                    path.stem() == "ablation_dt" ? p.dt : p.t_train,
                                    p.validation_errors[s]});
            for (const auto& p : points)
                rows.push_back({"median", path.stem() == "ablation_dt" ? p.dt : p.t_train, p.median});
            io::write_series_csv(path, rows);
        };

        TrainingConfig dt_base = base;
        dt_base.t_train = 0.1;
        const double dts[] = {0.1, 0.05, 0.02, 0.01};
        const auto by_dt = ablate_dt(dt_base, dts, seed_list);
        dump(fs::path(out) / "ablation_dt.csv", by_dt);
        for (const auto& p : by_dt)
            std::printf("dt=%g t_train=%g median_validation=%.6g\n", p.dt, p.t_train, p.median);

        TrainingConfig span_base = base;
        span_base.dt = 0.01;
        const double spans[] = {0.01, 0.05, 0.1};
        const auto by_span = ablate_t_train(span_base, spans, seed_list);
        dump(fs::path(out) / "ablation_t_train.csv", by_span);
        for (const auto& p : by_span)
            std::printf("dt=%g t_train=%g median_validation=%.6g\n", p.dt, p.t_train, p.median);

        io::write_run_meta(out, "ablate-dt", io::to_json(cfg), base.seed, seconds_since(start));
    }
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Learn nonseparable Hamiltonians with an augmented symplectic integrator"};
    app.require_subcommand(1);

    GenData gen;
    auto* c_gen = app.add_subcommand("gen-data", "Generate a training dataset CSV");
    c_gen->add_option("--system", gen.system, "System name (overrides the config)");
    c_gen->add_option("--config", gen.config, "Experiment config JSON");
    c_gen->add_option("--out", gen.out, "Dataset CSV path")->required();

    Train tr;
    auto* c_train = app.add_subcommand("train", "Train a network on a dataset");
    c_train->add_option("--config", tr.config, "Experiment config JSON");
    c_train->add_option("--data", tr.data, "Dataset CSV")->required();
    c_train->add_option("--out", tr.out, "Checkpoint JSON path")->required();

    Predict pr;
    auto* c_pred = app.add_subcommand("predict", "Roll out a trained network");
    c_pred->add_option("--ckpt", pr.ckpt, "Checkpoint JSON")->required();
    c_pred->add_option("--system", pr.system, "System name")->required();
    c_pred->add_option("--q0", pr.q0, "Initial q")->delimiter(',');
    c_pred->add_option("--p0", pr.p0, "Initial p")->delimiter(',');
    c_pred->add_option("--t", pr.t, "Horizon");
    c_pred->add_option("--dt", pr.dt, "Step size");
    c_pred->add_option("--omega", pr.omega, "Binding coefficient");
    c_pred->add_option("--stride", pr.stride, "Record every n-th step");
    c_pred->add_option("--out", pr.out, "Trajectory CSV path")->required();

    Eval ev;
    auto* c_eval = app.add_subcommand("eval", "Score a trained network against the analytic system");
    c_eval->add_option("--ckpt", ev.ckpt, "Checkpoint JSON")->required();
    c_eval->add_option("--system", ev.system, "System name")->required();
    c_eval->add_option("--q0", ev.q0, "Initial q")->delimiter(',');
    c_eval->add_option("--p0", ev.p0, "Initial p")->delimiter(',');
    c_eval->add_option("--t", ev.t, "Horizon");
    c_eval->add_option("--dt", ev.dt, "Step size");
    c_eval->add_option("--omega", ev.omega, "Binding coefficient");
    c_eval->add_option("--report", ev.report, "Report JSON path")->required();

    OmegaStudy om;
    auto* c_omega = app.add_subcommand("omega-study", "Sweep the binding coefficient on Tao's example");
    c_omega->add_option("--out", om.out, "Output directory")->required();
    c_omega->add_option("--t", om.t, "Horizon");
    c_omega->add_option("--dt", om.dt, "Step size");
    c_omega->add_option("--stride", om.stride, "Record every n-th step");

    VortexSim vs;
    auto* c_vortex = app.add_subcommand("vortex-sim", "Point-vortex N-body rollout");
    auto* o_ckpt = c_vortex->add_option("--ckpt", vs.ckpt, "Pair-kernel checkpoint");
    auto* o_analytic = c_vortex->add_flag("--analytic", vs.analytic, "Use the analytic kernel");
    o_ckpt->excludes(o_analytic);
    c_vortex->add_option("--init", vs.init, "taylor or leapfrog")
        ->check(CLI::IsMember({"taylor", "leapfrog"}));
    c_vortex->add_option("--n", vs.n, "Number of particles");
    c_vortex->add_option("--t", vs.t, "Horizon");
    c_vortex->add_option("--dt", vs.dt, "Step size");
    c_vortex->add_option("--omega", vs.omega, "Binding coefficient");
    c_vortex->add_option("--stride", vs.stride, "Frame stride");
    c_vortex->add_option("--seed", vs.seed, "Sampler seed");
    c_vortex->add_option("--out", vs.out, "Output directory")->required();

    AblateDt ab;
    auto* c_ablate = app.add_subcommand("ablate-dt", "Step-size and time-span ablation on the spring system");
    c_ablate->add_option("--out", ab.out, "Output directory")->required();
    c_ablate->add_option("--config", ab.config, "Experiment config JSON");
    c_ablate->add_option("--seeds", ab.seeds, "Seeds per setting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: InvalidConfig: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*c_gen)
            gen.run();
        else if (*c_train)
            tr.run();
        else if (*c_pred)
            pr.run();
        else if (*c_eval)
            ev.run();
        else if (*c_omega)
            om.run();
        else if (*c_vortex) {
            if (!vs.analytic && vs.ckpt.empty())
                throw Error(ErrorKind::InvalidConfig, "vortex-sim needs --ckpt or --analytic");
            vs.run();
        } else if (*c_ablate)
            ab.run();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
