#include "nssnn/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#ifndef NSSNN_GIT_DESCRIBE
#define NSSNN_GIT_DESCRIBE "unknown"
#endif

namespace nssnn::io {

namespace {

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot read " + path.string());
    return in;
}

std::vector<std::string> split(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path)
{
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorKind::Io, "bad number '" + s + "' in " + path.string());
    return v;
}

std::string strip_cr(std::string line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    return line;
}

template <class T>
void read_key(const Json& j, const char* key, T& into)
{
    if (!j.contains(key))
        return;
    try {
        into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config key '") + key + "': " + e.what());
    }
}

Json vector_json(const Vector& v)
{
    Json a = Json::array();
    for (double x : v)
        a.push_back(x);
    return a;
}

}  // namespace

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string git_describe()
{
    return NSSNN_GIT_DESCRIBE;
}

Json to_json(const ExperimentConfig& cfg)
{
    const TrainingConfig& t = cfg.training;
    return Json{{"version", kConfigVersion},
                {"system", t.system},
                {"n_samples", t.n_samples},
                {"t_train", t.t_train},
                {"dt", t.dt},
                {"omega", t.omega},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"lr_decay", t.lr_decay},
                {"lr_decay_every", t.lr_decay_every},
                {"epochs", t.epochs},
                {"noise", t.noise},
                {"seed", t.seed},
                {"validation_fraction", t.validation_fraction},
                {"eval_dt", cfg.eval_dt},
                {"horizon", cfg.horizon},
                {"stride", cfg.stride},
                {"output_dir", cfg.output_dir}};
}

ExperimentConfig experiment_config_from_json(const Json& j)
{
    if (!j.is_object())
        throw Error(ErrorKind::InvalidConfig, "config must be a JSON object");
    static const std::set<std::string> known = {
        "version", "system",  "n_samples", "t_train",       "dt",
        "omega",   "batch_size", "learning_rate", "lr_decay", "lr_decay_every",
        "epochs",  "noise",   "seed",      "validation_fraction", "eval_dt",
        "horizon", "stride",  "output_dir"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    if (!j.contains("version") || !j.at("version").is_number_integer() ||
        j.at("version").get<int>() != kConfigVersion)
        throw Error(ErrorKind::InvalidConfig,
                    "config version must be " + std::to_string(kConfigVersion));

    ExperimentConfig cfg;
    TrainingConfig& t = cfg.training;
    read_key(j, "system", t.system);
    read_key(j, "n_samples", t.n_samples);
    read_key(j, "t_train", t.t_train);
    read_key(j, "dt", t.dt);
    read_key(j, "omega", t.omega);
    read_key(j, "batch_size", t.batch_size);
    read_key(j, "learning_rate", t.learning_rate);
    read_key(j, "lr_decay", t.lr_decay);
    read_key(j, "lr_decay_every", t.lr_decay_every);
    read_key(j, "epochs", t.epochs);
    read_key(j, "noise", t.noise);
    read_key(j, "seed", t.seed);
    read_key(j, "validation_fraction", t.validation_fraction);
    read_key(j, "eval_dt", cfg.eval_dt);
    read_key(j, "horizon", cfg.horizon);
    read_key(j, "stride", cfg.stride);
    read_key(j, "output_dir", cfg.output_dir);
    t.validate();
    if (!(cfg.eval_dt > 0.0) || !(cfg.horizon >= 0.0) || cfg.stride == 0)
        throw Error(ErrorKind::InvalidConfig, "eval_dt, horizon and stride must be positive");
    return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    return experiment_config_from_json(read_json(path));
}

Json to_json(const Checkpoint& ckpt)
{
    Json layers = Json::array();
    for (const auto& l : ckpt.theta.layers) {
        Json w = Json::array();
        for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
            Json row = Json::array();
            for (Eigen::Index k = 0; k < l.weights.cols(); ++k)
                row.push_back(l.weights(i, k));
            w.push_back(std::move(row));
        }
        Json b = Json::array();
        for (Eigen::Index i = 0; i < l.bias.size(); ++i)
            b.push_back(l.bias(i));
        layers.push_back(Json{{"weights", std::move(w)}, {"bias", std::move(b)}});
    }
    return Json{{"version", kCheckpointVersion},
                {"input_dim", ckpt.theta.input_dim()},
                {"layer_sizes", ckpt.theta.layer_sizes()},
                {"activation", "sigmoid"},
                {"layers", std::move(layers)},
                {"training_meta",
                 {{"system", ckpt.meta.system},
                  {"seed", ckpt.meta.seed},
                  {"epochs", ckpt.meta.epochs},
                  {"final_loss", ckpt.meta.final_loss}}}};
}

Checkpoint checkpoint_from_json(const Json& j)
{
    try {
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw Error(ErrorKind::InvalidConfig, "unsupported checkpoint version");
        if (j.at("activation").get<std::string>() != "sigmoid")
            throw Error(ErrorKind::InvalidConfig, "unsupported activation");
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        const auto& layers = j.at("layers");
        if (sizes.size() != layers.size() + 1 || sizes.front() != j.at("input_dim").get<std::size_t>())
            throw Error(ErrorKind::DimensionMismatch, "checkpoint layer sizes do not match layers");

        Checkpoint ckpt;
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const auto& w = layers[k].at("weights");
            const auto& b = layers[k].at("bias");
            const auto rows = static_cast<Eigen::Index>(sizes[k + 1]);
            const auto cols = static_cast<Eigen::Index>(sizes[k]);
            if (w.size() != sizes[k + 1] || b.size() != sizes[k + 1])
                throw Error(ErrorKind::DimensionMismatch, "checkpoint layer " + std::to_string(k) + " rows");
            DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
            for (Eigen::Index i = 0; i < rows; ++i) {
                const auto& row = w[static_cast<std::size_t>(i)];
                if (row.size() != sizes[k])
                    throw Error(ErrorKind::DimensionMismatch,
                                "checkpoint layer " + std::to_string(k) + " columns");
                for (Eigen::Index c = 0; c < cols; ++c)
                    layer.weights(i, c) = row[static_cast<std::size_t>(c)].get<double>();
                layer.bias(i) = b[static_cast<std::size_t>(i)].get<double>();
            }
            ckpt.theta.layers.push_back(std::move(layer));
        }
        ckpt.theta.validate();
        if (j.contains("training_meta")) {
            const auto& m = j.at("training_meta");
            ckpt.meta.system = m.at("system").get<std::string>();
            ckpt.meta.seed = m.at("seed").get<std::uint64_t>();
            ckpt.meta.epochs = m.at("epochs").get<std::size_t>();
            ckpt.meta.final_loss = m.at("final_loss").get<double>();
        }
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt)
{
    write_json(path, to_json(ckpt));
}

Checkpoint load_checkpoint(const fs::path& path)
{
    return checkpoint_from_json(read_json(path));
}

void write_dataset_csv(const fs::path& path, const Dataset& data)
{
    auto out = open_out(path);
    const std::size_t n = data.dim();
    out << "sample_id,role";
    for (std::size_t i = 0; i < 2 * n; ++i)
        out << ",comp_" << i;
    out << '\n';
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
        const auto& pair = data.samples[s];
        for (const auto& [role, state] : {std::pair{"initial", &pair.initial},
                                          std::pair{"target", &pair.target}}) {
            out << s << ',' << role;
            for (double v : state->q)
                out << ',' << format_double(v);
            for (double v : state->p)
                out << ',' << format_double(v);
            out << '\n';
        }
    }
}

Dataset read_dataset_csv(const fs::path& path, const std::string& system, double t_train)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::Io, "empty dataset " + path.string());
    const auto header = split(strip_cr(line));
    if (header.size() < 4 || header[0] != "sample_id" || header[1] != "role" ||
        (header.size() - 2) % 2 != 0)
        throw Error(ErrorKind::Io, "bad dataset header in " + path.string());
    const std::size_t n = (header.size() - 2) / 2;

    std::map<std::size_t, SamplePair> pairs;
    std::map<std::size_t, int> seen;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::Io, "ragged row in " + path.string());
        const auto id = static_cast<std::size_t>(parse_double(cells[0], path));
        PhaseState s{Vector(n), Vector(n)};
        for (std::size_t i = 0; i < n; ++i) {
            s.q[i] = parse_double(cells[2 + i], path);
            s.p[i] = parse_double(cells[2 + n + i], path);
        }
        if (cells[1] == "initial") {
            pairs[id].initial = std::move(s);
            seen[id] |= 1;
        } else if (cells[1] == "target") {
            pairs[id].target = std::move(s);
            seen[id] |= 2;
        } else {
            throw Error(ErrorKind::Io, "unknown role '" + cells[1] + "' in " + path.string());
        }
    }
    Dataset data{system, t_train, {}};
    for (auto& [id, pair] : pairs) {
        if (seen[id] != 3)
            throw Error(ErrorKind::Io, "sample " + std::to_string(id) + " lacks a role in " + path.string());
        data.samples.push_back(std::move(pair));
    }
    return data;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj)
{
    auto out = open_out(path);
    const std::size_t n = traj.dim();
    out << 't';
    for (const char* name : {"q", "p", "x", "y"})
        for (std::size_t i = 0; i < n; ++i)
            out << ',' << name << '_' << i;
    out << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& s = traj.states[k];
        out << format_double(traj.times[k]);
        for (const Vector* v : {&s.q, &s.p, &s.x, &s.y})
            for (double x : *v)
                out << ',' << format_double(x);
        out << '\n';
    }
}

Trajectory read_trajectory_csv(const fs::path& path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::Io, "empty trajectory " + path.string());
    const auto header = split(strip_cr(line));
    if (header.empty() || header[0] != "t" || (header.size() - 1) % 4 != 0)
        throw Error(ErrorKind::Io, "bad trajectory header in " + path.string());
    const std::size_t n = (header.size() - 1) / 4;
    Trajectory traj;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty())
            continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw Error(ErrorKind::Io, "ragged row in " + path.string());
        traj.times.push_back(parse_double(cells[0], path));
        AugmentedState s{Vector(n), Vector(n), Vector(n), Vector(n)};
        std::size_t c = 1;
        for (Vector* v : {&s.q, &s.p, &s.x, &s.y})
            for (double& x : *v)
                x = parse_double(cells[c++], path);
        traj.states.push_back(std::move(s));
    }
    return traj;
}

void write_loss_history_csv(const fs::path& path, const std::vector<EpochRecord>& history)
{
    auto out = open_out(path);
    out << "epoch,lr,train_loss,val_loss\n";
    for (const auto& r : history)
        out << r.epoch << ',' << format_double(r.learning_rate) << ','
            << format_double(r.train_loss) << ',' << format_double(r.val_loss) << '\n';
}

void write_series_csv(const fs::path& path, const std::vector<SeriesRow>& rows)
{
    auto out = open_out(path);
    out << "series,t,value\n";
    for (const auto& r : rows)
        out << r.series << ',' << format_double(r.t) << ',' << format_double(r.value) << '\n';
}

Json to_json(const EvaluationReport& report)
{
    Json initial{{"q", vector_json(report.initial.q)}, {"p", vector_json(report.initial.p)}};
    // Non-finite summaries cannot be stored as JSON numbers; they become null
    // and the diverged flag says why.
    auto number = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return Json{{"system", report.system},
                {"seed", report.seed},
                {"config_hash", report.config_hash},
                {"initial", std::move(initial)},
                {"horizon", report.horizon},
                {"prediction_error", number(report.prediction_error)},
                {"hamiltonian_deviation", number(report.hamiltonian_deviation)},
                {"hamiltonian_deviation_absolute", report.hamiltonian_deviation_absolute},
                {"max_abs_state", number(report.max_abs_state)},
                {"diverged", report.diverged},
                {"samples", report.times.size()}};
}

void write_vortex_frames(const fs::path& dir, const VortexRollout& run)
{
    fs::create_directories(dir);
    auto index = open_out(dir / "index.csv");
    index << "frame,t,path\n";
    for (std::size_t f = 0; f < run.frames.size(); ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.csv", f);
        auto out = open_out(dir / name);
        const auto& c = run.frames[f];
        out << "j,x,y,gamma\n";
        for (std::size_t j = 0; j < c.size(); ++j)
            out << j << ',' << format_double(c.x[j]) << ',' << format_double(c.y[j]) << ','
                << format_double(c.strength[j]) << '\n';
        index << f << ',' << format_double(run.times[f]) << ',' << name << '\n';
    }
}

void write_run_meta(const fs::path& dir, const std::string& command, const Json& config,
                    std::uint64_t seed, double wall_seconds)
{
    write_json(dir / "run_meta.json", Json{{"command", command},
                                           {"config", config},
                                           {"seed", seed},
                                           {"git_describe", git_describe()},
                                           {"wall_time_seconds", wall_seconds}});
}

void write_json(const fs::path& path, const Json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

Json read_json(const fs::path& path)
{
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, "cannot parse " + path.string() + ": " + e.what());
    }
}

}  // namespace nssnn::io
