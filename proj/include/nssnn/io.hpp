#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "nssnn/core.hpp"
#include "nssnn/evaluation.hpp"
#include "nssnn/mlp.hpp"
#include "nssnn/training.hpp"
#include "nssnn/vortex.hpp"

namespace nssnn::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kConfigVersion = 1;
inline constexpr int kCheckpointVersion = 1;

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Build identifier baked in at configure time.
std::string git_describe();

/// Training parameters plus the evaluation settings and output location of one
/// experiment. Keys missing from a file keep their defaults; unknown keys and
/// a wrong version are rejected with InvalidConfig.
struct ExperimentConfig {
    TrainingConfig training;
    double eval_dt = 0.01;
    double horizon = 100.0;
    std::size_t stride = 1;
    std::string output_dir = "out";

    EvalConfig eval() const { return {eval_dt, training.omega, stride}; }
};

Json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const fs::path& path);

struct TrainingMeta {
    std::string system;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double final_loss = 0.0;
};

struct Checkpoint {
    MlpParameters theta;
    TrainingMeta meta;
};

Json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);
void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const fs::path& path);

/// sample_id,role,comp_0..comp_{2N-1}; two rows (initial, target) per sample.
void write_dataset_csv(const fs::path& path, const Dataset& data);
Dataset read_dataset_csv(const fs::path& path, const std::string& system, double t_train);

/// t,q_0..,p_0..,x_0..,y_0..
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const fs::path& path);

/// epoch,lr,train_loss,val_loss
void write_loss_history_csv(const fs::path& path, const std::vector<EpochRecord>& history);

/// Long-format plot data: series,t,value.
struct SeriesRow {
    std::string series;
    double t;
    double value;
};
void write_series_csv(const fs::path& path, const std::vector<SeriesRow>& rows);

Json to_json(const EvaluationReport& report);

/// One CSV per frame (j,x,y,gamma) in dir plus index.csv (frame,t,path).
void write_vortex_frames(const fs::path& dir, const VortexRollout& run);

/// run_meta.json with the resolved config, seed, build id and wall time.
void write_run_meta(const fs::path& dir, const std::string& command, const Json& config,
                    std::uint64_t seed, double wall_seconds);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

}  // namespace nssnn::io
