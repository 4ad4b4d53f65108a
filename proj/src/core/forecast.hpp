#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/cellgen.hpp"
#include "core/road_data.hpp"

namespace roadcell {

// Feature sets for the comparison: calls-only baseline, road-enriched,
// handover-enriched, and everything. Target is always next-slot total_calls.
enum class FeatureSet { C, FSC, NHC, FSNHC };

std::string feature_set_name(FeatureSet set);
FeatureSet feature_set_from_name(const std::string& name);
std::vector<std::string> feature_columns(FeatureSet set);
int feature_count(FeatureSet set);
const std::vector<FeatureSet>& all_feature_sets();

// One row per slot that has both lag-aligned road measurements and cell
// counts. Row order follows slot_index.
struct FeatureTable {
    std::vector<std::int64_t> slot_index;
    std::vector<double> flow;
    std::vector<double> speed;
    std::vector<double> new_calls;
    std::vector<double> handover_calls;
    std::vector<double> total_calls;

    std::size_t rows() const { return slot_index.size(); }
};

// Inner join on slot_index. `lagged_road` must already be lag-aligned.
FeatureTable build_feature_table(const RoadSeries& lagged_road, const CellSeries& cells);

// inputs laid out row-major: M rows of p features, oldest history step first.
struct WindowSample {
    std::vector<double> inputs;
    double target = 0.0;          // next-slot total_calls
    std::int64_t target_slot = 0;
};

struct WindowSet {
    int m = 0;
    int p = 0;
    std::vector<WindowSample> samples;
};

struct SplitWindows {
    WindowSet train;
    WindowSet val;
    WindowSet test;
};

// Exclusive week bounds of the chronological split; week w belongs to train
// when w < train_end, to val when w < val_end, else to test.
struct WeekRanges {
    std::int64_t train_end = 0;
    std::int64_t val_end = 0;
    std::int64_t test_end = 0;
};

// Ratios are in weeks and must sum to total_weeks.
WeekRanges split_chronological(std::int64_t total_weeks, const std::array<int, 3>& ratios);

// Windows use M consecutive slots plus the target slot, all within one day;
// assignment to a split follows the target slot's week. Chronological order
// is preserved (shuffling happens inside training).
SplitWindows build_windows(const FeatureTable& table, FeatureSet set, int m,
                           const WeekRanges& ranges);

// Min-max normalization fitted on the training split only. A constant
// feature maps to 0 and inverts back to the constant.
struct Scaler {
    std::vector<double> f_min;
    std::vector<double> f_max;
    double t_min = 0.0;
    double t_max = 0.0;
};

Scaler fit_scaler(const WindowSet& train);
void apply_scaler(const Scaler& scaler, WindowSet& windows);
double scale_target(const Scaler& scaler, double value);
double invert_target(const Scaler& scaler, double normalized);

// Single-layer LSTM, gate order i,f,g,o; affine head with no activation.
// Parameters live in one flat vector:
//   per gate: W (H x P, row-major), U (H x H), b (H); then head_w (H), head_b.
struct LstmModel {
    int input_size = 0;
    int hidden_size = 0;
    std::vector<double> params;
};

std::size_t lstm_param_count(int input_size, int hidden_size);
LstmModel lstm_init(int input_size, int hidden_size, std::uint64_t seed);

double lstm_forward(const LstmModel& model, const WindowSample& window);

// Mean-squared-error gradient over the batch; out_grad is resized to
// params.size(). Returns the batch MSE.
double lstm_backward(const LstmModel& model, const std::vector<const WindowSample*>& batch,
                     std::vector<double>* out_grad);

struct TrainConfig {
    double learning_rate = 1e-3;
    double rmsprop_decay = 0.9;
    double epsilon = 1e-8;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 10;
    int hidden_size = 16;
    std::uint64_t seed = 0;
};

void check_train_config(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);
std::string train_config_json(const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    LstmModel model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_mse = 0.0;
};

// Mini-batch RMSProp on normalized windows; early stopping on validation MSE
// with best-weights restore. Deterministic for a given cfg.seed.
TrainResult train_lstm(const SplitWindows& splits, const TrainConfig& cfg);

// Predictions for each window, normalized and in original units.
struct Predictions {
    std::vector<std::int64_t> slot_index;
    std::vector<double> target_norm;
    std::vector<double> prediction_norm;
    std::vector<double> target_raw;
    std::vector<double> prediction_raw;
};

Predictions predict(const LstmModel& model, const Scaler& scaler, const WindowSet& windows);

std::string predictions_csv_text(const Predictions& p);

// Checkpoint: everything needed to reload the trained model exactly.
std::string checkpoint_json(const LstmModel& model, const Scaler& scaler, FeatureSet set,
                            int m, const TrainConfig& cfg);
struct Checkpoint {
    LstmModel model;
    Scaler scaler;
    FeatureSet set = FeatureSet::C;
    int m = 0;
    TrainConfig cfg;
};
Checkpoint checkpoint_from_json(const std::string& json_text);

}  // namespace roadcell
