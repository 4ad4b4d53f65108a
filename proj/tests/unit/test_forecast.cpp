#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "core/calendar.hpp"
#include "core/forecast.hpp"
#include "core/rng.hpp"
#include "test_util.hpp"

using namespace roadcell;
using testutil::contains;
using testutil::error_message;

namespace {

// Table whose columns are simple functions of the slot index, over whole days.
FeatureTable ramp_table(std::int64_t days, std::int64_t skip_slot = -1) {
    FeatureTable t;
    for (std::int64_t s = 0; s < days * kSlotsPerDay; ++s) {
        if (s == skip_slot) continue;
        t.slot_index.push_back(s);
        t.flow.push_back(2.0 * static_cast<double>(s));
        t.speed.push_back(60.0);
        t.new_calls.push_back(static_cast<double>(s + 1));
        t.handover_calls.push_back(static_cast<double>(s + 2));
        t.total_calls.push_back(static_cast<double>(s));
    }
    return t;
}

WindowSample make_sample(std::vector<double> inputs, double target, std::int64_t slot = 0) {
    WindowSample w;
    w.inputs = std::move(inputs);
    w.target = target;
    w.target_slot = slot;
    return w;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Mean squared error of the model over a batch, via forward passes only.
double batch_mse_forward(const LstmModel& model, const std::vector<WindowSample>& batch) {
    double sum = 0.0;
    for (const WindowSample& w : batch) {
        const double r = lstm_forward(model, w) - w.target;
        sum += r * r;
    }
    return sum / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("feature sets expose the expected columns") {
    CHECK(feature_set_name(FeatureSet::C) == "C");
    CHECK(feature_set_name(FeatureSet::FSNHC) == "FSNHC");
    CHECK(feature_set_from_name("NHC") == FeatureSet::NHC);
    CHECK(feature_set_from_name("FSC") == FeatureSet::FSC);
    CHECK(feature_count(FeatureSet::C) == 1);
    CHECK(feature_count(FeatureSet::FSC) == 3);
    CHECK(feature_count(FeatureSet::NHC) == 3);
    CHECK(feature_count(FeatureSet::FSNHC) == 5);
    CHECK(feature_columns(FeatureSet::FSC) ==
          std::vector<std::string>{"flow", "speed", "total_calls"});
    CHECK(feature_columns(FeatureSet::NHC) ==
          std::vector<std::string>{"new_calls", "handover_calls", "total_calls"});
    CHECK(feature_columns(FeatureSet::FSNHC) ==
          std::vector<std::string>{"flow", "speed", "new_calls", "handover_calls",
                                   "total_calls"});
    CHECK(all_feature_sets().size() == 4);

    ErrKind kind = ErrKind::internal;
    CHECK(contains(error_message([] { feature_set_from_name("XY"); }, &kind), "XY"));
    CHECK(kind == ErrKind::validation);
}

TEST_CASE("feature table joins road and cell series on slot index") {
    RoadSeries road;
    road.detector_id = "d1";
    for (std::int64_t s : {1, 2, 3, 5})
        road.slots.push_back({s, 10 + s, 50.0 + static_cast<double>(s)});

    CellSeries cells;
    cells.bs_id = "b1";
    cells.slot_index = {2, 3, 4, 5};
    cells.new_calls = {1, 2, 3, 4};
    cells.handover_calls = {0, 1, 0, 1};
    cells.total_calls = {1, 3, 3, 5};

    FeatureTable t = build_feature_table(road, cells);
    REQUIRE(t.rows() == 3);
    CHECK(t.slot_index == std::vector<std::int64_t>{2, 3, 5});
    CHECK(t.flow == std::vector<double>{12, 13, 15});
    CHECK(t.speed == std::vector<double>{52, 53, 55});
    CHECK(t.new_calls == std::vector<double>{1, 2, 4});
    CHECK(t.handover_calls == std::vector<double>{0, 1, 1});
    CHECK(t.total_calls == std::vector<double>{1, 3, 5});
}

TEST_CASE("chronological split turns week ratios into ranges") {
    WeekRanges w = split_chronological(24, {12, 6, 6});
    CHECK(w.train_end == 12);
    CHECK(w.val_end == 18);
    CHECK(w.test_end == 24);

    w = split_chronological(7, {4, 1, 2});
    CHECK(w.train_end == 4);
    CHECK(w.val_end == 5);
    CHECK(w.test_end == 7);

    w = split_chronological(4, {2, 1, 1});
    CHECK(w.train_end == 2);
    CHECK(w.val_end == 3);
    CHECK(w.test_end == 4);

    ErrKind kind = ErrKind::internal;
    std::string msg = error_message([] { split_chronological(24, {12, 6, 5}); }, &kind);
    CHECK(kind == ErrKind::validation);
    CHECK(contains(msg, "23"));
    CHECK(contains(msg, "24"));
    CHECK(contains(error_message([] { split_chronological(3, {2, 1, 0}); }), ">= 1"));
}

TEST_CASE("one full day of rows yields 288 - M windows") {
    FeatureTable t = ramp_table(1);
    const WeekRanges all_train{1, 1, 1};

    SplitWindows s = build_windows(t, FeatureSet::FSNHC, 6, all_train);
    CHECK(s.train.samples.size() == 282);
    CHECK(s.val.samples.empty());
    CHECK(s.test.samples.empty());
    CHECK(s.train.m == 6);
    CHECK(s.train.p == 5);

    // First window: history rows are slots 0..5 oldest first, target slot 6.
    const WindowSample& w = s.train.samples.front();
    REQUIRE(w.inputs.size() == 30);
    CHECK(w.target_slot == 6);
    CHECK(w.target == 6.0);
    for (int k = 0; k < 6; ++k) {
        CHECK(w.inputs[static_cast<std::size_t>(5 * k) + 0] == 2.0 * k);
        CHECK(w.inputs[static_cast<std::size_t>(5 * k) + 1] == 60.0);
        CHECK(w.inputs[static_cast<std::size_t>(5 * k) + 2] == k + 1.0);
        CHECK(w.inputs[static_cast<std::size_t>(5 * k) + 3] == k + 2.0);
        CHECK(w.inputs[static_cast<std::size_t>(5 * k) + 4] == static_cast<double>(k));
    }
    CHECK(s.train.samples.back().target_slot == 287);

    SplitWindows s1 = build_windows(t, FeatureSet::C, 1, all_train);
    CHECK(s1.train.samples.size() == 287);
    CHECK(s1.train.p == 1);
    CHECK(s1.train.samples.front().inputs == std::vector<double>{0.0});
}

TEST_CASE("windows never straddle a day boundary") {
    FeatureTable t = ramp_table(2);
    SplitWindows s = build_windows(t, FeatureSet::C, 6, {1, 1, 1});
    CHECK(s.train.samples.size() == 2 * 282);
    for (const WindowSample& w : s.train.samples) {
        CHECK((w.target_slot - 6) / kSlotsPerDay == w.target_slot / kSlotsPerDay);
        CHECK(w.target_slot % kSlotsPerDay >= 6);
    }
}

TEST_CASE("a missing slot removes exactly the windows that need it") {
    FeatureTable t = ramp_table(1, 100);
    SplitWindows s = build_windows(t, FeatureSet::C, 6, {1, 1, 1});
    // Targets 100 (absent) and 101..106 (history crosses the hole) drop out.
    CHECK(s.train.samples.size() == 275);
    for (const WindowSample& w : s.train.samples) {
        CHECK(w.target_slot != 100);
        CHECK((w.target_slot < 100 || w.target_slot > 106));
    }
}

TEST_CASE("lag alignment costs the first day one extra window") {
    Calendar cal;
    RoadSeries road;
    road.detector_id = "d1";
    road.calendar = cal;
    for (std::int64_t s = 0; s < kSlotsPerDay; ++s)
        road.slots.push_back({s, 100 + s, 60.0});
    RoadSeries lagged = lag_align(road);

    CellSeries cells;
    cells.bs_id = "b1";
    cells.calendar = cal;
    for (std::int64_t s = 0; s < kSlotsPerDay; ++s) {
        cells.slot_index.push_back(s);
        cells.new_calls.push_back(3);
        cells.handover_calls.push_back(1);
        cells.total_calls.push_back(4);
    }

    FeatureTable t = build_feature_table(lagged, cells);
    CHECK(t.rows() == 287);  // slot 0 has no predecessor measurement
    SplitWindows s = build_windows(t, FeatureSet::FSC, 6, {1, 1, 1});
    CHECK(s.train.samples.size() == 281);
    CHECK(s.train.samples.front().target_slot == 7);
}

TEST_CASE("windows land in the split owning their target week") {
    FeatureTable t = ramp_table(3 * kWeekdaysPerWeek);
    WeekRanges r = split_chronological(3, {1, 1, 1});
    SplitWindows s = build_windows(t, FeatureSet::FSNHC, 6, r);

    CHECK(s.train.samples.size() == 5 * 282);
    CHECK(s.val.samples.size() == 5 * 282);
    CHECK(s.test.samples.size() == 5 * 282);

    const std::int64_t week_slots = kSlotsPerDay * kWeekdaysPerWeek;
    for (const WindowSample& w : s.train.samples) CHECK(w.target_slot < week_slots);
    CHECK(s.val.samples.front().target_slot == week_slots + 6);
    CHECK(s.test.samples.front().target_slot == 2 * week_slots + 6);
    CHECK(std::is_sorted(s.val.samples.begin(), s.val.samples.end(),
                         [](const WindowSample& a, const WindowSample& b) {
                             return a.target_slot < b.target_slot;
                         }));
}

TEST_CASE("scaler maps training ranges to [0,1] and inverts exactly") {
    WindowSet train;
    train.m = 2;
    train.p = 2;
    train.samples.push_back(make_sample({10, 7, 20, 7}, 0.0));
    train.samples.push_back(make_sample({20, 7, 30, 7}, 200.0));

    Scaler sc = fit_scaler(train);
    CHECK(sc.f_min == std::vector<double>{10, 7});
    CHECK(sc.f_max == std::vector<double>{30, 7});
    CHECK(sc.t_min == 0.0);
    CHECK(sc.t_max == 200.0);

    WindowSet copy = train;
    apply_scaler(sc, copy);
    CHECK(copy.samples[0].inputs == std::vector<double>{0.0, 0.0, 0.5, 0.0});
    CHECK(copy.samples[1].inputs == std::vector<double>{0.5, 0.0, 1.0, 0.0});
    CHECK(copy.samples[0].target == 0.0);
    CHECK(copy.samples[1].target == 1.0);

    CHECK(scale_target(sc, 100.0) == 0.5);
    CHECK(invert_target(sc, 0.5) == 100.0);
    for (double x : {0.0, 3.5, 57.25, 100.0, 199.0, 250.0, -40.0})
        CHECK(invert_target(sc, scale_target(sc, x)) == doctest::Approx(x).epsilon(1e-12));

    // Constant target range maps to 0 and inverts to the constant.
    Scaler flat;
    flat.f_min = {1};
    flat.f_max = {1};
    flat.t_min = 42.0;
    flat.t_max = 42.0;
    CHECK(scale_target(flat, 42.0) == 0.0);
    CHECK(invert_target(flat, 0.0) == 42.0);

    ErrKind kind = ErrKind::internal;
    CHECK(contains(error_message([] { fit_scaler(WindowSet{}); }, &kind), "empty"));
    CHECK(kind == ErrKind::validation);
}

TEST_CASE("parameter count matches the flat layout") {
    // Per gate: H*P + H*H + H; four gates; head H + 1.
    CHECK(lstm_param_count(5, 16) == 1425);
    CHECK(lstm_param_count(1, 1) == 14);
    CHECK(lstm_param_count(3, 4) == 133);
    CHECK(lstm_param_count(1, 2) == 35);
}

TEST_CASE("initialization seeds weights in +-1/sqrt(H) with forget bias 1") {
    LstmModel m = lstm_init(5, 16, 99);
    REQUIRE(m.params.size() == 1425);
    const double bound = 1.0 / 4.0;
    const std::size_t gate_block = 16 * 5 + 16 * 16 + 16;
    for (int gate = 0; gate < 4; ++gate) {
        const std::size_t base = static_cast<std::size_t>(gate) * gate_block;
        for (std::size_t k = 0; k < 16 * 5 + 16 * 16; ++k) {
            CHECK(m.params[base + k] >= -bound);
            CHECK(m.params[base + k] <= bound);
        }
        for (std::size_t k = 0; k < 16; ++k)
            CHECK(m.params[base + 16 * 5 + 16 * 16 + k] == (gate == 1 ? 1.0 : 0.0));
    }
    CHECK(m.params.back() == 0.0);  // head bias

    LstmModel m2 = lstm_init(5, 16, 99);
    CHECK(m.params == m2.params);
    LstmModel m3 = lstm_init(5, 16, 100);
    CHECK(m.params != m3.params);
}

TEST_CASE("all-zero parameters predict zero") {
    LstmModel m;
    m.input_size = 2;
    m.hidden_size = 3;
    m.params.assign(lstm_param_count(2, 3), 0.0);
    CHECK(lstm_forward(m, make_sample({1, 2, 3, 4, 5, 6}, 0.0)) == 0.0);

    m.params.back() = 3.25;  // head bias only
    CHECK(lstm_forward(m, make_sample({1, 2, 3, 4, 5, 6}, 0.0)) == 3.25);

    CHECK(contains(error_message([&] { lstm_forward(m, make_sample({1, 2, 3}, 0.0)); }),
                   "input size"));
}

TEST_CASE("forward pass matches a hand-evaluated two-step recurrence") {
    LstmModel m;
    m.input_size = 1;
    m.hidden_size = 1;
    m.params = {0.5, -0.3, 0.1,    // W_i, U_i, b_i
                0.4, 0.2, 0.9,     // W_f, U_f, b_f
                0.8, -0.5, 0.05,   // W_g, U_g, b_g
                -0.2, 0.6, 0.2,    // W_o, U_o, b_o
                1.5, -0.25};       // head_w, head_b
    const double x0 = 1.0;
    const double x1 = -0.5;

    const double i0 = sig(0.5 * x0 + 0.1);
    const double g0 = std::tanh(0.8 * x0 + 0.05);
    const double o0 = sig(-0.2 * x0 + 0.2);
    const double c0 = i0 * g0;
    const double h0 = o0 * std::tanh(c0);

    const double i1 = sig(0.5 * x1 - 0.3 * h0 + 0.1);
    const double f1 = sig(0.4 * x1 + 0.2 * h0 + 0.9);
    const double g1 = std::tanh(0.8 * x1 - 0.5 * h0 + 0.05);
    const double o1 = sig(-0.2 * x1 + 0.6 * h0 + 0.2);
    const double c1 = f1 * c0 + i1 * g1;
    const double h1 = o1 * std::tanh(c1);
    const double expected = 1.5 * h1 - 0.25;

    CHECK(lstm_forward(m, make_sample({x0, x1}, 0.0)) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
    const double step = 1e-5;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        LstmModel model = lstm_init(3, 4, seed * 100 + 1);
        Rng rng(seed * 100 + 2);
        std::vector<WindowSample> batch;
        for (int s = 0; s < 3; ++s) {
            std::vector<double> inputs(12);
            for (double& v : inputs) v = rng.uniform(-1.0, 1.0);
            batch.push_back(make_sample(std::move(inputs), rng.uniform01()));
        }
        std::vector<const WindowSample*> ptrs;
        for (const WindowSample& w : batch) ptrs.push_back(&w);

        std::vector<double> grad;
        const double loss = lstm_backward(model, ptrs, &grad);
        CHECK(loss == doctest::Approx(batch_mse_forward(model, batch)).epsilon(1e-12));
        REQUIRE(grad.size() == model.params.size());

        double worst = 0.0;
        for (std::size_t k = 0; k < model.params.size(); ++k) {
            LstmModel probe = model;
            probe.params[k] = model.params[k] + step;
            const double up = batch_mse_forward(probe, batch);
            probe.params[k] = model.params[k] - step;
            const double down = batch_mse_forward(probe, batch);
            const double numeric = (up - down) / (2.0 * step);
            const double rel = std::fabs(grad[k] - numeric) /
                               std::max(1e-8, std::fabs(grad[k]) + std::fabs(numeric));
            worst = std::max(worst, rel);
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("exact fit gives zero loss and zero gradients") {
    LstmModel m;
    m.input_size = 2;
    m.hidden_size = 2;
    m.params.assign(lstm_param_count(2, 2), 0.0);
    m.params.back() = 0.75;
    WindowSample w = make_sample({0.1, 0.2, 0.3, 0.4}, 0.75);
    std::vector<double> grad;
    CHECK(lstm_backward(m, {&w}, &grad) == 0.0);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
    LstmModel model = lstm_init(2, 3, 7);
    WindowSample a = make_sample({0.1, 0.9, -0.4, 0.3}, 0.2);
    WindowSample b = make_sample({-0.6, 0.2, 0.8, -0.1}, 0.9);

    std::vector<double> ga, gb, gab, gba;
    const double la = lstm_backward(model, {&a}, &ga);
    const double lb = lstm_backward(model, {&b}, &gb);
    const double lab = lstm_backward(model, {&a, &b}, &gab);
    const double lba = lstm_backward(model, {&b, &a}, &gba);

    CHECK(lab == doctest::Approx((la + lb) / 2.0).epsilon(1e-12));
    CHECK(lab == doctest::Approx(lba).epsilon(1e-14));
    for (std::size_t k = 0; k < ga.size(); ++k) {
        CHECK(gab[k] == doctest::Approx((ga[k] + gb[k]) / 2.0).epsilon(1e-9));
        CHECK(gab[k] == doctest::Approx(gba[k]).epsilon(1e-12));
    }
}

namespace {

// Random inputs, fixed target: the network only has to learn a constant.
SplitWindows constant_target_splits(std::size_t n_train, std::size_t n_val) {
    SplitWindows s;
    s.train.m = s.val.m = s.test.m = 3;
    s.train.p = s.val.p = s.test.p = 2;
    Rng rng(404);
    auto fill = [&](WindowSet& set, std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            std::vector<double> inputs(6);
            for (double& v : inputs) v = rng.uniform01();
            set.samples.push_back(make_sample(std::move(inputs), 0.5,
                                              static_cast<std::int64_t>(k)));
        }
    };
    fill(s.train, n_train);
    fill(s.val, n_val);
    return s;
}

}  // namespace

TEST_CASE("training learns a constant target to near-zero error") {
    SplitWindows s = constant_target_splits(256, 32);
    TrainConfig cfg;
    cfg.hidden_size = 4;
    cfg.learning_rate = 5e-3;
    cfg.patience = 200;
    cfg.seed = 11;
    TrainResult r = train_lstm(s, cfg);
    CHECK(r.best_val_mse < 1e-4);
    CHECK(r.best_epoch >= 1);
    REQUIRE(!r.history.empty());
    CHECK(r.history.front().train_mse > r.history.back().train_mse);
}

TEST_CASE("training is deterministic in the seed") {
    SplitWindows s = constant_target_splits(64, 16);
    TrainConfig cfg;
    cfg.hidden_size = 3;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    cfg.seed = 5;
    TrainResult a = train_lstm(s, cfg);
    TrainResult b = train_lstm(s, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_mse == b.history[i].train_mse);
        CHECK(a.history[i].val_mse == b.history[i].val_mse);
    }
    CHECK(a.model.params == b.model.params);

    cfg.seed = 6;
    TrainResult c = train_lstm(s, cfg);
    CHECK(a.model.params != c.model.params);
}

TEST_CASE("early stopping restores the best weights") {
    // Zero inputs force a pure bias fit; validation flattens fast.
    SplitWindows s;
    s.train.m = s.val.m = 2;
    s.train.p = s.val.p = 1;
    Rng rng(909);
    for (int k = 0; k < 64; ++k)
        s.train.samples.push_back(make_sample({0.0, 0.0}, rng.uniform01()));
    for (int k = 0; k < 16; ++k)
        s.val.samples.push_back(make_sample({0.0, 0.0}, rng.uniform01()));

    TrainConfig cfg;
    cfg.hidden_size = 2;
    cfg.patience = 3;
    cfg.seed = 21;
    TrainResult r = train_lstm(s, cfg);
    CHECK(r.history.size() < static_cast<std::size_t>(cfg.max_epochs));
    CHECK(r.best_epoch + cfg.patience == static_cast<int>(r.history.size()));

    double min_val = r.history.front().val_mse;
    for (const EpochStats& e : r.history) min_val = std::min(min_val, e.val_mse);
    CHECK(r.best_val_mse == min_val);

    // Returned parameters reproduce the best validation score exactly.
    double sum = 0.0;
    for (const WindowSample& w : s.val.samples) {
        const double resid = lstm_forward(r.model, w) - w.target;
        sum += resid * resid;
    }
    CHECK(sum / 16.0 == doctest::Approx(r.best_val_mse).epsilon(1e-12));
}

TEST_CASE("non-finite loss aborts training with a training error") {
    SplitWindows s = constant_target_splits(32, 8);
    for (WindowSample& w : s.train.samples) w.target = 1e200;
    TrainConfig cfg;
    cfg.hidden_size = 2;
    cfg.seed = 3;
    ErrKind kind = ErrKind::internal;
    const std::string msg = error_message([&] { train_lstm(s, cfg); }, &kind);
    CHECK(kind == ErrKind::training);
    CHECK(contains(msg, "diverged"));
    CHECK(contains(msg, "epoch 1"));
}

TEST_CASE("training rejects empty splits and bad configs") {
    SplitWindows s = constant_target_splits(8, 4);
    ErrKind kind = ErrKind::internal;

    SplitWindows no_train = s;
    no_train.train.samples.clear();
    CHECK(contains(error_message([&] { train_lstm(no_train, TrainConfig{}); }, &kind),
                   "training split"));
    CHECK(kind == ErrKind::validation);

    SplitWindows no_val = s;
    no_val.val.samples.clear();
    CHECK(contains(error_message([&] { train_lstm(no_val, TrainConfig{}); }),
                   "validation split"));

    TrainConfig bad;
    bad.learning_rate = 0.0;
    CHECK(contains(error_message([&] { check_train_config(bad); }), "learning_rate"));
    bad = TrainConfig{};
    bad.patience = 300;
    CHECK(contains(error_message([&] { check_train_config(bad); }), "patience"));
    bad = TrainConfig{};
    bad.rmsprop_decay = 1.0;
    CHECK(contains(error_message([&] { check_train_config(bad); }), "rmsprop_decay"));
    bad = TrainConfig{};
    bad.batch_size = 0;
    CHECK(contains(error_message([&] { check_train_config(bad); }), "batch_size"));
}

TEST_CASE("train config round-trips through JSON") {
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.rmsprop_decay = 0.95;
    cfg.epsilon = 1e-7;
    cfg.batch_size = 16;
    cfg.max_epochs = 50;
    cfg.patience = 5;
    cfg.hidden_size = 8;
    cfg.seed = 1234;
    TrainConfig back = train_config_from_json(train_config_json(cfg));
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.rmsprop_decay == cfg.rmsprop_decay);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.batch_size == cfg.batch_size);
    CHECK(back.max_epochs == cfg.max_epochs);
    CHECK(back.patience == cfg.patience);
    CHECK(back.hidden_size == cfg.hidden_size);
    CHECK(back.seed == cfg.seed);

    TrainConfig partial = train_config_from_json("{\"learning_rate\": 0.02}");
    CHECK(partial.learning_rate == 0.02);
    CHECK(partial.batch_size == 32);
    CHECK(partial.hidden_size == 16);

    ErrKind kind = ErrKind::internal;
    CHECK(contains(error_message([] { train_config_from_json("{\"foo\": 1}"); }, &kind),
                   "foo"));
    CHECK(kind == ErrKind::validation);
    CHECK(contains(error_message([] { train_config_from_json("not json"); }), "JSON"));
}

TEST_CASE("predict inverts normalized outputs into original units") {
    LstmModel m;
    m.input_size = 2;
    m.hidden_size = 3;
    m.params.assign(lstm_param_count(2, 3), 0.0);
    m.params.back() = 0.5;

    Scaler sc;
    sc.f_min = {0, 0};
    sc.f_max = {1, 1};
    sc.t_min = 0.0;
    sc.t_max = 200.0;

    WindowSet windows;
    windows.m = 2;
    windows.p = 2;
    windows.samples.push_back(make_sample({0.1, 0.2, 0.3, 0.4}, 0.25, 12));
    windows.samples.push_back(make_sample({0.5, 0.6, 0.7, 0.8}, 1.0, 13));

    Predictions pred = predict(m, sc, windows);
    REQUIRE(pred.slot_index.size() == 2);
    CHECK(pred.slot_index == std::vector<std::int64_t>{12, 13});
    CHECK(pred.prediction_norm[0] == 0.5);
    CHECK(pred.prediction_raw[0] == 100.0);
    CHECK(pred.prediction_raw[1] == 100.0);
    CHECK(pred.target_raw[0] == 50.0);
    CHECK(pred.target_raw[1] == 200.0);

    CHECK(predictions_csv_text(pred) ==
          "slot_index,target,prediction\n12,50,100\n13,200,100\n");

    Predictions none = predict(m, sc, WindowSet{.m = 2, .p = 2, .samples = {}});
    CHECK(none.slot_index.empty());
    CHECK(predictions_csv_text(none) == "slot_index,target,prediction\n");
}

TEST_CASE("checkpoints reload the exact model") {
    LstmModel m = lstm_init(3, 4, 42);
    Scaler sc;
    sc.f_min = {1, 2, 3};
    sc.f_max = {4, 5, 6.000000000000001};
    sc.t_min = 0.125;
    sc.t_max = 199.875;
    TrainConfig cfg;
    cfg.learning_rate = 0.003;
    cfg.hidden_size = 4;
    cfg.seed = 77;

    const std::string text = checkpoint_json(m, sc, FeatureSet::NHC, 6, cfg);
    Checkpoint c = checkpoint_from_json(text);
    CHECK(c.set == FeatureSet::NHC);
    CHECK(c.m == 6);
    CHECK(c.model.input_size == 3);
    CHECK(c.model.hidden_size == 4);
    CHECK(c.model.params == m.params);
    CHECK(c.scaler.f_min == sc.f_min);
    CHECK(c.scaler.f_max == sc.f_max);
    CHECK(c.scaler.t_min == sc.t_min);
    CHECK(c.scaler.t_max == sc.t_max);
    CHECK(c.cfg.learning_rate == cfg.learning_rate);
    CHECK(c.cfg.seed == cfg.seed);

    ErrKind kind = ErrKind::internal;
    CHECK(contains(error_message([] { checkpoint_from_json("{"); }, &kind), "JSON"));
    CHECK(kind == ErrKind::validation);

    nlohmann::ordered_json j = nlohmann::ordered_json::parse(text);
    j["hidden_size"] = 5;
    CHECK(contains(error_message([&] { checkpoint_from_json(j.dump()); }),
                   "parameter count"));

    j = nlohmann::ordered_json::parse(text);
    j["scaler"]["f_min"] = {1.0, 2.0};
    CHECK(contains(error_message([&] { checkpoint_from_json(j.dump()); }),
                   "scaler"));
}
