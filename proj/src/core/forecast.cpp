#include "core/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/textio.hpp"

namespace roadcell {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::int64_t kSlotsPerWeek =
    static_cast<std::int64_t>(kSlotsPerDay) * kWeekdaysPerWeek;

}  // namespace

std::string feature_set_name(FeatureSet set) {
    switch (set) {
        case FeatureSet::C: return "C";
        case FeatureSet::FSC: return "FSC";
        case FeatureSet::NHC: return "NHC";
        case FeatureSet::FSNHC: return "FSNHC";
    }
    fail(ErrKind::internal, "unknown feature set");
}

FeatureSet feature_set_from_name(const std::string& name) {
    if (name == "C") return FeatureSet::C;
    if (name == "FSC") return FeatureSet::FSC;
    if (name == "NHC") return FeatureSet::NHC;
    if (name == "FSNHC") return FeatureSet::FSNHC;
    fail(ErrKind::validation, "unknown feature set '" + name + "' (expected C, FSC, NHC, FSNHC)");
}

std::vector<std::string> feature_columns(FeatureSet set) {
    switch (set) {
        case FeatureSet::C: return {"total_calls"};
        case FeatureSet::FSC: return {"flow", "speed", "total_calls"};
        case FeatureSet::NHC: return {"new_calls", "handover_calls", "total_calls"};
        case FeatureSet::FSNHC:
            return {"flow", "speed", "new_calls", "handover_calls", "total_calls"};
    }
    fail(ErrKind::internal, "unknown feature set");
}

int feature_count(FeatureSet set) { return static_cast<int>(feature_columns(set).size()); }

const std::vector<FeatureSet>& all_feature_sets() {
    static const std::vector<FeatureSet> sets = {FeatureSet::C, FeatureSet::FSC,
                                                 FeatureSet::NHC, FeatureSet::FSNHC};
    return sets;
}

FeatureTable build_feature_table(const RoadSeries& lagged_road, const CellSeries& cells) {
    FeatureTable t;
    std::size_t ri = 0;
    for (std::size_t ci = 0; ci < cells.slot_index.size(); ++ci) {
        const std::int64_t slot = cells.slot_index[ci];
        while (ri < lagged_road.slots.size() && lagged_road.slots[ri].slot_index < slot) ++ri;
        if (ri == lagged_road.slots.size()) break;
        if (lagged_road.slots[ri].slot_index != slot) continue;
        t.slot_index.push_back(slot);
        t.flow.push_back(static_cast<double>(lagged_road.slots[ri].flow));
        t.speed.push_back(lagged_road.slots[ri].speed);
        t.new_calls.push_back(static_cast<double>(cells.new_calls[ci]));
        t.handover_calls.push_back(static_cast<double>(cells.handover_calls[ci]));
        t.total_calls.push_back(static_cast<double>(cells.total_calls[ci]));
    }
    return t;
}

WeekRanges split_chronological(std::int64_t total_weeks, const std::array<int, 3>& ratios) {
    for (int r : ratios)
        if (r < 1) fail(ErrKind::validation, "split ratios must all be >= 1 week");
    const std::int64_t sum = ratios[0] + ratios[1] + ratios[2];
    if (sum != total_weeks)
        fail(ErrKind::validation,
             "split ratios " + std::to_string(ratios[0]) + ":" + std::to_string(ratios[1]) +
                 ":" + std::to_string(ratios[2]) + " cover " + std::to_string(sum) +
                 " weeks but the data covers " + std::to_string(total_weeks));
    WeekRanges w;
    w.train_end = ratios[0];
    w.val_end = ratios[0] + ratios[1];
    w.test_end = sum;
    return w;
}

SplitWindows build_windows(const FeatureTable& table, FeatureSet set, int m,
                           const WeekRanges& ranges) {
    if (m < 1) fail(ErrKind::validation, "history length must be >= 1");
    const std::vector<std::string> cols = feature_columns(set);
    std::vector<const std::vector<double>*> col_ptr;
    for (const std::string& c : cols) {
        if (c == "flow") col_ptr.push_back(&table.flow);
        else if (c == "speed") col_ptr.push_back(&table.speed);
        else if (c == "new_calls") col_ptr.push_back(&table.new_calls);
        else if (c == "handover_calls") col_ptr.push_back(&table.handover_calls);
        else col_ptr.push_back(&table.total_calls);
    }
    const int p = static_cast<int>(cols.size());

    SplitWindows out;
    out.train.m = out.val.m = out.test.m = m;
    out.train.p = out.val.p = out.test.p = p;

    const std::size_t n = table.rows();
    for (std::size_t r = static_cast<std::size_t>(m); r < n; ++r) {
        // rows r-m..r must be consecutive slots inside one day; target is row r.
        const std::int64_t target_slot = table.slot_index[r];
        if (table.slot_index[r - static_cast<std::size_t>(m)] != target_slot - m) continue;
        bool contiguous = true;
        for (int k = 0; k < m; ++k) {
            if (table.slot_index[r - static_cast<std::size_t>(k) - 1] != target_slot - k - 1) {
                contiguous = false;
                break;
            }
        }
        if (!contiguous) continue;
        if ((target_slot - m) / kSlotsPerDay != target_slot / kSlotsPerDay) continue;

        WindowSample w;
        w.target_slot = target_slot;
        w.target = table.total_calls[r];
        w.inputs.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(p));
        for (int step = 0; step < m; ++step) {
            const std::size_t row = r - static_cast<std::size_t>(m - step);
            for (int j = 0; j < p; ++j)
                w.inputs[static_cast<std::size_t>(step * p + j)] =
                    (*col_ptr[static_cast<std::size_t>(j)])[row];
        }
        const std::int64_t week = target_slot / kSlotsPerWeek;
        if (week < ranges.train_end) out.train.samples.push_back(std::move(w));
        else if (week < ranges.val_end) out.val.samples.push_back(std::move(w));
        else out.test.samples.push_back(std::move(w));
    }
    return out;
}

Scaler fit_scaler(const WindowSet& train) {
    if (train.samples.empty()) fail(ErrKind::validation, "cannot fit scaler on an empty split");
    const int p = train.p;
    Scaler s;
    s.f_min.assign(static_cast<std::size_t>(p), std::numeric_limits<double>::infinity());
    s.f_max.assign(static_cast<std::size_t>(p), -std::numeric_limits<double>::infinity());
    s.t_min = std::numeric_limits<double>::infinity();
    s.t_max = -std::numeric_limits<double>::infinity();
    for (const WindowSample& w : train.samples) {
        for (std::size_t k = 0; k < w.inputs.size(); ++k) {
            const std::size_t j = k % static_cast<std::size_t>(p);
            s.f_min[j] = std::min(s.f_min[j], w.inputs[k]);
            s.f_max[j] = std::max(s.f_max[j], w.inputs[k]);
        }
        s.t_min = std::min(s.t_min, w.target);
        s.t_max = std::max(s.t_max, w.target);
    }
    return s;
}

namespace {

double scale_value(double x, double lo, double hi) {
    if (!(hi > lo)) return 0.0;  // constant feature
    return (x - lo) / (hi - lo);
}

}  // namespace

void apply_scaler(const Scaler& scaler, WindowSet& windows) {
    const std::size_t p = static_cast<std::size_t>(windows.p);
    if (scaler.f_min.size() != p)
        fail(ErrKind::internal, "scaler feature count does not match windows");
    for (WindowSample& w : windows.samples) {
        for (std::size_t k = 0; k < w.inputs.size(); ++k) {
            const std::size_t j = k % p;
            w.inputs[k] = scale_value(w.inputs[k], scaler.f_min[j], scaler.f_max[j]);
        }
        w.target = scale_value(w.target, scaler.t_min, scaler.t_max);
    }
}

double scale_target(const Scaler& scaler, double value) {
    return scale_value(value, scaler.t_min, scaler.t_max);
}

double invert_target(const Scaler& scaler, double normalized) {
    if (!(scaler.t_max > scaler.t_min)) return scaler.t_min;
    return scaler.t_min + normalized * (scaler.t_max - scaler.t_min);
}

// --- LSTM -------------------------------------------------------------------

namespace {

struct Layout {
    int p = 0;
    int h = 0;
    std::size_t gate_block = 0;  // W + U + b for one gate

    explicit Layout(const LstmModel& m) : p(m.input_size), h(m.hidden_size) {
        gate_block = static_cast<std::size_t>(h) * static_cast<std::size_t>(p) +
                     static_cast<std::size_t>(h) * static_cast<std::size_t>(h) +
                     static_cast<std::size_t>(h);
    }
    std::size_t w(int gate) const { return static_cast<std::size_t>(gate) * gate_block; }
    std::size_t u(int gate) const {
        return w(gate) + static_cast<std::size_t>(h) * static_cast<std::size_t>(p);
    }
    std::size_t b(int gate) const {
        return u(gate) + static_cast<std::size_t>(h) * static_cast<std::size_t>(h);
    }
    std::size_t head_w() const { return 4 * gate_block; }
    std::size_t head_b() const { return head_w() + static_cast<std::size_t>(h); }
    std::size_t total() const { return head_b() + 1; }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct StepCache {
    std::vector<double> i, f, g, o, c, tc, h;
};

// One forward pass; caches are optional (trainers pass them, predictors skip).
double forward_one(const LstmModel& model, const double* x, int m,
                   std::vector<StepCache>* caches) {
    const Layout L(model);
    const int h = L.h;
    const int p = L.p;
    const double* P = model.params.data();
    std::vector<double> hs(static_cast<std::size_t>(h), 0.0);
    std::vector<double> cs(static_cast<std::size_t>(h), 0.0);
    std::vector<double> pre(static_cast<std::size_t>(h));
    if (caches != nullptr) caches->assign(static_cast<std::size_t>(m), StepCache{});

    for (int t = 0; t < m; ++t) {
        const double* xt = x + static_cast<std::size_t>(t) * static_cast<std::size_t>(p);
        StepCache* cache = caches != nullptr ? &(*caches)[static_cast<std::size_t>(t)] : nullptr;
        std::array<std::vector<double>, 4> act;
        for (int gate = 0; gate < 4; ++gate) {
            const double* W = P + L.w(gate);
            const double* U = P + L.u(gate);
            const double* B = P + L.b(gate);
            for (int r = 0; r < h; ++r) {
                double acc = B[r];
                const double* Wr = W + static_cast<std::size_t>(r) * static_cast<std::size_t>(p);
                for (int j = 0; j < p; ++j) acc += Wr[j] * xt[j];
                const double* Ur = U + static_cast<std::size_t>(r) * static_cast<std::size_t>(h);
                for (int j = 0; j < h; ++j) acc += Ur[j] * hs[static_cast<std::size_t>(j)];
                pre[static_cast<std::size_t>(r)] = acc;
            }
            act[static_cast<std::size_t>(gate)].resize(static_cast<std::size_t>(h));
            for (int r = 0; r < h; ++r) {
                const double z = pre[static_cast<std::size_t>(r)];
                act[static_cast<std::size_t>(gate)][static_cast<std::size_t>(r)] =
                    gate == 2 ? std::tanh(z) : sigmoid(z);
            }
        }
        for (int r = 0; r < h; ++r) {
            const std::size_t ri = static_cast<std::size_t>(r);
            cs[ri] = act[1][ri] * cs[ri] + act[0][ri] * act[2][ri];
            hs[ri] = act[3][ri] * std::tanh(cs[ri]);
        }
        if (cache != nullptr) {
            cache->i = act[0];
            cache->f = act[1];
            cache->g = act[2];
            cache->o = act[3];
            cache->c = cs;
            cache->tc.resize(static_cast<std::size_t>(h));
            for (int r = 0; r < h; ++r)
                cache->tc[static_cast<std::size_t>(r)] = std::tanh(cs[static_cast<std::size_t>(r)]);
            cache->h = hs;
        }
    }
    const double* HW = P + L.head_w();
    double y = P[L.head_b()];
    for (int r = 0; r < h; ++r) y += HW[r] * hs[static_cast<std::size_t>(r)];
    return y;
}

}  // namespace

std::size_t lstm_param_count(int input_size, int hidden_size) {
    LstmModel m;
    m.input_size = input_size;
    m.hidden_size = hidden_size;
    return Layout(m).total();
}

LstmModel lstm_init(int input_size, int hidden_size, std::uint64_t seed) {
    if (input_size < 1 || hidden_size < 1)
        fail(ErrKind::validation, "model sizes must be positive");
    LstmModel m;
    m.input_size = input_size;
    m.hidden_size = hidden_size;
    const Layout L(m);
    m.params.assign(L.total(), 0.0);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    // Weights uniform in +-bound; biases 0 except forget gate at +1.
    for (int gate = 0; gate < 4; ++gate) {
        const std::size_t wn = static_cast<std::size_t>(L.h) * static_cast<std::size_t>(L.p) +
                               static_cast<std::size_t>(L.h) * static_cast<std::size_t>(L.h);
        for (std::size_t k = 0; k < wn; ++k) m.params[L.w(gate) + k] = rng.uniform(-bound, bound);
        for (int r = 0; r < L.h; ++r)
            m.params[L.b(gate) + static_cast<std::size_t>(r)] = gate == 1 ? 1.0 : 0.0;
    }
    for (int r = 0; r <= L.h; ++r)  // head weights and bias
        m.params[L.head_w() + static_cast<std::size_t>(r)] =
            r < L.h ? rng.uniform(-bound, bound) : 0.0;
    return m;
}

double lstm_forward(const LstmModel& model, const WindowSample& window) {
    const std::size_t expect = static_cast<std::size_t>(model.input_size);
    if (window.inputs.size() % expect != 0)
        fail(ErrKind::validation, "window width does not match model input size");
    const int m = static_cast<int>(window.inputs.size() / expect);
    return forward_one(model, window.inputs.data(), m, nullptr);
}

double lstm_backward(const LstmModel& model, const std::vector<const WindowSample*>& batch,
                     std::vector<double>* out_grad) {
    if (batch.empty()) fail(ErrKind::internal, "empty batch");
    const Layout L(model);
    const int h = L.h;
    const int p = L.p;
    const double* P = model.params.data();
    out_grad->assign(L.total(), 0.0);
    double* G = out_grad->data();

    double loss = 0.0;
    std::vector<StepCache> caches;
    std::vector<double> dh(static_cast<std::size_t>(h)), dc(static_cast<std::size_t>(h));
    std::array<std::vector<double>, 4> dz;
    for (auto& v : dz) v.resize(static_cast<std::size_t>(h));

    for (const WindowSample* wptr : batch) {
        const WindowSample& w = *wptr;
        const int m = static_cast<int>(w.inputs.size() / static_cast<std::size_t>(p));
        const double y_hat = forward_one(model, w.inputs.data(), m, &caches);
        const double resid = y_hat - w.target;
        loss += resid * resid;
        const double dy = 2.0 * resid / static_cast<double>(batch.size());

        const std::vector<double>& h_final = caches[static_cast<std::size_t>(m - 1)].h;
        for (int r = 0; r < h; ++r) {
            G[L.head_w() + static_cast<std::size_t>(r)] +=
                dy * h_final[static_cast<std::size_t>(r)];
            dh[static_cast<std::size_t>(r)] = dy * P[L.head_w() + static_cast<std::size_t>(r)];
        }
        G[L.head_b()] += dy;
        std::fill(dc.begin(), dc.end(), 0.0);

        for (int t = m - 1; t >= 0; --t) {
            const StepCache& cc = caches[static_cast<std::size_t>(t)];
            const std::vector<double>* h_prev =
                t > 0 ? &caches[static_cast<std::size_t>(t - 1)].h : nullptr;
            const std::vector<double>* c_prev =
                t > 0 ? &caches[static_cast<std::size_t>(t - 1)].c : nullptr;
            const double* xt =
                w.inputs.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(p);

            for (int r = 0; r < h; ++r) {
                const std::size_t ri = static_cast<std::size_t>(r);
                const double do_r = dh[ri] * cc.tc[ri];
                const double dc_r = dc[ri] + dh[ri] * cc.o[ri] * (1.0 - cc.tc[ri] * cc.tc[ri]);
                const double di_r = dc_r * cc.g[ri];
                const double dg_r = dc_r * cc.i[ri];
                const double cp = c_prev != nullptr ? (*c_prev)[ri] : 0.0;
                const double df_r = dc_r * cp;
                dz[0][ri] = di_r * cc.i[ri] * (1.0 - cc.i[ri]);
                dz[1][ri] = df_r * cc.f[ri] * (1.0 - cc.f[ri]);
                dz[2][ri] = dg_r * (1.0 - cc.g[ri] * cc.g[ri]);
                dz[3][ri] = do_r * cc.o[ri] * (1.0 - cc.o[ri]);
                dc[ri] = dc_r * cc.f[ri];  // flows to c_{t-1}
            }
            std::fill(dh.begin(), dh.end(), 0.0);
            for (int gate = 0; gate < 4; ++gate) {
                const std::size_t gi = static_cast<std::size_t>(gate);
                double* GW = G + L.w(gate);
                double* GU = G + L.u(gate);
                double* GB = G + L.b(gate);
                const double* U = P + L.u(gate);
                for (int r = 0; r < h; ++r) {
                    const std::size_t ri = static_cast<std::size_t>(r);
                    const double d = dz[gi][ri];
                    if (d == 0.0) continue;
                    double* GWr = GW + ri * static_cast<std::size_t>(p);
                    for (int j = 0; j < p; ++j) GWr[j] += d * xt[j];
                    if (h_prev != nullptr) {
                        double* GUr = GU + ri * static_cast<std::size_t>(h);
                        for (int j = 0; j < h; ++j)
                            GUr[j] += d * (*h_prev)[static_cast<std::size_t>(j)];
                    }
                    GB[ri] += d;
                    const double* Ur = U + ri * static_cast<std::size_t>(h);
                    for (int j = 0; j < h; ++j) dh[static_cast<std::size_t>(j)] += d * Ur[j];
                }
            }
        }
    }
    return loss / static_cast<double>(batch.size());
}

void check_train_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) fail(ErrKind::validation, "learning_rate must be > 0");
    if (!(cfg.rmsprop_decay > 0.0) || cfg.rmsprop_decay >= 1.0)
        fail(ErrKind::validation, "rmsprop_decay must be in (0,1)");
    if (!(cfg.epsilon > 0.0)) fail(ErrKind::validation, "epsilon must be > 0");
    if (cfg.batch_size < 1) fail(ErrKind::validation, "batch_size must be >= 1");
    if (cfg.max_epochs < 1) fail(ErrKind::validation, "max_epochs must be >= 1");
    if (cfg.patience < 1) fail(ErrKind::validation, "patience must be >= 1");
    if (cfg.patience > cfg.max_epochs)
        fail(ErrKind::validation, "patience must not exceed max_epochs");
    if (cfg.hidden_size < 1) fail(ErrKind::validation, "hidden_size must be >= 1");
}

TrainConfig train_config_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad train config JSON: ") + e.what());
    }
    TrainConfig c;
    auto take_d = [&](const char* key, double* out) {
        if (j.contains(key)) {
            *out = j[key].get<double>();
            j.erase(key);
        }
    };
    auto take_i = [&](const char* key, int* out) {
        if (j.contains(key)) {
            *out = j[key].get<int>();
            j.erase(key);
        }
    };
    take_d("learning_rate", &c.learning_rate);
    take_d("rmsprop_decay", &c.rmsprop_decay);
    take_d("epsilon", &c.epsilon);
    take_i("batch_size", &c.batch_size);
    take_i("max_epochs", &c.max_epochs);
    take_i("patience", &c.patience);
    take_i("hidden_size", &c.hidden_size);
    if (j.contains("seed")) {
        c.seed = j["seed"].get<std::uint64_t>();
        j.erase("seed");
    }
    if (!j.empty()) fail(ErrKind::validation, "unknown train config field: " + j.begin().key());
    check_train_config(c);
    return c;
}

std::string train_config_json(const TrainConfig& cfg) {
    ordered_json j;
    j["learning_rate"] = cfg.learning_rate;
    j["rmsprop_decay"] = cfg.rmsprop_decay;
    j["epsilon"] = cfg.epsilon;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["patience"] = cfg.patience;
    j["hidden_size"] = cfg.hidden_size;
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

TrainResult train_lstm(const SplitWindows& splits, const TrainConfig& cfg) {
    check_train_config(cfg);
    if (splits.train.samples.empty()) fail(ErrKind::validation, "empty training split");
    if (splits.val.samples.empty()) fail(ErrKind::validation, "empty validation split");
    const int p = splits.train.p;

    TrainResult result;
    result.model = lstm_init(p, cfg.hidden_size,
                             mix_seed(cfg.seed, static_cast<std::uint64_t>(Stream::train), 1));
    Rng shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(Stream::train), 2));

    // Validation order is shuffled once; its MSE is order-invariant, kept for
    // protocol fidelity.
    std::vector<const WindowSample*> val(splits.val.samples.size());
    for (std::size_t i = 0; i < val.size(); ++i) val[i] = &splits.val.samples[i];
    for (std::size_t i = val.size(); i > 1; --i)
        std::swap(val[i - 1], val[static_cast<std::size_t>(shuffle_rng.next_u64() % i)]);

    std::vector<std::size_t> order(splits.train.samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad, accum(result.model.params.size(), 0.0);
    std::vector<double> best = result.model.params;
    result.best_val_mse = std::numeric_limits<double>::infinity();
    int wait = 0;

    auto val_mse = [&]() {
        double sum = 0.0;
        for (const WindowSample* w : val) {
            const double r = lstm_forward(result.model, *w) - w->target;
            sum += r * r;
        }
        return sum / static_cast<double>(val.size());
    };

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.next_u64() % i)]);

        double sq_sum = 0.0;
        std::vector<const WindowSample*> batch;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(&splits.train.samples[order[k]]);
            const double batch_mse = lstm_backward(result.model, batch, &grad);
            sq_sum += batch_mse * static_cast<double>(batch.size());
            for (std::size_t k = 0; k < grad.size(); ++k) {
                accum[k] = cfg.rmsprop_decay * accum[k] +
                           (1.0 - cfg.rmsprop_decay) * grad[k] * grad[k];
                result.model.params[k] -=
                    cfg.learning_rate * grad[k] / (std::sqrt(accum[k]) + cfg.epsilon);
            }
        }
        const double train_mse = sq_sum / static_cast<double>(order.size());
        if (!std::isfinite(train_mse))
            fail(ErrKind::training, "training diverged at epoch " + std::to_string(epoch));
        const double v = val_mse();
        if (!std::isfinite(v))
            fail(ErrKind::training,
                 "validation loss diverged at epoch " + std::to_string(epoch));
        result.history.push_back({epoch, train_mse, v});
        if (v < result.best_val_mse) {
            result.best_val_mse = v;
            result.best_epoch = epoch;
            best = result.model.params;
            wait = 0;
        } else if (++wait >= cfg.patience) {
            break;
        }
    }
    result.model.params = best;
    return result;
}

Predictions predict(const LstmModel& model, const Scaler& scaler, const WindowSet& windows) {
    Predictions out;
    out.slot_index.reserve(windows.samples.size());
    for (const WindowSample& w : windows.samples) {
        const double y = lstm_forward(model, w);
        out.slot_index.push_back(w.target_slot);
        out.target_norm.push_back(w.target);
        out.prediction_norm.push_back(y);
        out.target_raw.push_back(invert_target(scaler, w.target));
        out.prediction_raw.push_back(invert_target(scaler, y));
    }
    return out;
}

std::string predictions_csv_text(const Predictions& p) {
    std::string out = "slot_index,target,prediction\n";
    for (std::size_t i = 0; i < p.slot_index.size(); ++i) {
        out += std::to_string(p.slot_index[i]) + "," + format_double(p.target_raw[i]) + "," +
               format_double(p.prediction_raw[i]) + "\n";
    }
    return out;
}

std::string checkpoint_json(const LstmModel& model, const Scaler& scaler, FeatureSet set,
                            int m, const TrainConfig& cfg) {
    ordered_json j;
    j["feature_set"] = feature_set_name(set);
    j["history_len"] = m;
    j["input_size"] = model.input_size;
    j["hidden_size"] = model.hidden_size;
    j["params"] = model.params;
    ordered_json sj;
    sj["f_min"] = scaler.f_min;
    sj["f_max"] = scaler.f_max;
    sj["t_min"] = scaler.t_min;
    sj["t_max"] = scaler.t_max;
    j["scaler"] = sj;
    j["train_config"] = ordered_json::parse(train_config_json(cfg));
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad checkpoint JSON: ") + e.what());
    }
    Checkpoint c;
    try {
        c.set = feature_set_from_name(j.at("feature_set").get<std::string>());
        c.m = j.at("history_len").get<int>();
        c.model.input_size = j.at("input_size").get<int>();
        c.model.hidden_size = j.at("hidden_size").get<int>();
        c.model.params = j.at("params").get<std::vector<double>>();
        c.scaler.f_min = j.at("scaler").at("f_min").get<std::vector<double>>();
        c.scaler.f_max = j.at("scaler").at("f_max").get<std::vector<double>>();
        c.scaler.t_min = j.at("scaler").at("t_min").get<double>();
        c.scaler.t_max = j.at("scaler").at("t_max").get<double>();
        c.cfg = train_config_from_json(j.at("train_config").dump());
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(ErrKind::validation, std::string("bad checkpoint JSON: ") + e.what());
    }
    if (c.model.params.size() != lstm_param_count(c.model.input_size, c.model.hidden_size))
        fail(ErrKind::validation, "checkpoint parameter count does not match shapes");
    if (c.scaler.f_min.size() != static_cast<std::size_t>(c.model.input_size) ||
        c.scaler.f_max.size() != c.scaler.f_min.size())
        fail(ErrKind::validation, "checkpoint scaler does not match input size");
    return c;
}

}  // namespace roadcell
