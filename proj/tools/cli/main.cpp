#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "roadcell/roadcell.h"

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Owns one string returned by the library.
struct Owned {
    char* p = nullptr;
    ~Owned() { rc_string_free(p); }
    std::string str() const { return p == nullptr ? std::string() : std::string(p); }
};

using CorridorPtr = std::unique_ptr<rc_corridor, decltype(&rc_corridor_free)>;
using RoadsetPtr = std::unique_ptr<rc_roadset, decltype(&rc_roadset_free)>;
using DatasetPtr = std::unique_ptr<rc_dataset, decltype(&rc_dataset_free)>;
using ReportPtr = std::unique_ptr<rc_report, decltype(&rc_report_free)>;

// Thrown to unwind to main with a process exit code; the message is already
// printed by then.
struct Exit {
    int code;
};

// 0 success, 1 usage, 2 data problems (validation and io alike), 3 training.
int exit_code(rc_status st) {
    switch (st) {
        case RC_OK: return 0;
        case RC_ERR_USAGE: return 1;
        case RC_ERR_TRAINING: return 3;
        default: return 2;
    }
}

void need(rc_status st) {
    if (st == RC_OK) return;
    std::cerr << "error: " << rc_last_error() << "\n";
    throw Exit{exit_code(st)};
}

[[noreturn]] void die(int code, const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    throw Exit{code};
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) die(2, "cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) die(2, "cannot write " + path.string());
}

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CorridorPtr load_corridor(const fs::path& path) {
    rc_corridor* c = nullptr;
    need(rc_corridor_load(path.string().c_str(), &c));
    return {c, &rc_corridor_free};
}

std::vector<std::string> corridor_detectors(const rc_corridor* c) {
    std::vector<std::string> out;
    for (int i = 0; i < rc_corridor_site_count(c); ++i) {
        Owned det;
        need(rc_corridor_detector_id(c, i, &det.p));
        out.push_back(det.str());
    }
    return out;
}

void print_progress(const char* phase, int done, int total, void*) {
    std::cerr << phase << " " << done << "/" << total << "\n";
}

// Row count and column means of a timestamp,flow,speed CSV body.
struct CsvStats {
    long rows = 0;
    double mean_flow = 0.0;
    double mean_speed = 0.0;
};

CsvStats csv_stats(const std::string& text) {
    CsvStats s;
    double flow_sum = 0.0;
    double speed_sum = 0.0;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        flow_sum += std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        speed_sum += std::stod(line.substr(c2 + 1));
        ++s.rows;
    }
    if (s.rows > 0) {
        s.mean_flow = flow_sum / static_cast<double>(s.rows);
        s.mean_speed = speed_sum / static_cast<double>(s.rows);
    }
    return s;
}

// --- synth-road -------------------------------------------------------------

struct SynthRoadArgs {
    int weeks = 1;
    int sites = 3;
    std::uint64_t seed = 1;
    std::string corridor;
    std::string profile;
    std::string out = ".";
};

int cmd_synth_road(const SynthRoadArgs& a) {
    const std::string profile_text = a.profile.empty() ? "" : read_file(a.profile);
    std::vector<std::string> detectors;
    if (!a.corridor.empty()) {
        detectors = corridor_detectors(load_corridor(a.corridor).get());
    } else {
        for (int i = 0; i < a.sites; ++i) detectors.push_back("det" + std::to_string(i));
    }
    fs::create_directories(a.out);
    for (std::size_t i = 0; i < detectors.size(); ++i) {
        Owned defaults;
        const char* profile_arg = profile_text.c_str();
        if (profile_text.empty()) {
            need(rc_default_profile_json(static_cast<int>(i), &defaults.p));
            profile_arg = defaults.p;
        }
        Owned csv;
        need(rc_road_synth_csv(profile_arg, a.weeks, a.seed, detectors[i].c_str(),
                               &csv.p));
        const fs::path path = fs::path(a.out) / (detectors[i] + ".csv");
        write_file(path, csv.str());
        const CsvStats s = csv_stats(csv.str());
        char line[256];
        std::snprintf(line, sizeof line,
                      "%s: %ld rows, mean flow %.1f veh/slot, mean speed %.1f mph",
                      path.string().c_str(), s.rows, s.mean_flow, s.mean_speed);
        std::cout << line << "\n";
    }
    return 0;
}

// --- ingest-validate --------------------------------------------------------

struct IngestArgs {
    std::string corridor;
    std::string data;
    std::string out;
    int max_gap = 6;
};

int cmd_ingest_validate(const IngestArgs& a) {
    const CorridorPtr corridor = load_corridor(a.corridor);
    const std::vector<std::string> detectors = corridor_detectors(corridor.get());
    if (!a.out.empty()) fs::create_directories(a.out);
    for (const std::string& det : detectors) {
        const fs::path path = fs::path(a.data) / (det + ".csv");
        if (!fs::exists(path))
            die(2, "no road data for detector " + det + ": " + path.string() +
                       " does not exist");
        Owned filled, report;
        need(rc_road_validate_csv(path.string().c_str(), det.c_str(), a.max_gap,
                                  a.out.empty() ? nullptr : &filled.p, &report.p));
        const ordered_json j = ordered_json::parse(report.str());
        std::cout << det << ": " << j["filled"].size() << " slots filled, "
                  << j["excluded_days"].size() << " days dropped\n";
        if (!a.out.empty()) {
            write_file(fs::path(a.out) / (det + ".csv"), filled.str());
            write_file(fs::path(a.out) / (det + ".report.json"), report.str());
        }
    }
    std::cout << "validated " << detectors.size() << " detectors\n";
    return 0;
}

// --- generate ----------------------------------------------------------------

struct GenerateArgs {
    std::string corridor;
    std::string data;
    std::string profile;
    std::string gen_params;
    std::string out;
    int synth_weeks = 0;
    std::uint64_t synth_seed = 1;
    int max_gap = 6;
    bool keep_log = false;
};

RoadsetPtr build_roadset(const rc_corridor* corridor, const std::string& data_dir,
                         int max_gap, const std::string& profile_text, int synth_weeks,
                         std::uint64_t synth_seed) {
    rc_roadset* raw = nullptr;
    if (!data_dir.empty()) {
        need(rc_roadset_load(corridor, data_dir.c_str(), max_gap, &raw));
    } else {
        need(rc_roadset_synth(corridor,
                              profile_text.empty() ? nullptr : profile_text.c_str(),
                              synth_weeks, synth_seed, &raw));
    }
    return {raw, &rc_roadset_free};
}

int cmd_generate(const GenerateArgs& a) {
    if (a.data.empty() == (a.synth_weeks == 0))
        die(1, "provide exactly one of --data and --synth-weeks");
    const CorridorPtr corridor = load_corridor(a.corridor);
    const std::string profile_text = a.profile.empty() ? "" : read_file(a.profile);
    const RoadsetPtr roads = build_roadset(corridor.get(), a.data, a.max_gap,
                                           profile_text, a.synth_weeks, a.synth_seed);

    const std::string gen_text = a.gen_params.empty() ? "" : read_file(a.gen_params);
    const char* gen_arg = gen_text.empty() ? nullptr : gen_text.c_str();
    Owned effective;
    need(rc_gen_params_json(gen_arg, &effective.p));

    rc_dataset* ds_raw = nullptr;
    need(rc_dataset_generate(corridor.get(), roads.get(), gen_arg, a.keep_log ? 1 : 0,
                             &ds_raw));
    const DatasetPtr dataset(ds_raw, &rc_dataset_free);

    fs::create_directories(a.out);
    ordered_json outputs = ordered_json::array();
    for (int i = 0; i < rc_dataset_site_count(dataset.get()); ++i) {
        Owned bs, csv;
        need(rc_corridor_site_id(corridor.get(), i, &bs.p));
        need(rc_dataset_cell_csv(dataset.get(), i, &csv.p));
        const std::string name = bs.str() + ".csv";
        write_file(fs::path(a.out) / name, csv.str());
        outputs.push_back(name);
    }
    if (a.keep_log) {
        Owned log;
        need(rc_dataset_call_log(dataset.get(), &log.p));
        write_file(fs::path(a.out) / "call_log.jsonl", log.str());
        outputs.push_back("call_log.jsonl");
    }

    ordered_json manifest;
    manifest["created"] = now_utc();
    manifest["command"] = "generate";
    manifest["corridor"] = a.corridor;
    if (!a.data.empty()) {
        manifest["roads"] = {{"dir", a.data}, {"max_gap_slots", a.max_gap}};
    } else {
        manifest["roads"] = {{"synth_weeks", a.synth_weeks}, {"synth_seed", a.synth_seed}};
        if (!profile_text.empty())
            manifest["roads"]["profile"] = ordered_json::parse(profile_text);
    }
    manifest["gen_params"] = ordered_json::parse(effective.str());
    manifest["outputs"] = outputs;
    write_file(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << outputs.size() << " files to " << a.out << "\n";
    return 0;
}

// --- run ----------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string seeds;
    std::string sets;
    std::string out;
    double noise = -1.0;
    int jobs = 0;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const std::string& item : split_list(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            die(1, "bad seed in --seeds: " + item);
        }
    }
    return out;
}

// Writes <stem>.json, <stem>.txt and the report's plot CSVs (with an optional
// filename prefix) into dir; returns the file names and hands back the table.
std::vector<std::string> write_report_files(const fs::path& dir, const rc_report* rep,
                                            const std::string& stem,
                                            const std::string& plot_prefix,
                                            std::string* table_out) {
    Owned json, table;
    need(rc_report_json(rep, &json.p));
    need(rc_report_table(rep, &table.p));
    std::vector<std::string> files = {stem + ".json", stem + ".txt"};
    write_file(dir / files[0], json.str());
    write_file(dir / files[1], table.str());
    for (int i = 0; i < rc_report_plot_count(rep); ++i) {
        Owned name, csv;
        need(rc_report_plot_name(rep, i, &name.p));
        need(rc_report_plot_csv(rep, i, &csv.p));
        files.push_back(plot_prefix + name.str());
        write_file(dir / files.back(), csv.str());
    }
    if (table_out != nullptr) *table_out = table.str();
    return files;
}

// Scenario fields echoed back by the report, minus the per-cell results.
ordered_json effective_config(const rc_report* rep) {
    Owned json;
    need(rc_report_json(rep, &json.p));
    ordered_json j = ordered_json::parse(json.str());
    j.erase("cells");
    j.erase("improvements");
    return j;
}

int cmd_run(const RunArgs& a) {
    const fs::path config_path = a.config;
    const fs::path config_dir = config_path.parent_path();
    ordered_json cfg;
    try {
        cfg = ordered_json::parse(read_file(config_path));
    } catch (const nlohmann::json::exception& e) {
        die(2, "bad config JSON: " + std::string(e.what()));
    }
    if (!cfg.is_object()) die(2, "config must be a JSON object");
    const ordered_json echo = cfg;

    // Paths in the config resolve against the config file's directory.
    auto resolve = [&](const std::string& p) {
        const fs::path path = p;
        return path.is_relative() ? config_dir / path : path;
    };

    if (!cfg.contains("corridor")) die(2, "config needs a corridor path");
    const fs::path corridor_path = resolve(cfg["corridor"].get<std::string>());
    cfg.erase("corridor");

    std::string data_dir;
    std::string profile_text;
    int synth_weeks = 0;
    std::uint64_t synth_seed = 1;
    int max_gap = 6;
    if (cfg.contains("roads")) {
        ordered_json roads = cfg["roads"];
        cfg.erase("roads");
        if (roads.contains("dir")) {
            data_dir = resolve(roads["dir"].get<std::string>()).string();
            if (roads.contains("max_gap_slots")) max_gap = roads["max_gap_slots"];
        } else if (roads.contains("synth")) {
            const ordered_json synth = roads["synth"];
            synth_weeks = synth.value("weeks", 4);
            synth_seed = synth.value("seed", std::uint64_t{1});
            if (synth.contains("profile")) profile_text = synth["profile"].dump();
        } else {
            die(2, "config roads needs either dir or synth");
        }
    } else {
        die(2, "config needs a roads section");
    }

    std::string out_dir = a.out;
    if (out_dir.empty() && cfg.contains("out")) out_dir = cfg["out"].get<std::string>();
    cfg.erase("out");
    if (out_dir.empty()) die(2, "config needs an output directory (or pass --out)");

    // Flag overrides beat the config; whatever is absent falls to defaults.
    ordered_json overrides = ordered_json::object();
    if (!a.seeds.empty()) overrides["seeds"] = parse_seed_list(a.seeds);
    if (!a.sets.empty()) overrides["feature_sets"] = split_list(a.sets);
    if (a.noise >= 0.0) overrides["noise_sigma"] = a.noise;
    if (a.jobs > 0) overrides["jobs"] = a.jobs;
    for (const auto& [key, value] : overrides.items()) cfg[key] = value;
    if (!cfg.contains("jobs")) {
        const unsigned hw = std::thread::hardware_concurrency();
        cfg["jobs"] = hw == 0 ? 1 : hw;
    }

    const double noise_sigma = cfg.value("noise_sigma", 0.0);

    const CorridorPtr corridor = load_corridor(corridor_path);
    const RoadsetPtr roads = build_roadset(corridor.get(), data_dir, max_gap,
                                           profile_text, synth_weeks, synth_seed);

    fs::create_directories(out_dir);
    ordered_json outputs = ordered_json::array();

    cfg["noise_sigma"] = 0.0;
    rc_report* clean_raw = nullptr;
    need(rc_experiment_run(corridor.get(), roads.get(), cfg.dump().c_str(),
                           print_progress, nullptr, &clean_raw));
    const ReportPtr clean(clean_raw, &rc_report_free);
    std::string table;
    for (const std::string& f :
         write_report_files(out_dir, clean.get(), "report", "", &table))
        outputs.push_back(f);
    std::cout << table;

    ReportPtr noisy(nullptr, &rc_report_free);
    if (noise_sigma > 0.0) {
        cfg["noise_sigma"] = noise_sigma;
        rc_report* noisy_raw = nullptr;
        need(rc_experiment_run(corridor.get(), roads.get(), cfg.dump().c_str(),
                               print_progress, nullptr, &noisy_raw));
        noisy.reset(noisy_raw);
        std::string noisy_table;
        for (const std::string& f : write_report_files(out_dir, noisy.get(),
                                                       "report_noise", "noise_",
                                                       &noisy_table))
            outputs.push_back(f);
        std::cout << "\n" << noisy_table;
    }

    ordered_json manifest;
    manifest["created"] = now_utc();
    manifest["command"] = "run";
    manifest["config_path"] = config_path.string();
    manifest["config"] = echo;
    manifest["overrides"] = overrides;
    manifest["corridor"] = corridor_path.string();
    if (!data_dir.empty()) {
        manifest["roads"] = {{"dir", data_dir}, {"max_gap_slots", max_gap}};
    } else {
        manifest["roads"] = {{"synth_weeks", synth_weeks}, {"synth_seed", synth_seed}};
        if (!profile_text.empty())
            manifest["roads"]["profile"] = ordered_json::parse(profile_text);
    }
    manifest["jobs"] = cfg["jobs"];
    manifest["noise_sigma"] = noise_sigma;
    manifest["effective"] = effective_config(clean.get());
    if (noisy != nullptr) manifest["effective_noise"] = effective_config(noisy.get());
    manifest["outputs"] = outputs;
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

// --- report -------------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> dirs;
    std::string out;
    std::string file = "report.json";
};

int cmd_report(const ReportArgs& a) {
    std::vector<std::string> dirs = a.dirs;
    std::sort(dirs.begin(), dirs.end());
    std::vector<ReportPtr> parsed;
    std::vector<const rc_report*> raw;
    for (const std::string& dir : dirs) {
        const fs::path path = fs::path(dir) / a.file;
        if (!fs::exists(path)) die(2, "no " + a.file + " in " + dir);
        rc_report* rep = nullptr;
        need(rc_report_parse(read_file(path).c_str(), &rep));
        parsed.emplace_back(rep, &rc_report_free);
        raw.push_back(rep);
    }
    rc_report* merged_raw = nullptr;
    need(rc_report_merge(raw.data(), static_cast<int>(raw.size()), &merged_raw));
    const ReportPtr merged(merged_raw, &rc_report_free);

    Owned table;
    need(rc_report_table(merged.get(), &table.p));
    std::cout << table.str();

    if (!a.out.empty()) {
        fs::create_directories(a.out);
        const std::vector<std::string> files =
            write_report_files(a.out, merged.get(), "report", "", nullptr);
        ordered_json manifest;
        manifest["created"] = now_utc();
        manifest["command"] = "report";
        manifest["inputs"] = dirs;
        manifest["report_file"] = a.file;
        manifest["outputs"] = files;
        write_file(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"road-driven cellular load simulator and forecasting benchmark"};
    app.require_subcommand(1);

    SynthRoadArgs synth_args;
    CLI::App* synth = app.add_subcommand(
        "synth-road", "write synthetic detector CSVs with a weekday diurnal profile");
    synth->add_option("--weeks", synth_args.weeks, "weeks of data")
        ->required()
        ->check(CLI::Range(1, 520));
    CLI::Option* sites_opt =
        synth->add_option("--sites", synth_args.sites, "number of detectors")
            ->check(CLI::Range(1, 1024));
    synth->add_option("--corridor", synth_args.corridor,
                      "corridor CSV supplying detector ids")
        ->excludes(sites_opt);
    synth->add_option("--seed", synth_args.seed, "base RNG seed");
    synth->add_option("--profile", synth_args.profile,
                      "profile JSON file shared by all detectors");
    synth->add_option("--out", synth_args.out, "output directory");

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand(
        "ingest-validate", "check detector CSVs, interpolate short gaps");
    ingest->add_option("--corridor", ingest_args.corridor, "corridor CSV")->required();
    ingest->add_option("--data", ingest_args.data, "directory of <detector>.csv files")
        ->required();
    ingest->add_option("--max-gap", ingest_args.max_gap,
                       "longest gap to interpolate, in slots")
        ->check(CLI::Range(1, 288));
    ingest->add_option("--out", ingest_args.out, "write repaired CSVs and reports here");

    GenerateArgs generate_args;
    CLI::App* generate = app.add_subcommand(
        "generate", "simulate per-site call loads from road data");
    generate->add_option("--corridor", generate_args.corridor, "corridor CSV")
        ->required();
    CLI::Option* data_opt = generate->add_option(
        "--data", generate_args.data, "directory of <detector>.csv files");
    generate->add_option("--synth-weeks", generate_args.synth_weeks,
                         "synthesize this many weeks of road data instead")
        ->check(CLI::Range(1, 520))
        ->excludes(data_opt);
    generate->add_option("--synth-seed", generate_args.synth_seed,
                         "seed for synthesized road data");
    generate->add_option("--profile", generate_args.profile,
                         "profile JSON file for synthesized road data");
    generate->add_option("--gen-params", generate_args.gen_params,
                         "generator parameter JSON file");
    generate->add_option("--max-gap", generate_args.max_gap,
                         "longest gap to interpolate when loading --data");
    generate->add_flag("--keep-call-log", generate_args.keep_log,
                       "also write call_log.jsonl");
    generate->add_option("--out", generate_args.out, "output directory")->required();

    RunArgs run_args;
    CLI::App* run = app.add_subcommand(
        "run", "train and score forecasters across feature sets and seeds");
    run->add_option("--config", run_args.config, "experiment config JSON")->required();
    run->add_option("--seeds", run_args.seeds, "comma-separated run seeds (override)");
    run->add_option("--feature-sets", run_args.sets,
                    "comma-separated feature sets (override)");
    run->add_option("--noise", run_args.noise,
                    "flow noise sigma fraction (override)");
    run->add_option("--jobs", run_args.jobs, "worker threads (override)")
        ->check(CLI::Range(1, 1024));
    run->add_option("--out", run_args.out, "output directory (override)");

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand(
        "report", "merge run directories and print the comparison table");
    report->add_option("dirs", report_args.dirs, "run output directories")
        ->required()
        ->expected(-1);
    report->add_option("--file", report_args.file, "report file name inside each dir");
    report->add_option("--out", report_args.out, "write the merged report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (synth->parsed()) return cmd_synth_road(synth_args);
        if (ingest->parsed()) return cmd_ingest_validate(ingest_args);
        if (generate->parsed()) return cmd_generate(generate_args);
        if (run->parsed()) return cmd_run(run_args);
        if (report->parsed()) return cmd_report(report_args);
    } catch (const Exit& e) {
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
