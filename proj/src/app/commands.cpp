// SPDX-License-Identifier: Apache-2.0
#include "otrack/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "otrack/app/sequence_io.hpp"
#include "otrack/embedder.hpp"
#include "otrack/metrics.hpp"
#include "otrack/mot_io.hpp"
#include "otrack/simulator.hpp"
#include "otrack/tracker.hpp"

namespace otrack::app {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kSimulateOutputs = {
    SequenceFiles::kConfig, SequenceFiles::kGt,    SequenceFiles::kDet,       SequenceFiles::kDescriptors,
    SequenceFiles::kOracle, SequenceFiles::kTruth, SequenceFiles::kOcclusion,
};

std::string option(const CommandSpec& spec, const std::string& key, const std::string& fallback) {
    const auto it = spec.options.find(key);
    return it == spec.options.end() ? fallback : it->second;
}

std::uint64_t require_seed(const CommandSpec& spec) {
    if (!spec.seed) {
        throw UsageError(fmt::format("{}: --seed is required", spec.command));
    }
    return *spec.seed;
}

int parse_int(const std::string& text, const char* what) {
    int v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw UsageError(fmt::format("{}: expected an integer, got '{}'", what, text));
    }
    return v;
}

std::vector<std::string> planned_outputs(const CommandSpec& spec) {
    if (spec.command == "simulate") {
        return kSimulateOutputs;
    }
    if (spec.command == "track") {
        return {"results.txt"};
    }
    if (spec.command == "eval") {
        return {"report.csv", "report.txt"};
    }
    if (spec.command == "train-reid") {
        return {"model.otem", "loss.csv", "retrieval.csv"};
    }
    if (spec.command == "render") {
        return {fmt::format("occlusion_{:06d}.pgm", parse_int(option(spec, "frame", ""), "--frame"))};
    }
    throw UsageError("unknown command '" + spec.command + "'");
}

void prepare_out_dir(const CommandSpec& spec) {
    if (spec.out.empty()) {
        throw UsageError(spec.command + ": --out is required");
    }
    if (fs::exists(spec.out)) {
        if (!fs::is_directory(spec.out)) {
            throw std::runtime_error(spec.out.string() + " exists and is not a directory");
        }
        if (!fs::is_empty(spec.out) && !spec.force) {
            throw std::runtime_error(spec.out.string() + " is not empty (use --force to overwrite)");
        }
    } else {
        fs::create_directories(spec.out);
    }
}

void run_simulate(const CommandSpec& spec) {
    SimConfig sim = spec.config.sim;
    sim.seed = require_seed(spec);
    const SyntheticSequence seq = generate(sim);
    const fs::path& out = spec.out;
    write_file(out / SequenceFiles::kConfig, sim_config_text(spec.config));
    write_file(out / SequenceFiles::kGt, write_mot(gt_records(seq)));
    write_file(out / SequenceFiles::kDet, write_mot(det_records(seq)));
    std::vector<Eigen::MatrixXd> desc;
    std::vector<Eigen::MatrixXd> oracle;
    for (const auto& f : seq.frames) {
        desc.push_back(f.descriptors);
        oracle.push_back(f.oracle_features);
    }
    write_file(out / SequenceFiles::kDescriptors, encode_frame_matrices(desc, sim.descriptor_dim));
    write_file(out / SequenceFiles::kOracle, encode_frame_matrices(oracle, sim.descriptor_dim));
    write_file(out / SequenceFiles::kTruth, encode_truth(seq));
    write_file(out / SequenceFiles::kOcclusion, encode_occlusion_channel(occlusion_channel(seq, channel_params(sim))));
}

std::vector<Eigen::MatrixXd> track_features(const LoadedSequence& s, const std::string& embedder) {
    if (embedder == "none") {
        return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(s.frames));
    }
    if (embedder == "oracle") {
        if (s.oracle.empty() && s.frames > 0) {
            throw std::runtime_error("--embedder oracle: sequence has no oracle features");
        }
        return s.oracle;
    }
    if (s.descriptors.empty() && s.frames > 0) {
        throw std::runtime_error("sequence has no descriptors");
    }
    if (embedder == "raw") {
        return s.descriptors;
    }
    const EmbedderModel model = load_checkpoint(embedder);
    std::vector<Eigen::MatrixXd> out;
    for (const auto& d : s.descriptors) {
        out.push_back(embed(model, d));
    }
    return out;
}

void run_track(const CommandSpec& spec) {
    if (spec.inputs.size() != 1) {
        throw UsageError("track: expected one sequence directory");
    }
    const LoadedSequence s = load_sequence(spec.inputs[0]);
    TrackerConfig cfg = spec.config.tracker;
    const std::string refind = option(spec, "refind", cfg.refind ? "on" : "off");
    if (refind != "on" && refind != "off") {
        throw UsageError("--refind must be on or off");
    }
    cfg.refind = refind == "on";
    if (cfg.refind && !s.has_occlusion) {
        throw std::runtime_error(fmt::format("track: --refind on needs {} in the sequence directory",
                                             SequenceFiles::kOcclusion));
    }
    const std::string embedder = option(spec, "embedder", "oracle");
    const auto features = track_features(s, embedder);
    if (embedder == "none") {
        cfg.association.lambda = 0.0;
    }

    Tracker tracker(cfg);
    std::vector<MotRecord> results;
    for (int t = 0; t < s.frames; ++t) {
        FrameInput in;
        for (const auto& r : s.detections[t]) {
            in.detections.push_back(Detection{r.box, r.conf, r.box.center()});
        }
        in.features = features[t].rows() == static_cast<Eigen::Index>(in.detections.size())
                          ? features[t]
                          : Eigen::MatrixXd(static_cast<Eigen::Index>(in.detections.size()), 0);
        if (cfg.refind) {
            in.occlusion_centers = s.occlusion[t];
        }
        for (const auto& r : tracker.step(in).results) {
            results.push_back(MotRecord{t + 1, r.id, r.box, 1.0, -1.0, -1.0, -1.0});
        }
    }
    write_file(spec.out / "results.txt", write_mot(results));
}

void run_eval(const CommandSpec& spec, std::ostream& log) {
    if (spec.inputs.empty() || spec.inputs.size() % 2 != 0) {
        throw UsageError("eval: expected GT RESULTS [GT RESULTS ...]");
    }
    const std::size_t n = spec.inputs.size() / 2;
    std::vector<MetricsReport> reports(n);
    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const auto gt = read_mot_file(spec.inputs[2 * i]);
                const auto pred = read_mot_file(spec.inputs[2 * i + 1]);
                reports[i] = evaluate(gt, pred);
            } catch (const std::exception& e) {
                errors[i] = fmt::format("{}: {}", spec.inputs[2 * i + 1], e.what());
            }
        }
    };
    const int threads = std::min<int>(thread_limit(), static_cast<int>(n));
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (!e.empty()) {
            throw std::runtime_error(e);
        }
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
        names.push_back(fmt::format("seq{}", i + 1));
    }
    if (n > 1) {
        reports.push_back(merge_reports(reports));
        names.emplace_back("OVERALL");
    }
    std::string csv = report_csv_header();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        csv += report_csv_row(names[i], reports[i]);
    }
    const std::string table = report_table(names, reports);
    write_file(spec.out / "report.csv", csv);
    write_file(spec.out / "report.txt", table);
    log << table;
}

void run_train(const CommandSpec& spec, std::ostream& log) {
    if (spec.inputs.empty()) {
        throw UsageError("train-reid: expected one or more sequence directories");
    }
    const std::uint64_t seed = require_seed(spec);
    std::vector<ReidScene> scenes;
    int dim = 0;
    for (const auto& dir : spec.inputs) {
        const LoadedSequence s = load_sequence(dir);
        if (s.descriptors.empty()) {
            throw std::runtime_error(dir + ": no descriptors");
        }
        ReidScene scene;
        scene.frames = s.descriptors;
        for (int t = 0; t < s.frames; ++t) {
            scene.labels.push_back(s.truth.empty()
                                       ? std::vector<int>(static_cast<std::size_t>(s.descriptors[t].rows()), -1)
                                       : s.truth[t]);
            if (s.descriptors[t].rows() > 0) {
                dim = static_cast<int>(s.descriptors[t].cols());
            }
        }
        scenes.push_back(std::move(scene));
    }
    if (dim == 0) {
        throw std::runtime_error("train-reid: dataset has no detections");
    }
    TrainConfig tc = spec.config.train;
    tc.seed = seed + 1;
    if (tc.ratio_warning()) {
        log << fmt::format("warning: negative ratio {} >= 1 tends not to converge\n", tc.negative_ratio);
    }
    const EmbedderSpec& es = spec.config.embedder;
    const EmbedderModel init = EmbedderModel::random(dim, es.output_dim, es.hidden, es.activation, seed);
    const fs::path model_path = spec.out / "model.otem";
    fs::remove(model_path);
    TrainResult result;
    try {
        result = train(init, scenes, tc);
    } catch (const TrainingError&) {
        fs::remove(model_path);
        throw;
    }
    save_checkpoint(result.model, model_path);
    write_file(spec.out / "loss.csv", loss_csv(result.loss_history));
    std::string retrieval = "scene,rank1,mAP\n";
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        const RetrievalScore r = eval_retrieval(result.model, scenes[i]);
        retrieval += fmt::format("{},{:.6f},{:.6f}\n", i + 1, r.rank1, r.mean_ap);
    }
    write_file(spec.out / "retrieval.csv", retrieval);
    log << retrieval;
}

void run_render(const CommandSpec& spec) {
    if (spec.inputs.size() != 1) {
        throw UsageError("render: expected one sequence directory");
    }
    const int frame = parse_int(option(spec, "frame", ""), "--frame");
    const LoadedSequence s = load_sequence(spec.inputs[0]);
    if (frame < 1 || frame > s.frames) {
        throw std::runtime_error(fmt::format("render: frame {} out of range [1, {}]", frame, s.frames));
    }
    std::vector<BBox> boxes;
    for (const auto& r : s.gt[static_cast<std::size_t>(frame - 1)]) {
        boxes.push_back(r.box);
    }
    const OcclusionTargets t = render_targets(boxes, s.sim.tau, s.sim.width, s.sim.height, s.sim.stride);
    write_file(spec.out / fmt::format("occlusion_{:06d}.pgm", frame), to_pgm(t.heatmap));
}

}  // namespace

int thread_limit() {
    const char* env = std::getenv("OTRACK_THREADS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    const int v = parse_int(env, "OTRACK_THREADS");
    if (v < 1) {
        throw UsageError("OTRACK_THREADS must be >= 1");
    }
    return v;
}

std::string manifest_json(const CommandSpec& spec, const std::vector<std::string>& outputs) {
    json j;
    j["tool"] = "otrack";
    j["version"] = kToolVersion;
    j["command"] = spec.command;
    j["inputs"] = spec.inputs;
    j["options"] = spec.options;
    j["seed"] = spec.seed ? json(std::to_string(*spec.seed)) : json(nullptr);
    j["config"] = dump_config(spec.config);
    j["out"] = spec.out.string();
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

CommandSpec spec_from_manifest(const std::string& text, const fs::path& out, bool force) {
    CommandSpec spec;
    try {
        const json j = json::parse(text);
        if (j.at("tool") != "otrack") {
            throw std::runtime_error("manifest: not an otrack manifest");
        }
        spec.command = j.at("command").get<std::string>();
        spec.inputs = j.at("inputs").get<std::vector<std::string>>();
        spec.options = j.at("options").get<std::map<std::string, std::string>>();
        if (!j.at("seed").is_null()) {
            spec.seed = std::stoull(j.at("seed").get<std::string>());
        }
        spec.config = apply_config(parse_key_values(j.at("config").get<std::string>()));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("manifest: ") + e.what());
    }
    spec.out = out;
    spec.force = force;
    return spec;
}

std::vector<std::string> execute(const CommandSpec& spec, std::ostream& log) {
    const auto outputs = planned_outputs(spec);
    if (spec.command == "simulate" || spec.command == "train-reid") {
        require_seed(spec);
    }
    prepare_out_dir(spec);
    write_file(spec.out / kManifestName, manifest_json(spec, outputs));
    if (spec.command == "simulate") {
        run_simulate(spec);
    } else if (spec.command == "track") {
        run_track(spec);
    } else if (spec.command == "eval") {
        run_eval(spec, log);
    } else if (spec.command == "train-reid") {
        run_train(spec, log);
    } else if (spec.command == "render") {
        run_render(spec);
    }
    std::vector<std::string> written{kManifestName};
    written.insert(written.end(), outputs.begin(), outputs.end());
    return written;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Occlusion-aware multi-object tracking experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommandSpec spec;
    std::vector<std::string> positional;
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    bool force = false;

    auto common = [&](CLI::App* sub, bool seeded) {
        if (seeded) {
            sub->add_option("--seed", seed, "random seed (required)");
        }
        sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "config override, key=value (repeatable)");
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_flag("--force", force, "write into a non-empty output directory");
    };

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic sequence");
    common(simulate, true);

    std::string refind;
    std::string embedder = "oracle";
    auto* track = app.add_subcommand("track", "run the tracker on a sequence directory");
    common(track, false);
    track->add_option("sequence", positional, "sequence directory")->required()->expected(1);
    track->add_option("--refind", refind, "occlusion refinding")->check(CLI::IsMember({"on", "off"}));
    track->add_option("--embedder", embedder, "oracle, raw, none, or a checkpoint path");

    auto* eval = app.add_subcommand("eval", "CLEAR-MOT and IDF1 for GT RESULTS pairs");
    common(eval, false);
    eval->add_option("files", positional, "GT RESULTS [GT RESULTS ...]")->required();

    auto* train_cmd = app.add_subcommand("train-reid", "train the toy embedder on sequence directories");
    common(train_cmd, true);
    train_cmd->add_option("sequences", positional, "sequence directories")->required();

    int frame = 0;
    auto* render = app.add_subcommand("render", "write the occlusion heatmap of one frame as PGM");
    common(render, false);
    render->add_option("sequence", positional, "sequence directory")->required()->expected(1);
    render->add_option("--frame", frame, "1-based frame index")->required();

    std::string manifest_path;
    auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
    replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", out_dir, "output directory")->required();
    replay->add_flag("--force", force, "write into a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (replay->parsed()) {
            spec = spec_from_manifest(read_file(manifest_path), out_dir, force);
        } else {
            CLI::App* sub = app.get_subcommands().front();
            spec.command = sub->get_name();
            spec.seed = seed;
            spec.out = out_dir;
            spec.force = force;
            for (const auto& p : positional) {
                spec.inputs.push_back(fs::absolute(p).string());
            }
            if (!refind.empty()) {
                spec.options["refind"] = refind;
            }
            if (spec.command == "track") {
                const bool builtin = embedder == "oracle" || embedder == "raw" || embedder == "none";
                spec.options["embedder"] = builtin ? embedder : fs::absolute(embedder).string();
            }
            if (spec.command == "render") {
                spec.options["frame"] = std::to_string(frame);
            }
            RunConfig cfg;
            if (!config_path.empty()) {
                cfg = load_config(config_path);
            }
            std::string set_text;
            for (const auto& o : overrides) {
                set_text += o + "\n";
            }
            spec.config = apply_config(parse_key_values(set_text), cfg);
        }
        execute(spec, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace otrack::app
