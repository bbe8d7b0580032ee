#include "vafusion/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vafusion/cli/synth.hpp"
#include "vafusion/dataio/csv_io.hpp"
#include "vafusion/errors.hpp"
#include "vafusion/filter/speech_filter.hpp"
#include "vafusion/numerics/kernels.hpp"
#include "vafusion/trainer/trainer.hpp"

namespace vaf {

namespace fs = std::filesystem;

void configure_logging() {
  static bool done = false;
  if (!done) {
    // Log to stderr so command output on stdout stays clean.
    spdlog::set_default_logger(spdlog::stderr_color_st("vafusion"));
    spdlog::set_pattern("[%l] %v");
    done = true;
  }
  const char* env = std::getenv("VA_FUSION_LOG");
  if (env == nullptr || *env == '\0') {
    spdlog::set_level(spdlog::level::info);
    return;
  }
  const auto level = spdlog::level::from_str(env);
  if (level == spdlog::level::off && std::string(env) != "off") {
    throw ConfigError("VA_FUSION_LOG='" + std::string(env) + "' is not a log level");
  }
  spdlog::set_level(level);
}

namespace {

struct Options {
  std::string config;
  std::string manifest;
  std::string out;
  std::string model;
  std::string split = "devel";
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<int> threads;
  // synth
  std::optional<std::size_t> videos;
  std::optional<double> noise;
  std::optional<double> dropout;
  std::optional<double> face_dropout;
  bool full_views = false;
};

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

int cmd_synth(const Options& o) {
  require(o.out, "--out");
  SynthSpec spec = o.config.empty() ? SynthSpec{} : synth_spec_from_json(read_json(o.config));
  if (o.seed) spec.seed = *o.seed;
  if (o.videos) spec.n_videos = *o.videos;
  if (o.noise) spec.noise = {*o.noise, *o.noise, *o.noise};
  if (o.dropout) spec.dropout = {*o.dropout, *o.dropout, *o.dropout};
  if (o.face_dropout) spec.dropout[0] = *o.face_dropout;
  if (o.full_views) spec.full_views = true;
  const fs::path manifest = write_synthetic_corpus(spec, o.out);
  spdlog::info("wrote {} videos, manifest {}", spec.n_videos, manifest.string());
  return kExitOk;
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg = o.config.empty() ? TrainConfig{} : load_train_config(o.config);
  if (o.config.empty()) cfg.dcmmoe.modality_names = {"face", "behavior", "audio"};
  if (!o.model.empty()) cfg.model_kind = model_kind_from_string(o.model);
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.max_epochs = *o.epochs;
  cfg.validate();
  return cfg;
}

int cmd_train(const Options& o) {
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  const TrainConfig cfg = train_config(o);
  const Dataset data = prepare_dataset(load_manifest(o.manifest), cfg);
  fs::create_directories(o.out);
  {
    std::ofstream out(fs::path(o.out) / "config.json");
    out << to_json(cfg).dump(2) << '\n';
  }
  const TrainResult r = train_model(cfg, data, o.out);
  spdlog::info("best devel mean CCC {:.4f} at epoch {}; checkpoint {}", r.best_metric, r.best_epoch,
               r.checkpoint.string());
  return kExitOk;
}

// Empty text for an invalid target keeps plotting tools from drawing the sentinel.
std::string target_cell(const AnnotationTrack& ann, const Mask& valid, std::size_t f, std::size_t d) {
  return valid(f, d) ? format_double(ann.values(f, d)) : std::string();
}

int cmd_eval(const Options& o) {
  require(o.checkpoint, "--checkpoint");
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  const TrainedModel tm = load_trained(o.checkpoint);
  const Split split = split_from_string(o.split);
  const Dataset data = prepare_dataset(load_manifest(o.manifest), tm.config);
  const EvalResult res = evaluate_split(*tm.model, tm.config, data, split);

  const fs::path out(o.out);
  fs::create_directories(out / "plot");
  nlohmann::json j = res.to_json();
  j["split"] = std::string(to_string(split));
  j["model"] = std::string(to_string(tm.model->kind()));
  {
    std::ofstream f(out / "metrics.json", std::ios::binary);
    f << j.dump(2) << '\n';
    if (!f) throw DataError("cannot write " + (out / "metrics.json").string());
  }
  {
    std::ofstream f(out / "per_video.csv", std::ios::binary);
    f << "video_id,n_valid_valence,n_valid_arousal,ccc_valence,ccc_arousal,ccc_mean\n";
    for (const auto& v : res.videos) {
      f << v.video_id << ',' << v.report.n_valid[0] << ',' << v.report.n_valid[1] << ','
        << format_double(v.report.ccc_valence) << ',' << format_double(v.report.ccc_arousal) << ','
        << format_double(v.report.mean) << '\n';
    }
  }
  for (const auto& [vi, fp] : res.predictions) {
    const VideoData& v = data.videos[vi];
    const Mask valid = v.annotations.valid();
    std::ofstream f(out / "plot" / (v.id + ".csv"), std::ios::binary);
    f << "frame,target_v,pred_v,target_a,pred_a\n";
    for (std::size_t t = 0; t < v.frames(); ++t) {
      f << t << ',' << target_cell(v.annotations, valid, t, 0) << ',' << format_double(fp.values(t, 0)) << ','
        << target_cell(v.annotations, valid, t, 1) << ',' << format_double(fp.values(t, 1)) << '\n';
    }
  }
  spdlog::info("{} CCC valence {:.4f} arousal {:.4f} mean {:.4f}", to_string(split), res.overall.ccc_valence,
               res.overall.ccc_arousal, res.overall.mean);
  return kExitOk;
}

int cmd_predict(const Options& o) {
  require(o.checkpoint, "--checkpoint");
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  const TrainedModel tm = load_trained(o.checkpoint);
  const Split split = split_from_string(o.split);
  const Dataset data = prepare_dataset(load_manifest(o.manifest), tm.config);
  const auto videos = data.indices(split);
  if (videos.empty()) throw DataError("the manifest has no '" + o.split + "' videos");
  const auto samples = build_samples(tm.config, data, videos, false);
  const auto outputs = predict_samples(*tm.model, samples);
  fs::create_directories(o.out);
  for (std::size_t vi : videos) {
    const VideoData& v = data.videos[vi];
    const FramePredictions fp = frame_predictions(samples, outputs, vi, v.frames());
    std::map<std::size_t, std::array<double, 2>> rows;
    for (std::size_t t = 0; t < v.frames(); ++t) rows[t] = {fp.values(t, 0), fp.values(t, 1)};
    write_predictions_csv(fs::path(o.out) / (v.id + ".csv"), rows);
  }
  spdlog::info("wrote predictions for {} videos to {}", videos.size(), o.out);
  return kExitOk;
}

int cmd_filter(const Options& o) {
  require(o.manifest, "--manifest");
  require(o.out, "--out");
  FilterConfig fc;
  if (!o.config.empty()) fc = load_train_config(o.config).filter;
  fc.validate();
  const Manifest m = load_manifest(o.manifest);
  std::vector<FilterReportRow> rows;
  std::size_t kept = 0;
  for (const ManifestEntry& e : m.entries) {
    if (!e.mouth) continue;
    const MouthSeries mouth = load_mouth_csv(*e.mouth, e.video_id, e.fps);
    const AnnotationTrack ann = load_annotations(e.annotations, e.video_id, -5.0);
    for (auto& r : filter_video(mouth, ann, fc)) {
      kept += r.decision.keep ? 1 : 0;
      rows.push_back(std::move(r));
    }
  }
  fs::create_directories(o.out);
  write_filter_report(fs::path(o.out) / "filter_report.csv", rows);
  spdlog::info("kept {} of {} audio segments", kept, rows.size());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Multimodal valence-arousal regression: synthetic data, training, evaluation, prediction, filtering"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* c) {
    c->add_option("--config", o.config, "JSON configuration file");
    c->add_option("--seed", o.seed, "random seed (overrides the config)");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--threads", o.threads, "worker threads for evaluation");
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  common(synth);
  synth->add_option("--videos", o.videos, "number of videos");
  synth->add_option("--noise", o.noise, "observation noise for every modality");
  synth->add_option("--dropout", o.dropout, "frame dropout rate for every modality");
  synth->add_option("--face-dropout", o.face_dropout, "frame dropout rate for the face stream");
  synth->add_flag("--full-views", o.full_views, "every modality observes every latent factor");

  auto* train = app.add_subcommand("train", "train a model");
  common(train);
  train->add_option("--manifest", o.manifest, "corpus manifest");
  train->add_option("--model", o.model, "face, behavior, audio, dcmmoe or raav");
  train->add_option("--epochs", o.epochs, "epoch budget (overrides the config)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  common(eval);
  eval->add_option("--manifest", o.manifest, "corpus manifest");
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  eval->add_option("--split", o.split, "train, devel or test");
  eval->add_option("--model", o.model, "ignored; the checkpoint records its model");

  auto* predict = app.add_subcommand("predict", "write per-frame predictions");
  common(predict);
  predict->add_option("--manifest", o.manifest, "corpus manifest");
  predict->add_option("--checkpoint", o.checkpoint, "checkpoint file");
  predict->add_option("--split", o.split, "train, devel or test");
  predict->add_option("--model", o.model, "ignored; the checkpoint records its model");

  auto* filter = app.add_subcommand("filter", "decide which audio segments show speech");
  common(filter);
  filter->add_option("--manifest", o.manifest, "corpus manifest");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    configure_logging();
    if (o.threads) kernels::set_threads(*o.threads);
    if (synth->parsed()) return cmd_synth(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o);
    if (predict->parsed()) return cmd_predict(o);
    if (filter->parsed()) return cmd_filter(o);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace vaf
