#include "vafusion/cli/synth.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "vafusion/dataio/csv_io.hpp"
#include "vafusion/errors.hpp"
#include "vafusion/numerics/rng.hpp"

namespace vaf {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
  if (n_videos < 2) throw ConfigError("synth: need at least two videos");
  if (min_frames == 0 || max_frames < min_frames) throw ConfigError("synth: invalid frame range");
  if (fps <= 0.0) throw ConfigError("synth: fps must be positive");
  for (std::size_t m = 0; m < 3; ++m) {
    if (dims[m] == 0) throw ConfigError("synth: modality dimensions must be positive");
    if (noise[m] < 0.0) throw ConfigError("synth: noise must be nonnegative");
    if (dropout[m] < 0.0 || dropout[m] > 1.0) throw ConfigError("synth: dropout must be in [0,1]");
  }
  if (dropout[0] >= 1.0 && dropout[1] >= 1.0 && dropout[2] >= 1.0) {
    throw ConfigError("synth: at least one modality must be observable");
  }
  if (invalid_rate < 0.0 || invalid_rate >= 1.0) throw ConfigError("synth: invalid_rate must be in [0,1)");
  if (devel_fraction <= 0.0 || devel_fraction >= 1.0) throw ConfigError("synth: devel_fraction must be in (0,1)");
  if (ar_rho < 0.0 || ar_rho >= 1.0) throw ConfigError("synth: ar_rho must be in [0,1)");
  if (segment_len == 0 || segment_hop == 0) throw ConfigError("synth: segment length and hop must be positive");
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    s.n_videos = j.value("n_videos", s.n_videos);
    s.min_frames = j.value("min_frames", s.min_frames);
    s.max_frames = j.value("max_frames", s.max_frames);
    s.fps = j.value("fps", s.fps);
    s.dims = j.value("dims", s.dims);
    s.noise = j.value("noise", s.noise);
    s.dropout = j.value("dropout", s.dropout);
    s.invalid_rate = j.value("invalid_rate", s.invalid_rate);
    s.devel_fraction = j.value("devel_fraction", s.devel_fraction);
    s.ar_rho = j.value("ar_rho", s.ar_rho);
    s.segment_len = j.value("segment_len", s.segment_len);
    s.segment_hop = j.value("segment_hop", s.segment_hop);
    s.full_views = j.value("full_views", s.full_views);
    s.mouth = j.value("mouth", s.mouth);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  static const std::set<std::string> known{"n_videos",      "min_frames", "max_frames",  "fps",         "dims",
                                           "noise",         "dropout",    "invalid_rate", "devel_fraction",
                                           "ar_rho",        "segment_len", "segment_hop", "full_views", "mouth",
                                           "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw ConfigError("synth config: unknown key '" + it.key() + "'");
  }
  s.validate();
  return s;
}

std::vector<std::size_t> observed_factors(const SynthSpec& spec, std::size_t m) {
  if (spec.full_views) return {0, 1, 2, 3, 4, 5};
  static const std::vector<std::size_t> views[3] = {{0, 1, 3, 4}, {0, 2, 3, 5}, {1, 2, 4, 5}};
  return views[m];
}

namespace {

constexpr std::size_t kFactors = 6;

struct Mixing {
  std::vector<NumArray> maps;  // [dim x observed] per modality
};

Mixing draw_mixing(const SynthSpec& spec, Rng& rng) {
  Mixing mx;
  for (std::size_t m = 0; m < 3; ++m) {
    const auto obs = observed_factors(spec, m);
    NumArray a = NumArray::matrix(spec.dims[m], obs.size());
    const double s = 1.0 / std::sqrt(static_cast<double>(obs.size()));
    for (double& v : a.values()) v = rng.normal() * s;
    mx.maps.push_back(std::move(a));
  }
  return mx;
}

NumArray draw_factors(std::size_t frames, double rho, Rng& rng) {
  NumArray f = NumArray::matrix(frames, kFactors);
  const double innov = std::sqrt(1.0 - rho * rho);
  for (std::size_t k = 0; k < kFactors; ++k) {
    double x = rng.normal();
    for (std::size_t t = 0; t < frames; ++t) {
      if (t > 0) x = rho * x + innov * rng.normal();
      f(t, k) = std::tanh(x);
    }
  }
  return f;
}

std::vector<double> observe(const SynthSpec& spec, const Mixing& mx, std::size_t m, const std::vector<double>& factors,
                            Rng& rng) {
  const auto obs = observed_factors(spec, m);
  const NumArray& a = mx.maps[m];
  std::vector<double> out(spec.dims[m]);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < obs.size(); ++j) s += a(i, j) * factors[obs[j]];
    out[i] = s + spec.noise[m] * rng.normal();
  }
  return out;
}

std::vector<double> factor_row(const NumArray& f, std::size_t t) {
  return {f.row(t).begin(), f.row(t).end()};
}

std::string video_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "vid%04zu", i);
  return buf;
}

}  // namespace

fs::path write_synthetic_corpus(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  Rng master(spec.seed);
  const Mixing mx = draw_mixing(spec, master);
  const auto n_devel = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.devel_fraction * static_cast<double>(spec.n_videos))));
  const std::size_t n_train = spec.n_videos - n_devel;

  Manifest manifest;
  for (std::size_t vi = 0; vi < spec.n_videos; ++vi) {
    Rng rng(splitmix64(spec.seed) ^ splitmix64(vi + 1));
    const std::string id = video_name(vi);
    const fs::path dir = out_dir / id;
    fs::create_directories(dir);
    const std::size_t frames = spec.min_frames + rng.below(spec.max_frames - spec.min_frames + 1);
    const NumArray f = draw_factors(frames, spec.ar_rho, rng);

    // Behavior segments over [0, frames) with a tail segment for the last frames.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    const std::size_t seg = std::min(spec.segment_len, frames);
    for (std::size_t s = 0; s + seg <= frames; s += spec.segment_hop) spans.emplace_back(s, s + seg);
    if (spans.back().second < frames) spans.emplace_back(frames - seg, frames);

    std::vector<bool> face_present(frames), audio_present(frames), seg_present(spans.size());
    for (std::size_t t = 0; t < frames; ++t) {
      face_present[t] = !rng.bernoulli(spec.dropout[0]);
      audio_present[t] = !rng.bernoulli(spec.dropout[2]);
    }
    for (std::size_t s = 0; s < spans.size(); ++s) seg_present[s] = !rng.bernoulli(spec.dropout[1]);
    // Every frame keeps at least one observed modality.
    for (std::size_t t = 0; t < frames; ++t) {
      bool behavior = false;
      for (std::size_t s = 0; s < spans.size(); ++s) behavior = behavior || (seg_present[s] && spans[s].first <= t && t < spans[s].second);
      if (face_present[t] || audio_present[t] || behavior) continue;
      if (spec.dropout[0] < 1.0) {
        face_present[t] = true;
      } else if (spec.dropout[2] < 1.0) {
        audio_present[t] = true;
      } else {
        for (std::size_t s = 0; s < spans.size(); ++s) {
          if (spans[s].first <= t && t < spans[s].second) {
            seg_present[s] = true;
            break;
          }
        }
      }
    }

    FeatureStream face{id, Modality::face, spec.fps, spec.dims[0], {}};
    FeatureStream audio{id, Modality::audio, spec.fps, spec.dims[2], {}};
    for (std::size_t t = 0; t < frames; ++t) {
      const auto row = factor_row(f, t);
      auto fv = observe(spec, mx, 0, row, rng);
      auto av = observe(spec, mx, 2, row, rng);
      if (face_present[t]) face.frames.emplace(t, std::move(fv));
      if (audio_present[t]) audio.frames.emplace(t, std::move(av));
    }
    SegmentStream behavior{id, Modality::behavior_multimodal, spec.dims[1], {}};
    for (std::size_t s = 0; s < spans.size(); ++s) {
      std::vector<double> mean(kFactors, 0.0);
      for (std::size_t t = spans[s].first; t < spans[s].second; ++t)
        for (std::size_t k = 0; k < kFactors; ++k) mean[k] += f(t, k);
      for (double& v : mean) v /= static_cast<double>(spans[s].second - spans[s].first);
      auto e = observe(spec, mx, 1, mean, rng);
      if (seg_present[s]) behavior.segments.push_back({spans[s].first, spans[s].second, std::move(e)});
    }

    AnnotationTrack ann{id, NumArray::matrix(frames, 2), -5.0};
    for (std::size_t t = 0; t < frames; ++t) {
      ann.values(t, 0) = (f(t, 0) + f(t, 1) + f(t, 2)) / 3.0;
      ann.values(t, 1) = (f(t, 3) + f(t, 4) + f(t, 5)) / 3.0;
    }
    // Invalid labels come in short runs, as they do when annotators lose track.
    const double run_start = spec.invalid_rate / 5.5;
    for (std::size_t t = 0; t < frames; ++t) {
      if (!rng.bernoulli(run_start)) continue;
      const std::size_t len = 1 + rng.below(10);
      for (std::size_t u = t; u < std::min(frames, t + len); ++u) ann.values(u, 0) = ann.values(u, 1) = ann.sentinel;
    }

    ManifestEntry entry;
    entry.video_id = id;
    entry.split = vi < n_train ? Split::train : Split::devel;
    entry.fps = spec.fps;
    entry.audio_rate = spec.fps;
    entry.annotations = dir / "annotations.csv";
    write_annotations(entry.annotations, ann);
    entry.streams[Modality::face] = dir / "face.csv";
    write_feature_csv(entry.streams[Modality::face], face);
    entry.streams[Modality::behavior_multimodal] = dir / "behavior.csv";
    write_segment_csv(entry.streams[Modality::behavior_multimodal], behavior);
    entry.streams[Modality::audio] = dir / "audio.csv";
    write_feature_csv(entry.streams[Modality::audio], audio);

    if (spec.mouth) {
      // Speech-like alternation of open and closed mouth runs.
      MouthSeries mouth{id, spec.fps, std::vector<bool>(frames)};
      bool open = rng.bernoulli(0.5);
      for (std::size_t t = 0; t < frames; ++t) {
        if (rng.bernoulli(open ? 0.08 : 0.12)) open = !open;
        mouth.open[t] = open;
      }
      entry.mouth = dir / "mouth.csv";
      write_mouth_csv(*entry.mouth, mouth);
    }
    manifest.entries.push_back(std::move(entry));
  }
  const fs::path manifest_path = out_dir / "manifest.json";
  save_manifest(manifest_path, manifest);
  return manifest_path;
}

}  // namespace vaf
