#include "vafusion/trainer/dataset.hpp"

#include "vafusion/errors.hpp"

namespace vaf {

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < videos.size(); ++i)
    if (videos[i].split == s) out.push_back(i);
  return out;
}

namespace {

void record_dim(InputDims& dims, const std::string& name, std::size_t dim, const std::string& video) {
  auto [it, inserted] = dims.emplace(name, dim);
  if (!inserted && it->second != dim) {
    throw DataError("video '" + video + "': " + name + " width " + std::to_string(dim) + " differs from " +
                    std::to_string(it->second) + " seen earlier");
  }
}

}  // namespace

Dataset load_dataset(const Manifest& manifest, Modality behavior_modality, double sentinel) {
  Dataset ds;
  for (const ManifestEntry& e : manifest.entries) {
    VideoData v;
    v.id = e.video_id;
    v.split = e.split;
    v.fps = e.fps;
    v.audio_rate = e.audio_rate > 0.0 ? e.audio_rate : e.fps;
    v.annotations = load_annotations(e.annotations, e.video_id, sentinel);
    for (const auto& [modality, path] : e.streams) {
      switch (modality) {
        case Modality::face:
          v.face = load_feature_csv(path, e.video_id, modality, e.fps);
          record_dim(ds.dims, "face", v.face->dim, v.id);
          break;
        case Modality::audio:
          v.audio = load_feature_csv(path, e.video_id, modality, v.audio_rate);
          record_dim(ds.dims, "audio", v.audio->dim, v.id);
          break;
        case Modality::behavior_visual:
        case Modality::behavior_multimodal:
          if (modality == behavior_modality || !v.behavior) {
            v.behavior = load_segment_csv(path, e.video_id, modality);
          }
          break;
      }
    }
    if (v.behavior) record_dim(ds.dims, "behavior", v.behavior->dim, v.id);
    if (e.mouth) v.mouth = load_mouth_csv(*e.mouth, e.video_id, e.fps);
    if (v.frames() == 0) throw DataError("video '" + v.id + "' has no annotated frames");
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

FrameAlignedFeatures aligned_stream(const VideoData& video, const std::string& modality, std::size_t dim) {
  if (auto it = video.aligned_override.find(modality); it != video.aligned_override.end()) return it->second;
  const std::size_t total = video.frames();
  FrameAlignedFeatures out;
  if (modality == "face" && video.face && !video.face->empty()) {
    out = align_feature_stream(*video.face, total, video.fps);
  } else if (modality == "audio" && video.audio && !video.audio->empty()) {
    out = align_feature_stream(*video.audio, total, video.fps);
  } else if (modality == "behavior" && video.behavior && !video.behavior->segments.empty()) {
    out = expand_segment_embeddings(*video.behavior, total);
  } else if (modality != "face" && modality != "audio" && modality != "behavior") {
    throw ConfigError("unknown modality name '" + modality + "' (expected face, behavior or audio)");
  } else {
    out.values = NumArray::matrix(total, dim);
    out.covered.assign(total, false);
  }
  if (out.values.cols() != dim) {
    throw DataError("video '" + video.id + "': " + modality + " width " + std::to_string(out.values.cols()) +
                    " where " + std::to_string(dim) + " was expected");
  }
  return out;
}

}  // namespace vaf
