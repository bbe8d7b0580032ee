#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "vafusion/dataio/manifest.hpp"

namespace vaf {

/// Synthetic corpus with known signal.
///
/// Each video carries six latent factors, each a stationary AR(1) walk squashed
/// by tanh into (-1, 1). Valence is the mean of factors 0-2, arousal the mean of
/// factors 3-5. Modality m observes a random linear map of a subset of the
/// factors plus Gaussian noise: face sees {0,1,3,4}, behavior {0,2,3,5} and
/// audio {1,2,4,5}, so every factor is visible to two modalities and no single
/// modality sees all of them. With `full_views` every modality sees everything.
///
/// Order of the three per-modality arrays: face, behavior, audio.
struct SynthSpec {
  std::size_t n_videos = 200;
  std::size_t min_frames = 60;
  std::size_t max_frames = 120;
  double fps = 10.0;
  std::array<std::size_t, 3> dims{16, 16, 16};
  std::array<double, 3> noise{0.3, 0.3, 0.3};
  std::array<double, 3> dropout{0.1, 0.1, 0.1};
  double invalid_rate = 0.02;
  double devel_fraction = 0.2;
  double ar_rho = 0.95;
  std::size_t segment_len = 8;
  std::size_t segment_hop = 4;
  bool full_views = false;
  bool mouth = true;
  std::uint64_t seed = 0;

  void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// Indices of the latent factors modality m observes (m: 0 face, 1 behavior, 2 audio).
std::vector<std::size_t> observed_factors(const SynthSpec& spec, std::size_t m);

/// Writes <out>/manifest.json and one directory of CSVs per video. Returns the manifest path.
/// The output is a pure function of the spec.
std::filesystem::path write_synthetic_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace vaf
