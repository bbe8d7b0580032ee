#include "vafusion/trainer/evaluate.hpp"

#include <algorithm>
#include <cstdint>

#include "vafusion/errors.hpp"

namespace vaf {

std::vector<NumArray> predict_samples(const Model& model, const std::vector<Sample>& samples) {
  std::vector<NumArray> out(samples.size());
  const auto n = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    Context ctx = Context::inference();
    out[static_cast<std::size_t>(i)] = model.forward(samples[static_cast<std::size_t>(i)], ctx).value();
  }
  for (const NumArray& o : out) {
    if (!o.all_finite()) throw NumericError("model produced a non-finite prediction");
  }
  return out;
}

FramePredictions frame_predictions(const std::vector<Sample>& samples, const std::vector<NumArray>& outputs,
                                   std::size_t video, std::size_t frames) {
  std::vector<SpanPrediction> spans;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.video != video) continue;
    for (std::size_t r = 0; r < s.spans.size(); ++r) {
      const auto [b, e] = s.spans[r];
      if (b >= e) continue;
      spans.push_back({b, std::min(e, frames), {outputs[i](r, 0), outputs[i](r, 1)}});
    }
  }
  const auto expanded = expand_segments(spans);
  FramePredictions fp;
  fp.values = NumArray::matrix(frames, 2);
  fp.covered.assign(frames, false);
  std::vector<std::size_t> covered;
  for (const auto& [f, v] : expanded) {
    if (f >= frames) continue;
    fp.values(f, 0) = v[0];
    fp.values(f, 1) = v[1];
    fp.covered[f] = true;
    covered.push_back(f);
  }
  if (covered.empty()) return fp;
  for (std::size_t f = 0; f < frames; ++f) {
    if (fp.covered[f]) continue;
    auto it = std::lower_bound(covered.begin(), covered.end(), f);
    std::size_t src;
    if (it == covered.end()) src = covered.back();
    else if (it == covered.begin()) src = *it;
    else src = (f - *(it - 1) <= *it - f) ? *(it - 1) : *it;
    fp.values(f, 0) = fp.values(src, 0);
    fp.values(f, 1) = fp.values(src, 1);
  }
  return fp;
}

EvalResult evaluate_samples(const Model& model, const Dataset& data, const std::vector<std::size_t>& videos,
                            const std::vector<Sample>& samples) {
  const std::vector<NumArray> outputs = predict_samples(model, samples);
  EvalResult res;
  std::size_t total = 0;
  for (std::size_t vi : videos) total += data.videos[vi].frames();
  NumArray targets = NumArray::matrix(total, 2), preds = NumArray::matrix(total, 2);
  Mask valid(total, 2, false);
  std::size_t row = 0;
  double per_video_sum = 0.0;
  std::size_t per_video_n = 0;
  for (std::size_t vi : videos) {
    const VideoData& v = data.videos[vi];
    FramePredictions fp = frame_predictions(samples, outputs, vi, v.frames());
    const Mask vm = v.annotations.valid();
    CccReport rep = ccc_report(v.annotations.values, fp.values, vm);
    res.videos.push_back({v.id, rep});
    if (rep.n_valid[0] >= 2 && rep.n_valid[1] >= 2) {
      per_video_sum += rep.mean;
      ++per_video_n;
    }
    for (std::size_t f = 0; f < v.frames(); ++f, ++row) {
      for (std::size_t d = 0; d < 2; ++d) {
        targets(row, d) = v.annotations.values(f, d);
        preds(row, d) = fp.values(f, d);
        valid.set(row, d, vm(f, d));
      }
    }
    res.predictions.emplace(vi, std::move(fp));
  }
  if (valid.count() == 0) throw DataError("evaluation split has no valid annotated frames");
  res.overall = ccc_report(targets, preds, valid);
  if (per_video_n > 0) res.per_video_mean = per_video_sum / static_cast<double>(per_video_n);
  return res;
}

EvalResult evaluate_split(const Model& model, const TrainConfig& cfg, const Dataset& data, Split split) {
  const auto videos = data.indices(split);
  if (videos.empty()) throw DataError("the manifest has no '" + std::string(to_string(split)) + "' videos");
  return evaluate_samples(model, data, videos, build_samples(cfg, data, videos, false));
}

nlohmann::json EvalResult::to_json() const {
  nlohmann::json j = overall.to_json();
  j["per_video_ccc_mean"] = per_video_mean ? nlohmann::json(*per_video_mean) : nlohmann::json(nullptr);
  j["n_videos"] = videos.size();
  return j;
}

}  // namespace vaf
