#include "vafusion/trainer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "vafusion/errors.hpp"

namespace vaf {

namespace {

constexpr char kMagic[8] = {'V', 'A', 'F', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void tensor(const NumArray& a) {
    u32(static_cast<std::uint32_t>(a.rank()));
    for (std::size_t e : a.shape()) u64(e);
    for (double v : a.values()) f64(v);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  std::uint8_t u8() {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) throw DataError(path_ + ": truncated checkpoint");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (1ULL << 32)) throw DataError(path_ + ": implausible string length in checkpoint");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw DataError(path_ + ": truncated checkpoint");
    return s;
  }
  NumArray tensor() {
    const std::uint32_t rank = u32();
    if (rank > 8) throw DataError(path_ + ": implausible tensor rank in checkpoint");
    Shape shape(rank);
    std::uint64_t count = 1;
    for (auto& e : shape) {
      e = u64();
      count *= e;
    }
    if (count > (1ULL << 34)) throw DataError(path_ + ": implausible tensor size in checkpoint");
    std::vector<double> data(count);
    for (double& v : data) v = f64();
    return NumArray(std::move(shape), std::move(data));
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    Writer w(out);
    out.write(kMagic, sizeof kMagic);
    w.u32(Checkpoint::kVersion);
    w.str(ckpt.arch);
    w.str(ckpt.config.dump());
    w.u64(ckpt.tensors.size());
    for (const auto& [name, t] : ckpt.tensors) {
      w.str(name);
      w.tensor(t);
    }
    w.u64(ckpt.adam_steps);
    w.u64(ckpt.moments.size());
    for (const auto& [name, mv] : ckpt.moments) {
      w.str(name);
      w.tensor(mv.first);
      w.tensor(mv.second);
    }
    w.u64(ckpt.epoch);
    w.u8(ckpt.best_metric ? 1 : 0);
    w.f64(ckpt.best_metric.value_or(0.0));
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError(path.string() + ": not a checkpoint file");
  Reader r(in, path.string());
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.arch = r.str();
  try {
    c.config = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": corrupt config block: " + e.what());
  }
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.tensors.emplace_back(std::move(name), r.tensor());
  }
  c.adam_steps = r.u64();
  const std::uint64_t nm = r.u64();
  for (std::uint64_t i = 0; i < nm; ++i) {
    std::string name = r.str();
    NumArray m = r.tensor();
    NumArray v = r.tensor();
    c.moments.emplace_back(std::move(name), std::make_pair(std::move(m), std::move(v)));
  }
  c.epoch = r.u64();
  const bool has_best = r.u8() != 0;
  const double best = r.f64();
  if (has_best) c.best_metric = best;
  return c;
}

std::vector<std::pair<std::string, NumArray>> snapshot_parameters(const ParameterSet& params) {
  std::vector<std::pair<std::string, NumArray>> out;
  out.reserve(params.size());
  for (const Parameter& p : params) out.emplace_back(p.name, p.value);
  return out;
}

void restore_parameters(const std::vector<std::pair<std::string, NumArray>>& tensors, ParameterSet& params) {
  std::map<std::string, const NumArray*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  for (Parameter& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DataError("checkpoint lacks parameter '" + p.name + "'");
    if (!it->second->same_shape(p.value)) {
      throw DataError("checkpoint parameter '" + p.name + "' has shape " + shape_string(it->second->shape()) +
                      ", model expects " + shape_string(p.value.shape()));
    }
    p.value = *it->second;
  }
  if (by_name.size() != params.size()) throw DataError("checkpoint has parameters the model does not know");
}

}  // namespace vaf
