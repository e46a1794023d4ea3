#include "mmgest/nn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <map>

#include "mmgest/errors.hpp"

namespace mmgest::nn {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'G', 'C'};

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
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  std::uint8_t u8() {
    const int c = in_.get();
    if (c == EOF) throw IoError(path_ + ": truncated checkpoint");
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
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw IoError(path_ + ": corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw IoError(path_ + ": truncated checkpoint");
    return s;
  }

 private:
  std::istream& in_;
  std::string path_;
};

std::map<std::string, Tensor*> named_tensors(GestureNet& model) {
  std::map<std::string, Tensor*> out;
  for (auto* p : model.parameters()) out.emplace(p->name, &p->value);
  for (auto& b : model.buffers()) out.emplace(b.name, b.tensor);
  return out;
}

}  // namespace

void save_checkpoint(GestureNet& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  Writer w(out);
  out.write(kMagic, 4);
  w.u8(kCheckpointVersion);
  const auto& mc = model.config();
  w.u32(static_cast<std::uint32_t>(mc.n_classes));
  w.u32(static_cast<std::uint32_t>(mc.stem_channels));
  w.u32(static_cast<std::uint32_t>(mc.block_channels));
  w.u32(static_cast<std::uint32_t>(mc.blocks_per_branch));
  w.u64(mc.seed);
  w.u64(meta.train_seed);
  w.u32(meta.epoch);
  w.str(meta.config_hash);
  const auto tensors = named_tensors(model);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (auto d : t->shape()) w.u64(d);
    for (double v : t->values()) w.f64(v);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Reader r(in, path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || !std::equal(magic, magic + 4, kMagic)) throw IoError(path.string() + ": not a checkpoint file");
  const auto version = r.u8();
  if (version != kCheckpointVersion) {
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointMeta meta;
  meta.model.n_classes = r.u32();
  meta.model.stem_channels = r.u32();
  meta.model.block_channels = r.u32();
  meta.model.blocks_per_branch = r.u32();
  meta.model.seed = r.u64();
  meta.train_seed = r.u64();
  meta.epoch = r.u32();
  meta.config_hash = r.str();

  Checkpoint ck{meta, GestureNet(meta.model)};
  auto tensors = named_tensors(ck.model);
  const std::uint32_t count = r.u32();
  if (count != tensors.size()) {
    throw IoError(path.string() + ": expected " + std::to_string(tensors.size()) + " tensors, found " + std::to_string(count));
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str();
    auto it = tensors.find(name);
    if (it == tensors.end()) throw IoError(path.string() + ": unexpected tensor " + name);
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u64();
    if (shape != it->second->shape()) {
      throw ShapeError(name + ": checkpoint shape " + shape_string(shape) + " vs model " + shape_string(it->second->shape()));
    }
    for (auto& v : it->second->values()) v = r.f64();
    tensors.erase(it);
  }
  return ck;
}

}  // namespace mmgest::nn
