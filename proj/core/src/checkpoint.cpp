#include "crisisdqn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace crisisdqn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'D', 'Q', 'N', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void layers(const std::array<DenseLayer<float>, 3>& ls) {
    for (const auto& l : ls) {
      bytes(l.weight.data(), sizeof(float) * static_cast<std::size_t>(l.weight.size()));
      bytes(l.bias.data(), sizeof(float) * static_cast<std::size_t>(l.bias.size()));
    }
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& b) : buf_(b) {}
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > buf_.size()) throw CheckpointError("truncated checkpoint");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  void layers(std::array<DenseLayer<float>, 3>& ls) {
    for (auto& l : ls) {
      bytes(l.weight.data(), sizeof(float) * static_cast<std::size_t>(l.weight.size()));
      bytes(l.bias.data(), sizeof(float) * static_cast<std::size_t>(l.bias.size()));
    }
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kCheckpointVersion);
  w.pod(ckpt.config_hash);
  w.pod(ckpt.training_step);
  const auto& s = ckpt.network.shape();
  for (int v : {s.input, s.hidden1, s.hidden2, s.output}) w.pod(static_cast<std::uint32_t>(v));
  const auto& a = ckpt.optimizer.config();
  w.pod(a.lr);
  w.pod(a.weight_decay);
  w.pod(a.beta1);
  w.pod(a.beta2);
  w.pod(a.epsilon);
  w.pod(static_cast<std::uint8_t>(a.decoupled_weight_decay ? 1 : 0));
  w.pod(ckpt.optimizer.step_count());
  w.pod(static_cast<std::uint32_t>(ckpt.config_json.size()));
  w.bytes(ckpt.config_json.data(), ckpt.config_json.size());
  w.layers(ckpt.network.layers());
  w.layers(ckpt.optimizer.first_moment());
  w.layers(ckpt.optimizer.second_moment());
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw CheckpointError("not a checkpoint file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config_hash = r.pod<std::uint64_t>();
  ckpt.training_step = r.pod<std::int64_t>();
  NetworkShape shape;
  shape.input = static_cast<int>(r.pod<std::uint32_t>());
  shape.hidden1 = static_cast<int>(r.pod<std::uint32_t>());
  shape.hidden2 = static_cast<int>(r.pod<std::uint32_t>());
  shape.output = static_cast<int>(r.pod<std::uint32_t>());
  AdamConfig a;
  a.lr = r.pod<double>();
  a.weight_decay = r.pod<double>();
  a.beta1 = r.pod<double>();
  a.beta2 = r.pod<double>();
  a.epsilon = r.pod<double>();
  a.decoupled_weight_decay = r.pod<std::uint8_t>() != 0;
  const auto opt_step = r.pod<std::int64_t>();
  const auto json_len = r.pod<std::uint32_t>();
  ckpt.config_json.resize(json_len);
  r.bytes(ckpt.config_json.data(), json_len);

  try {
    ckpt.network = QNetwork::zeros(shape);
  } catch (const NetworkError& e) {
    throw CheckpointError(std::string("invalid network shape: ") + e.what());
  }
  r.layers(ckpt.network.layers());
  ckpt.optimizer = AdamOptimizer(ckpt.network, a);
  ckpt.optimizer.set_step_count(opt_step);
  r.layers(ckpt.optimizer.first_moment());
  r.layers(ckpt.optimizer.second_moment());
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace crisisdqn
