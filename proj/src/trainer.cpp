#include "panograph/trainer.hpp"

#include "panograph/instance_merger.hpp"
#include "panograph/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace panograph {

namespace {

double to_float32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TrainState TrainState::fresh(std::uint64_t seed, const Hyperparameters& hyper) {
  TrainState s;
  s.params = EdgeNetParams::initialize(seed);
  s.velocity.set_zero();
  s.hyper = hyper;
  return s;
}

void sgd_step(TrainState& state, const EdgeNetParams& grads) {
  auto params = state.params.tensors();
  auto velocity = state.velocity.tensors();
  const auto g = grads.tensors();
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t]->shape != g[t]->shape || params[t]->shape != velocity[t]->shape) {
      throw ShapeError("sgd_step: shape mismatch in " + params[t]->name);
    }
    for (double v : g[t]->data) {
      if (!std::isfinite(v)) throw TrainingError("non-finite gradient in " + g[t]->name + " at step " + std::to_string(state.step));
    }
  }
  const auto& h = state.hyper;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& theta = params[t]->data;
    auto& v = velocity[t]->data;
    const auto& grad = g[t]->data;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = to_float32(h.momentum * v[i] + (grad[i] + h.weight_decay * theta[i]));
      theta[i] = to_float32(theta[i] - h.learning_rate * v[i]);
    }
  }
  ++state.step;
}

std::size_t edge_correct_count(const Matrix& p_connect, const EdgeLabelMatrix& labels, double tau) {
  const AdjacencyMatrix adj = binarize(p_connect, tau);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < adj.n; ++i)
    for (std::size_t j = 0; j < adj.n; ++j)
      if (i != j && (adj(i, j) != 0) == (labels(i, j) != 0)) ++correct;
  return correct;
}

double edge_accuracy(const Matrix& p_connect, const EdgeLabelMatrix& labels, double tau) {
  const std::size_t n = labels.n;
  if (n < 2) return 1.0;
  return static_cast<double>(edge_correct_count(p_connect, labels, tau)) / static_cast<double>(n * n - n);
}

std::vector<EpochStats> train(const std::vector<TrainSample>& samples, const TrainConfig& config, TrainState& state,
                              const EpochCallback& on_epoch) {
  if (samples.empty()) throw InputError("train: the dataset is empty");
  std::vector<EpochStats> history;
  for (std::size_t epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, epoch));
    rng.shuffle(order);

    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t correct = 0, pairs = 0;
    for (std::size_t k : order) {
      const auto& s = samples[k];
      const std::size_t n = s.input.num_clusters();
      if (n < 2) continue;
      LossResult r = loss_and_grad(s.input, s.labels, state.params, config.loss);
      if (!std::isfinite(r.loss)) {
        if (!config.divergence_dump.empty()) {
          write_checkpoint(config.divergence_dump, Checkpoint{state, config.num_classes, config.voxel_size, config.seed});
        }
        std::ostringstream msg;
        msg << "loss diverged on frame '" << s.name << "' (epoch " << epoch << ", step " << state.step << ")";
        if (!config.divergence_dump.empty()) msg << "; state written to " << config.divergence_dump.string();
        throw TrainingError(msg.str());
      }
      loss_sum += r.loss;
      correct += edge_correct_count(r.p_connect, s.labels, config.tau);
      pairs += n * n - n;
      ++stats.frames;
      sgd_step(state, r.grads);
    }
    stats.mean_loss = stats.frames ? loss_sum / static_cast<double>(stats.frames) : 0.0;
    stats.edge_accuracy = pairs ? static_cast<double>(correct) / static_cast<double>(pairs) : 1.0;
    state.epoch = epoch;
    history.push_back(stats);
    if (on_epoch) on_epoch(state, stats);
  }
  return history;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'G', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) bytes_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint: unexpected end of file");
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

void write_tensor_header(Writer& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.name.size()));
  w.raw(t.name.data(), t.name.size());
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
}

void read_tensor_header(Reader& r, const Tensor& expected) {
  const std::string name = r.raw(r.u32());
  if (name != expected.name) throw ShapeError("checkpoint: expected tensor '" + expected.name + "', found '" + name + "'");
  std::vector<std::size_t> shape(r.u32());
  for (auto& d : shape) d = r.u32();
  if (shape != expected.shape) {
    std::string got, want;
    for (auto d : shape) got += (got.empty() ? "" : "x") + std::to_string(d);
    for (auto d : expected.shape) want += (want.empty() ? "" : "x") + std::to_string(d);
    throw ShapeError("checkpoint: tensor '" + name + "' has shape " + got + ", model expects " + want);
  }
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  const auto& s = checkpoint.state;
  w.f64(s.hyper.learning_rate);
  w.f64(s.hyper.momentum);
  w.f64(s.hyper.weight_decay);
  w.f64(checkpoint.voxel_size);
  w.u32(checkpoint.num_classes);
  w.u64(checkpoint.seed);
  w.u64(s.step);
  w.u64(s.epoch);
  const auto params = s.params.tensors();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* t : params) {
    write_tensor_header(w, *t);
    for (double v : t->data) w.f32(v);
  }
  for (const auto* t : s.velocity.tensors())
    for (double v : t->data) w.f32(v);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  Checkpoint c;
  auto& s = c.state;
  s.hyper.learning_rate = r.f64();
  s.hyper.momentum = r.f64();
  s.hyper.weight_decay = r.f64();
  c.voxel_size = r.f64();
  c.num_classes = r.u32();
  c.seed = r.u64();
  s.step = r.u64();
  s.epoch = r.u64();
  auto params = s.params.tensors();
  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(count) + " tensors, model has " + std::to_string(params.size()));
  }
  for (auto* t : params) {
    read_tensor_header(r, *t);
    for (double& v : t->data) v = r.f32();
  }
  for (auto* t : s.velocity.tensors())
    for (double& v : t->data) v = r.f32();
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  if (!s.params.all_finite() || !s.velocity.all_finite()) throw DataError("checkpoint contains non-finite values");
  return c;
}

}  // namespace panograph
