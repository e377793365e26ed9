#pragma once

#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgen/binio.hpp"
#include "fgen/models.hpp"
#include "fgen/spectral.hpp"
#include "fgen/training.hpp"

namespace fgen {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor as stored on disk (f32 payload).
struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kFeatureVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  ArchitectureConfig arch;
  TrainingConfig training;
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> accumulators;
  std::uint64_t epoch = 0;
  Rng::State rng{};
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_epochs(const std::vector<std::uint64_t>& e) {
  std::string s;
  for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
  return s;
}

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline const std::string& require_key(const KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw CheckpointError("header is missing key '" + key + "'");
  return it->second;
}

inline std::uint64_t to_u64(const std::string& s) { return std::stoull(s); }

inline void write_tensor(binio::Writer& w, const NamedTensor& t) {
  if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) throw CheckpointError("tensor name too long");
  w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
  w.put_bytes(t.name);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.shape.size()));
  for (auto d : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (float v : t.data) w.put<float>(v);
}

inline NamedTensor read_tensor(binio::Reader& r) {
  NamedTensor t;
  const auto len = r.get<std::uint16_t>("tensor name length");
  t.name = r.get_string(len, "tensor name");
  const auto rank = r.get<std::uint8_t>("tensor rank");
  if (rank == 0) throw CheckpointError("tensor '" + t.name + "' has rank 0");
  std::size_t count = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    const auto d = r.get<std::uint32_t>("tensor dims");
    if (d == 0) throw CheckpointError("tensor '" + t.name + "' has a zero dimension");
    if (d > r.remaining() / sizeof(float) / count) throw binio::FormatError("truncated file while reading tensor data");
    t.shape.push_back(d);
    count *= d;
  }
  if (r.remaining() < count * sizeof(float)) throw binio::FormatError("truncated file while reading tensor data");
  t.data.resize(count);
  std::memcpy(t.data.data(), r.peek(count * sizeof(float), "tensor data"), count * sizeof(float));
  r.skip(count * sizeof(float));
  return t;
}

inline void write_tensor_list(binio::Writer& w, const std::vector<NamedTensor>& ts) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) write_tensor(w, t);
}

inline std::vector<NamedTensor> read_tensor_list(binio::Reader& r) {
  const auto n = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(read_tensor(r));
  return out;
}

inline binio::Reader open_container(const std::string& path, const char* magic, std::uint32_t version,
                                    std::string& header) {
  std::vector<char> bytes;
  try {
    bytes = binio::read_file(path);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  binio::Reader r(std::move(bytes));
  const auto m = r.get_string(4, "magic");
  if (m != magic) throw CheckpointError("'" + path + "': bad magic '" + m + "', expected '" + magic + "'");
  const auto v = r.get<std::uint32_t>("version");
  if (v != version)
    throw CheckpointError("'" + path + "': unsupported version " + std::to_string(v) + ", expected " +
                          std::to_string(version));
  const auto hlen = r.get<std::uint32_t>("header length");
  header = r.get_string(hlen, "header");
  return r;
}

}  // namespace detail

inline std::string arch_to_text(const ArchitectureConfig& a) {
  std::string s;
  s += "arch.variant=" + std::string(variant_name(a.variant)) + "\n";
  s += "arch.frame_size=" + std::to_string(a.frame_size) + "\n";
  s += "arch.sample_rate=" + std::to_string(a.sample_rate) + "\n";
  s += "arch.hidden=" + std::to_string(a.hidden) + "\n";
  s += "arch.conv_filters=" + std::to_string(a.conv_filters) + "\n";
  s += "arch.conv_kernel=" + std::to_string(a.conv_kernel) + "\n";
  s += "arch.pool=" + std::to_string(a.pool) + "\n";
  s += "arch.frames_per_step=" + std::to_string(a.frames_per_step) + "\n";
  s += "arch.seed=" + std::to_string(a.seed) + "\n";
  return s;
}

inline std::string training_to_text(const TrainingConfig& t) {
  using detail::fmt_double;
  std::string s;
  s += "train.timesteps=" + std::to_string(t.timesteps) + "\n";
  s += "train.learning_rate=" + fmt_double(t.learning_rate) + "\n";
  s += "train.rmsprop_decay=" + fmt_double(t.rmsprop_decay) + "\n";
  s += "train.rmsprop_epsilon=" + fmt_double(t.rmsprop_epsilon) + "\n";
  s += "train.dropout_lstm=" + fmt_double(t.dropout_lstm) + "\n";
  s += "train.dropout_dense=" + fmt_double(t.dropout_dense) + "\n";
  s += "train.l2_lambda=" + fmt_double(t.l2_lambda) + "\n";
  s += "train.epochs=" + std::to_string(t.epochs) + "\n";
  s += "train.batch_size=" + std::to_string(t.batch_size) + "\n";
  s += "train.checkpoint_epochs=" + detail::join_epochs(t.checkpoint_epochs) + "\n";
  s += "train.seed=" + std::to_string(t.seed) + "\n";
  s += "train.clip_norm=" + fmt_double(t.clip_norm) + "\n";
  s += "train.stride=" + std::to_string(t.stride) + "\n";
  s += "train.threads=" + std::to_string(t.threads) + "\n";
  return s;
}

inline ArchitectureConfig arch_from_text(const detail::KeyValues& kv) {
  using detail::require_key;
  using detail::to_u64;
  ArchitectureConfig a;
  a.variant = parse_variant(require_key(kv, "arch.variant"));
  a.frame_size = to_u64(require_key(kv, "arch.frame_size"));
  a.sample_rate = static_cast<int>(to_u64(require_key(kv, "arch.sample_rate")));
  a.hidden = to_u64(require_key(kv, "arch.hidden"));
  a.conv_filters = to_u64(require_key(kv, "arch.conv_filters"));
  a.conv_kernel = to_u64(require_key(kv, "arch.conv_kernel"));
  a.pool = to_u64(require_key(kv, "arch.pool"));
  a.frames_per_step = to_u64(require_key(kv, "arch.frames_per_step"));
  a.seed = to_u64(require_key(kv, "arch.seed"));
  return a;
}

inline TrainingConfig training_from_text(const detail::KeyValues& kv) {
  using detail::require_key;
  using detail::to_u64;
  TrainingConfig t;
  t.timesteps = to_u64(require_key(kv, "train.timesteps"));
  t.learning_rate = std::stod(require_key(kv, "train.learning_rate"));
  t.rmsprop_decay = std::stod(require_key(kv, "train.rmsprop_decay"));
  t.rmsprop_epsilon = std::stod(require_key(kv, "train.rmsprop_epsilon"));
  t.dropout_lstm = std::stod(require_key(kv, "train.dropout_lstm"));
  t.dropout_dense = std::stod(require_key(kv, "train.dropout_dense"));
  t.l2_lambda = std::stod(require_key(kv, "train.l2_lambda"));
  t.epochs = to_u64(require_key(kv, "train.epochs"));
  t.batch_size = to_u64(require_key(kv, "train.batch_size"));
  t.checkpoint_epochs.clear();
  std::istringstream list(require_key(kv, "train.checkpoint_epochs"));
  for (std::string item; std::getline(list, item, ',');)
    if (!item.empty()) t.checkpoint_epochs.push_back(to_u64(item));
  t.seed = to_u64(require_key(kv, "train.seed"));
  t.clip_norm = std::stod(require_key(kv, "train.clip_norm"));
  t.stride = to_u64(require_key(kv, "train.stride"));
  t.threads = to_u64(require_key(kv, "train.threads"));
  return t;
}

template <class S>
std::vector<NamedTensor> to_named(const ParameterSet<S>& ps) {
  std::vector<NamedTensor> out;
  for (const auto& p : ps)
    out.push_back({p.name, p.value.shape(), std::vector<float>(p.value.data().begin(), p.value.data().end())});
  return out;
}

template <class S>
Checkpoint make_checkpoint(const Model<S>& model, const TrainingConfig& cfg, const TrainerState<S>& state) {
  Checkpoint ck;
  ck.arch = model.config();
  ck.training = cfg;
  ck.params = to_named(model.params());
  const auto& acc = state.optimizer.accumulators();
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const auto& t = acc[k];
    ck.accumulators.push_back(
        {model.params().at(k).name, t.shape(), std::vector<float>(t.data().begin(), t.data().end())});
  }
  ck.epoch = state.epoch;
  ck.rng = state.rng.state();
  return ck;
}

inline std::vector<char> serialize_checkpoint(const Checkpoint& ck) {
  binio::Writer w;
  w.put_bytes("FGN1");
  w.put<std::uint32_t>(ck.version);
  const std::string header = arch_to_text(ck.arch) + training_to_text(ck.training);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header);
  detail::write_tensor_list(w, ck.params);
  detail::write_tensor_list(w, ck.accumulators);
  w.put<std::uint64_t>(ck.epoch);
  for (auto s : ck.rng) w.put<std::uint64_t>(s);
  return w.bytes();
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  binio::write_file(path, serialize_checkpoint(ck));
}

// Loads and validates a checkpoint: tensor names and shapes must match the
// architecture described in its own header.
inline Checkpoint load_checkpoint(const std::string& path) {
  std::string header;
  Checkpoint ck;
  try {
    auto r = detail::open_container(path, "FGN1", kCheckpointVersion, header);
    const auto kv = detail::parse_key_values(header);
    ck.arch = arch_from_text(kv);
    ck.training = training_from_text(kv);
    ck.params = detail::read_tensor_list(r);
    ck.accumulators = detail::read_tensor_list(r);
    ck.epoch = r.get<std::uint64_t>("epoch");
    for (auto& s : ck.rng) s = r.get<std::uint64_t>("rng state");
  } catch (const binio::FormatError& e) {
    throw CheckpointError("'" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("'" + path + "': invalid header value (" + e.what() + ")");
  }
  const Model<float> probe_layout(ck.arch);
  const auto& ps = probe_layout.params();
  auto check = [&](const std::vector<NamedTensor>& ts, const char* what) {
    if (ts.size() != ps.size())
      throw CheckpointError("'" + path + "': " + what + " holds " + std::to_string(ts.size()) +
                            " tensors, architecture expects " + std::to_string(ps.size()));
    for (std::size_t k = 0; k < ts.size(); ++k)
      if (ts[k].name != ps.at(k).name || ts[k].shape != ps.at(k).value.shape())
        throw CheckpointError("'" + path + "': " + what + " tensor '" + ts[k].name + "' " + shape_str(ts[k].shape) +
                              " does not match expected '" + ps.at(k).name + "' " +
                              shape_str(ps.at(k).value.shape()));
  };
  check(ck.params, "parameter block");
  check(ck.accumulators, "accumulator block");
  return ck;
}

template <class S>
void apply_checkpoint(const Checkpoint& ck, Model<S>& model) {
  auto& ps = model.params();
  if (ps.size() != ck.params.size()) throw CheckpointError("checkpoint does not match model layout");
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto& p = ps.at(k);
    if (p.name != ck.params[k].name || p.value.shape() != ck.params[k].shape)
      throw CheckpointError("checkpoint tensor '" + ck.params[k].name + "' does not match model");
    p.value = Tensor<S>(ck.params[k].shape, std::vector<S>(ck.params[k].data.begin(), ck.params[k].data.end()));
  }
}

template <class S>
Model<S> model_from_checkpoint(const Checkpoint& ck) {
  Model<S> m(ck.arch);
  apply_checkpoint(ck, m);
  return m;
}

template <class S>
TrainerState<S> trainer_state_from_checkpoint(const Checkpoint& ck) {
  TrainerState<S> st;
  st.epoch = ck.epoch;
  for (const auto& t : ck.accumulators)
    st.optimizer.accumulators().emplace_back(t.shape, std::vector<S>(t.data.begin(), t.data.end()));
  st.rng.set_state(ck.rng);
  return st;
}

// Feature files ("FGF1") use the checkpoint container: header of key=value
// lines and one tensor "features" of shape [frames x D].
inline void save_features(const std::string& path, const FeatureSequence& f, const std::string& source = "") {
  if (f.vectors.empty()) throw CheckpointError("refusing to write an empty feature file");
  binio::Writer w;
  w.put_bytes("FGF1");
  w.put<std::uint32_t>(kFeatureVersion);
  std::string header = "features.frame_size=" + std::to_string(f.spec.frame_size) + "\n" +
                       "features.sample_rate=" + std::to_string(f.spec.sample_rate) + "\n" +
                       "features.frames=" + std::to_string(f.size()) + "\n";
  if (!source.empty()) header += "features.source=" + source + "\n";
  w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
  w.put_bytes(header);
  NamedTensor t{"features", {f.size(), f.spec.dim()}, {}};
  t.data.reserve(f.size() * f.spec.dim());
  for (const auto& v : f.vectors) {
    if (v.size() != f.spec.dim()) throw CheckpointError("feature vector has the wrong dimension");
    for (double x : v) t.data.push_back(static_cast<float>(x));
  }
  detail::write_tensor_list(w, {t});
  binio::write_file(path, w.bytes());
}

inline FeatureSequence load_features(const std::string& path) {
  std::string header;
  try {
    auto r = detail::open_container(path, "FGF1", kFeatureVersion, header);
    const auto kv = detail::parse_key_values(header);
    FeatureSequence f;
    f.spec.frame_size = detail::to_u64(detail::require_key(kv, "features.frame_size"));
    f.spec.sample_rate = static_cast<int>(detail::to_u64(detail::require_key(kv, "features.sample_rate")));
    const auto ts = detail::read_tensor_list(r);
    if (ts.size() != 1 || ts[0].name != "features" || ts[0].shape.size() != 2 || ts[0].shape[1] != f.spec.dim())
      throw CheckpointError("'" + path + "': expected one [frames x " + std::to_string(f.spec.dim()) +
                            "] tensor named 'features'");
    const std::size_t D = f.spec.dim();
    for (std::size_t i = 0; i < ts[0].shape[0]; ++i)
      f.vectors.emplace_back(ts[0].data.begin() + static_cast<std::ptrdiff_t>(i * D),
                             ts[0].data.begin() + static_cast<std::ptrdiff_t>((i + 1) * D));
    return f;
  } catch (const binio::FormatError& e) {
    throw CheckpointError("'" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("'" + path + "': invalid header value (" + e.what() + ")");
  }
}

}  // namespace fgen
