#include "gift/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gift {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr char kMagic[8] = {'G', 'I', 'F', 'T', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out_.append(raw, sizeof(T));
  }
  void put_bytes(const std::string& s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

template <typename Scalar>
std::string checkpoint_bytes(const GiftModel<Scalar>& model) {
  Writer w;
  w.put_bytes(std::string(kMagic, sizeof kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(sizeof(Scalar));
  const std::string cfg = config_to_json(model.config);
  w.put<std::uint64_t>(cfg.size());
  w.put_bytes(cfg);
  const auto channels = static_cast<std::uint32_t>(model.normalizer.mean.size());
  w.put<std::uint32_t>(channels);
  for (std::uint32_t c = 0; c < channels; ++c) w.put<double>(model.normalizer.mean(c));
  for (std::uint32_t c = 0; c < channels; ++c) w.put<double>(model.normalizer.stddev(c));
  const auto players = static_cast<std::uint32_t>(model.graph.players());
  w.put<std::uint32_t>(players);
  for (std::uint32_t i = 0; i < players; ++i) {
    for (std::uint32_t j = 0; j < players; ++j) w.put<double>(model.graph.normalized(i, j));
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.params.size()));
  for (const auto& p : model.params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.put_bytes(p.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) w.put<Scalar>(p.value(i, j));
    }
  }
  return w.take();
}

template <typename Scalar>
GiftModel<Scalar> model_from_bytes(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw IoError("not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto width = r.get<std::uint32_t>();
  if (width != sizeof(Scalar)) {
    throw IoError("checkpoint holds " + std::to_string(width * 8) + "-bit parameters, expected " +
                  std::to_string(sizeof(Scalar) * 8));
  }
  GiftModel<Scalar> m;
  const auto cfg_len = r.get<std::uint64_t>();
  m.config = config_from_json(r.get_bytes(cfg_len));
  const auto channels = r.get<std::uint32_t>();
  m.normalizer.mean.resize(channels);
  m.normalizer.stddev.resize(channels);
  for (std::uint32_t c = 0; c < channels; ++c) m.normalizer.mean(c) = r.get<double>();
  for (std::uint32_t c = 0; c < channels; ++c) m.normalizer.stddev(c) = r.get<double>();
  const auto players = r.get<std::uint32_t>();
  m.graph.normalized.resize(players, players);
  for (std::uint32_t i = 0; i < players; ++i) {
    for (std::uint32_t j = 0; j < players; ++j) m.graph.normalized(i, j) = r.get<double>();
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.get_bytes(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    MatrixX<Scalar> value(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) value(i, j) = r.get<Scalar>();
    }
    m.params.add(name, std::move(value));
  }
  if (!r.done()) throw IoError("trailing bytes after checkpoint payload");
  return m;
}

template <typename Scalar>
void save_checkpoint(const GiftModel<Scalar>& model, const std::filesystem::path& path) {
  const std::string bytes = checkpoint_bytes(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

template <typename Scalar>
GiftModel<Scalar> load_checkpoint(const std::filesystem::path& path) {
  return model_from_bytes<Scalar>(read_file(path));
}

int checkpoint_scalar_bytes(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes);
  if (r.get_bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw IoError("not a checkpoint file");
  r.get<std::uint32_t>();
  return static_cast<int>(r.get<std::uint32_t>());
}

template std::string checkpoint_bytes<float>(const GiftModel<float>&);
template std::string checkpoint_bytes<double>(const GiftModel<double>&);
template GiftModel<float> model_from_bytes<float>(const std::string&);
template GiftModel<double> model_from_bytes<double>(const std::string&);
template void save_checkpoint<float>(const GiftModel<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const GiftModel<double>&, const std::filesystem::path&);
template GiftModel<float> load_checkpoint<float>(const std::filesystem::path&);
template GiftModel<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace gift
