#include "depts/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "depts/errors.hpp"
#include "depts/text_io.hpp"

namespace depts {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'D', 'E', 'P', 'T', 'S', 'C', 'K', 'P'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_ += s;
  }
  void put_vector(const Eigen::VectorXd& v) {
    put<std::uint64_t>(v.size());
    if (v.size() > 0) out_.append(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
  }
  void put_raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = in_.substr(at_, n);
    at_ += n;
    return s;
  }
  Eigen::VectorXd get_vector() {
    const auto n = get<std::uint64_t>();
    if (n > (in_.size() - at_) / sizeof(double)) throw DataError("checkpoint: truncated array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    if (n > 0) std::memcpy(v.data(), in_.data() + at_, sizeof(double) * n);
    at_ += sizeof(double) * n;
    return v;
  }
  bool done() const { return at_ == in_.size(); }
  void need(std::size_t n) const {
    if (n > in_.size() - at_) throw DataError("checkpoint: truncated file");
  }
  const char* cursor() const { return in_.data() + at_; }
  void skip(std::size_t n) {
    need(n);
    at_ += n;
  }

 private:
  const std::string& in_;
  std::size_t at_ = 0;
};

}  // namespace

std::string serialize_model(const TrainedModel& m) {
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  const auto& s = m.network.shape;
  for (int v : {s.layers, s.width, s.lookback, s.horizon, s.num_series}) w.put<std::int32_t>(v);
  const auto f = flags_for(m.config.variant);
  for (bool b : {f.drop_local_input_subtraction, f.drop_periodic_forecast, f.drop_z_residual, f.no_period_mode}) {
    w.put<std::uint8_t>(b);
  }
  w.put_string(config_to_json(m.config));
  for (Index v : {m.split.train_end, m.split.val_end, m.split.test_end}) w.put<std::int64_t>(v);
  w.put_vector(m.network.pack());

  w.put<std::uint64_t>(m.periods.size());
  for (const auto& p : m.periods) {
    detail::check_mask(p.coefficients, p.mask);
    w.put_string(p.series_id);
    w.put<double>(p.coefficients.base);
    w.put<std::int32_t>(p.mask.budget);
    w.put<std::uint64_t>(p.coefficients.atoms.size());
    for (std::size_t k = 0; k < p.coefficients.atoms.size(); ++k) {
      const auto& a = p.coefficients.atoms[k];
      w.put<double>(a.amplitude);
      w.put<double>(a.frequency);
      w.put<double>(a.phase);
      w.put<std::uint8_t>(p.mask.enabled(k));
    }
  }
  w.put<double>(m.final_loss);
  w.put_vector(Eigen::Map<const Eigen::VectorXd>(m.loss_history.data(),
                                                 static_cast<Eigen::Index>(m.loss_history.size())));
  return w.take();
}

TrainedModel deserialize_model(const std::string& bytes) {
  Reader r(bytes);
  r.need(sizeof(kMagic));
  if (std::memcmp(r.cursor(), kMagic, sizeof(kMagic)) != 0) throw DataError("checkpoint: bad magic");
  r.skip(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  NetworkShape s;
  s.layers = r.get<std::int32_t>();
  s.width = r.get<std::int32_t>();
  s.lookback = r.get<std::int32_t>();
  s.horizon = r.get<std::int32_t>();
  s.num_series = r.get<std::int32_t>();
  VariantFlags f;
  f.drop_local_input_subtraction = r.get<std::uint8_t>();
  f.drop_periodic_forecast = r.get<std::uint8_t>();
  f.drop_z_residual = r.get<std::uint8_t>();
  f.no_period_mode = r.get<std::uint8_t>();

  TrainedModel m;
  m.config = config_from_json(r.get_string());
  if (!(flags_for(m.config.variant) == f)) throw DataError("checkpoint: variant flags disagree with config");
  m.split.train_end = r.get<std::int64_t>();
  m.split.val_end = r.get<std::int64_t>();
  m.split.test_end = r.get<std::int64_t>();
  try {
    m.network = NetworkParams<double>::zeros(s);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  const auto theta = r.get_vector();
  if (theta.size() != m.network.size()) throw DataError("checkpoint: parameter count does not match shape");
  m.network.unpack(theta);

  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    SeriesPeriods p;
    p.series_id = r.get_string();
    p.coefficients.base = r.get<double>();
    p.mask.budget = r.get<std::int32_t>();
    const auto k = r.get<std::uint64_t>();
    r.need(k * (3 * sizeof(double) + 1));
    for (std::uint64_t j = 0; j < k; ++j) {
      CosineAtom<double> a;
      a.amplitude = r.get<double>();
      a.frequency = r.get<double>();
      a.phase = r.get<double>();
      p.coefficients.atoms.push_back(a);
      p.mask.bits.push_back(r.get<std::uint8_t>());
    }
    m.periods.push_back(std::move(p));
  }
  m.final_loss = r.get<double>();
  const auto hist = r.get_vector();
  m.loss_history.assign(hist.data(), hist.data() + hist.size());
  if (!r.done()) throw DataError("checkpoint: trailing bytes");
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  write_file_atomic(path, serialize_model(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace depts
