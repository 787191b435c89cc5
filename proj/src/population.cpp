#include "sba/population.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "sba/io.hpp"
#include "sba/rng.hpp"

namespace sba {
namespace {

constexpr std::string_view kBitMagic = "SBAPOP1";
constexpr std::string_view kTemplateMagic = "SBAPOPT";

Template random_unit_vector(uint32_t dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (uint32_t i = 0; i < dim; ++i) v[i] = rng.next_normal();
  const double norm = v.norm();
  if (norm == 0.0) return random_unit_vector(dim, rng);
  return Template{v / norm};
}

Template noisy_view(const Template& centroid, double sigma, Rng& rng) {
  Eigen::VectorXd v = centroid.coords;
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += sigma * rng.next_normal();
  const double norm = v.norm();
  if (norm == 0.0) return centroid;
  return Template{v / norm};
}

}  // namespace

const BitString& LabeledSample::bits() const {
  if (!is_bits()) throw std::runtime_error("sample holds a template, not a bit string");
  return std::get<BitString>(payload);
}

const Template& LabeledSample::tmpl() const {
  if (is_bits()) throw std::runtime_error("sample holds a bit string, not a template");
  return std::get<Template>(payload);
}

void PopulationConfig::validate() const {
  if (count < 1) throw std::invalid_argument("population count must be >= 1");
  if (dimension_or_length < 1) throw std::invalid_argument("dimension/length must be >= 1");
  if (mode == PopulationMode::bit_level) {
    if (!(noise >= 0.0 && noise < 0.5))
      throw std::invalid_argument("bit flip probability must satisfy 0 <= p < 0.5");
  } else {
    if (!(noise >= 0.0)) throw std::invalid_argument("template noise must be >= 0");
  }
}

std::vector<LabeledSample> generate_population(const PopulationConfig& cfg) {
  cfg.validate();
  std::vector<LabeledSample> out;
  out.reserve(2ull * cfg.count);
  const Rng root(cfg.seed);
  for (uint32_t id = 0; id < cfg.count; ++id) {
    Rng rng = root.split(id);
    if (cfg.mode == PopulationMode::bit_level) {
      const BitString truth = BitString::random(cfg.dimension_or_length, rng);
      out.push_back({id, Session::enroll, truth.flipped_copy(cfg.noise, rng)});
      out.push_back({id, Session::auth, truth.flipped_copy(cfg.noise, rng)});
    } else {
      const Template centroid = random_unit_vector(cfg.dimension_or_length, rng);
      out.push_back({id, Session::enroll, noisy_view(centroid, cfg.noise, rng)});
      out.push_back({id, Session::auth, noisy_view(centroid, cfg.noise, rng)});
    }
  }
  return out;
}

void save_dataset(const std::vector<LabeledSample>& samples,
                  const std::filesystem::path& path) {
  std::vector<uint8_t> out;
  if (samples.empty()) {
    // An empty dataset round-trips as an empty file.
    write_file(path, out);
    return;
  }
  const bool bits = samples.front().is_bits();
  const uint32_t len = bits ? samples.front().bits().length()
                            : static_cast<uint32_t>(samples.front().tmpl().coords.size());
  const auto magic = bits ? kBitMagic : kTemplateMagic;
  out.insert(out.end(), magic.begin(), magic.end());
  put_u32le(out, len);
  put_u32le(out, static_cast<uint32_t>(samples.size()));
  for (const auto& s : samples) {
    if (s.is_bits() != bits) throw std::invalid_argument("mixed payload kinds in dataset");
    put_u32le(out, s.id);
    put_u8(out, static_cast<uint8_t>(s.session));
    if (bits) {
      if (s.bits().length() != len) throw std::invalid_argument("bit length mismatch in dataset");
      put_bytes(out, s.bits().bytes());
    } else {
      if (static_cast<uint32_t>(s.tmpl().coords.size()) != len)
        throw std::invalid_argument("template dimension mismatch in dataset");
      for (Eigen::Index i = 0; i < s.tmpl().coords.size(); ++i)
        put_f64le(out, s.tmpl().coords[i]);
    }
  }
  write_file(path, out);
}

std::vector<LabeledSample> load_dataset(const std::filesystem::path& path,
                                        std::optional<PopulationMode> expect_mode,
                                        std::optional<uint32_t> expect_len) {
  const auto data = read_file(path);
  if (data.empty()) return {};

  ByteReader in(data);
  const auto magic = in.take(7);
  PopulationMode mode;
  if (std::equal(kBitMagic.begin(), kBitMagic.end(), magic.begin(),
                 [](char c, uint8_t u) { return static_cast<uint8_t>(c) == u; })) {
    mode = PopulationMode::bit_level;
  } else if (std::equal(kTemplateMagic.begin(), kTemplateMagic.end(), magic.begin(),
                        [](char c, uint8_t u) { return static_cast<uint8_t>(c) == u; })) {
    mode = PopulationMode::template_level;
  } else {
    throw std::runtime_error("unrecognized dataset magic");
  }
  if (expect_mode && mode != *expect_mode)
    throw std::runtime_error("dataset payload kind does not match expectation");

  const uint32_t len = in.u32le();
  if (len < 1) throw std::runtime_error("dataset declares zero length");
  if (expect_len && len != *expect_len)
    throw std::runtime_error("dataset length " + std::to_string(len) +
                             " does not match configured " + std::to_string(*expect_len));
  const uint32_t count = in.u32le();

  std::vector<LabeledSample> out;
  out.reserve(count);
  std::unordered_map<IdentityId, uint32_t> enroll_seen;
  for (uint32_t r = 0; r < count; ++r) {
    LabeledSample s;
    s.id = in.u32le();
    const uint8_t session = in.u8();
    if (session > 1) throw std::runtime_error("invalid session tag");
    s.session = static_cast<Session>(session);
    if (mode == PopulationMode::bit_level) {
      s.payload = BitString::from_bytes(in.take((len + 7) / 8), len);
    } else {
      Eigen::VectorXd v(len);
      for (uint32_t i = 0; i < len; ++i) {
        v[i] = in.f64le();
        if (!std::isfinite(v[i])) throw std::runtime_error("non-finite template entry");
      }
      s.payload = Template{std::move(v)};
    }
    // At most one enroll sample per identity; enrollment is single-shot.
    if (s.session == Session::enroll && ++enroll_seen[s.id] > 1)
      throw std::runtime_error("duplicate enroll record for id " + std::to_string(s.id));
    out.push_back(std::move(s));
  }
  if (!in.done()) throw std::runtime_error("trailing bytes after last record");
  return out;
}

}  // namespace sba
