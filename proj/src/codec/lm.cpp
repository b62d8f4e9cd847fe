#include "kt/codec/lm.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "kt/codec/arithmetic.hpp"
#include "kt/codec/bytes_io.hpp"
#include "kt/codec/errors.hpp"

namespace kt {

namespace {

std::uint32_t crc_of(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

constexpr char kMagic[4] = {'K', 'T', 'L', 'M'};
constexpr std::uint8_t kVersion = 1;

// Quantization scale for imported probabilities.
constexpr double kExternalScale = double(1u << 24);

}  // namespace

std::vector<double> ProbabilityModel::probabilities() {
  std::vector<std::uint32_t> f(kAlphabet);
  frequencies(f);
  double total = std::accumulate(f.begin(), f.end(), 0.0);
  std::vector<double> p(kAlphabet);
  for (std::size_t i = 0; i < kAlphabet; ++i) p[i] = f[i] / total;
  return p;
}

// ---------------------------------------------------------------------------

AdaptiveContextModel::AdaptiveContextModel(int order) : order_(order) {
  if (order < 0 || order > 2) throw std::invalid_argument("context order must be 0, 1 or 2");
  reset();
}

void AdaptiveContextModel::reset() {
  counts_.assign(std::size_t{1} << (8 * order_), {});
  context_ = 0;
  seen_ = 0;
}

std::vector<std::uint32_t>& AdaptiveContextModel::table() {
  auto& t = counts_[context_];
  if (t.empty()) t.assign(kAlphabet, 1);
  return t;
}

void AdaptiveContextModel::frequencies(std::vector<std::uint32_t>& freq) { freq = table(); }

void AdaptiveContextModel::update(std::uint16_t symbol) {
  auto& t = table();
  if (++t[symbol] > (1u << 30)) {
    for (auto& c : t) c = std::max<std::uint32_t>(1, c / 2);
  }
  if (symbol < 256 && order_ > 0) {
    const std::uint32_t mask = (1u << (8 * order_)) - 1;
    context_ = ((context_ << 8) | symbol) & mask;
  }
  ++seen_;
}

std::string AdaptiveContextModel::describe() const {
  return "adaptive-order" + std::to_string(order_) + "-add-one";
}

std::uint32_t AdaptiveContextModel::checksum() const { return crc_of(describe()); }

// ---------------------------------------------------------------------------

ExternalDistributionModel ExternalDistributionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log-prob file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

ExternalDistributionModel ExternalDistributionModel::from_text(const std::string& jsonl) {
  ExternalDistributionModel m;
  m.checksum_ = crc_of(jsonl);
  std::istringstream in(jsonl);
  std::string line;
  std::size_t expected = 0;
  bool any_dist = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto rec = nlohmann::json::parse(line);
    auto pos = rec.at("position").get<std::size_t>();
    if (pos != expected) throw std::runtime_error("log-prob positions must be consecutive from 0");
    ++expected;
    if (rec.contains("distribution")) {
      auto probs = rec.at("distribution").get<std::vector<double>>();
      if (probs.size() != 256 && probs.size() != kAlphabet) {
        throw std::runtime_error("distribution must have 256 or 257 entries");
      }
      std::vector<std::uint32_t> row(kAlphabet, 1);
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw std::runtime_error("negative probability in distribution");
        row[i] = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(probs[i] * kExternalScale)));
      }
      m.rows_.push_back(std::move(row));
      any_dist = true;
    } else {
      if (any_dist) throw std::runtime_error("cannot mix distributions and log-probs");
      m.logprob_bits_ -= rec.at("logprob").get<double>() / std::log(2.0);
    }
  }
  return m;
}

void ExternalDistributionModel::frequencies(std::vector<std::uint32_t>& freq) {
  if (position_ >= rows_.size()) throw ModelMismatch("imported distributions end before the data");
  freq = rows_[position_];
}

std::string ExternalDistributionModel::describe() const {
  return "external-" + std::to_string(rows_.size()) + "-positions";
}

// ---------------------------------------------------------------------------

namespace {

void cumulative(const std::vector<std::uint32_t>& f, std::uint16_t sym, std::uint64_t& lo, std::uint64_t& hi,
                std::uint64_t& total) {
  lo = 0;
  total = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i == sym) lo = total;
    total += f[i];
  }
  hi = lo + f[sym];
}

}  // namespace

LmStream lm_compress(std::span<const std::uint8_t> data, ProbabilityModel& model) {
  model.reset();
  BitWriter w;
  ArithmeticEncoder enc(w);
  std::vector<std::uint32_t> freq(ProbabilityModel::kAlphabet);
  auto code = [&](std::uint16_t sym) {
    model.frequencies(freq);
    std::uint64_t lo, hi, total;
    cumulative(freq, sym, lo, hi, total);
    enc.encode(lo, hi, total);
    model.update(sym);
  };
  for (auto b : data) code(b);
  code(ProbabilityModel::kEndSymbol);
  enc.finish();
  return LmStream{model.checksum(), data.size(), std::move(w).finish()};
}

std::vector<std::uint8_t> lm_decompress(const LmStream& stream, ProbabilityModel& model) {
  if (stream.model_checksum != model.checksum()) {
    throw ModelMismatch("stream was encoded with a different probability model");
  }
  if (stream.payload.bit_length == 0) throw DecodeError("empty LM stream");
  model.reset();
  BitReader r(stream.payload);
  ArithmeticDecoder dec(r);
  std::vector<std::uint32_t> freq(ProbabilityModel::kAlphabet);
  std::vector<std::uint8_t> out;
  while (true) {
    model.frequencies(freq);
    std::uint64_t total = 0;
    for (auto f : freq) total += f;
    std::uint64_t t = dec.target(total);
    if (t >= total) throw DecodeError("corrupt LM stream");
    std::uint64_t lo = 0;
    std::uint16_t sym = 0;
    while (lo + freq[sym] <= t) lo += freq[sym++];
    dec.consume(lo, lo + freq[sym], total);
    model.update(sym);
    if (sym == ProbabilityModel::kEndSymbol) break;
    out.push_back(static_cast<std::uint8_t>(sym));
    if (dec.overrun() > static_cast<std::uint64_t>(kCoderBits)) throw DecodeError("LM stream truncated");
  }
  return out;
}

double model_cost_bits(std::span<const std::uint8_t> data, ProbabilityModel& model) {
  model.reset();
  std::vector<std::uint32_t> freq(ProbabilityModel::kAlphabet);
  double bits = 0.0;
  auto cost = [&](std::uint16_t sym) {
    model.frequencies(freq);
    double total = 0.0;
    for (auto f : freq) total += f;
    bits -= std::log2(freq[sym] / total);
    model.update(sym);
  };
  for (auto b : data) cost(b);
  cost(ProbabilityModel::kEndSymbol);
  return bits;
}

std::vector<std::uint8_t> serialize(const LmStream& s) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  io::put_be(out, s.model_checksum, 4);
  io::put_be(out, s.symbols, 8);
  io::put_be(out, s.payload.bit_length, 8);
  out.insert(out.end(), s.payload.bytes.begin(), s.payload.bytes.end());
  return out;
}

LmStream deserialize_lm_stream(std::span<const std::uint8_t> bytes) {
  try {
    io::ByteCursor c(bytes);
    auto magic = c.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw DecodeError("not an LM stream");
    if (c.get_be(1) != kVersion) throw DecodeError("unsupported LM stream version");
    LmStream s;
    s.model_checksum = static_cast<std::uint32_t>(c.get_be(4));
    s.symbols = c.get_be(8);
    s.payload.bit_length = c.get_be(8);
    auto body = c.take(c.remaining());
    if ((s.payload.bit_length + 7) / 8 != body.size()) throw DecodeError("LM payload length mismatch");
    s.payload.bytes.assign(body.begin(), body.end());
    return s;
  } catch (const std::out_of_range&) {
    throw DecodeError("truncated LM stream header");
  }
}

}  // namespace kt
