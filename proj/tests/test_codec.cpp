#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "kt/codec/arithmetic.hpp"
#include "kt/codec/container.hpp"
#include "kt/codec/deflate.hpp"
#include "kt/codec/errors.hpp"
#include "kt/codec/lm.hpp"
#include "kt/codec/prior.hpp"
#include "kt/sampler.hpp"
#include "oracles/markov.hpp"
#include "oracles/prior_schedule.hpp"
#include "util.hpp"

using namespace kt;

namespace {

Program prog(std::vector<Line> lines, std::size_t out) { return Program{std::move(lines), out}; }

// Fixed skewed distribution over the byte alphabet.
class StaticModel final : public ProbabilityModel {
 public:
  StaticModel() : freq_(kAlphabet) {
    for (std::size_t i = 0; i < kAlphabet; ++i) freq_[i] = static_cast<std::uint32_t>(1 + (i % 7) * (i % 3) * 40);
  }
  void reset() override {}
  void frequencies(std::vector<std::uint32_t>& f) override { f = freq_; }
  void update(std::uint16_t) override {}
  std::uint32_t checksum() const override { return 77; }
  std::string describe() const override { return "static"; }

 private:
  std::vector<std::uint32_t> freq_;
};

ByteSeq noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  ByteSeq out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(g());
  return out;
}

}  // namespace

TEST_SUITE("codec") {
  TEST_CASE("prior cost of the worked example") {
    Program p = prog({ops::repeat_num(5, 7)}, 0);
    // function + (8 + log2 25) + stop + log2(1)
    const double expect = 2 * std::log2(24.0) + 8 + std::log2(25.0);
    CHECK(program_bit_cost(p) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(program_bit_cost(p) == doctest::Approx(21.8138).epsilon(1e-4));
    CHECK(PriorCostModel{}.bits_per_func() == doctest::Approx(oracle::kFuncBits));
    CHECK(encode_program(p).bit_length <= 24);
  }

  TEST_CASE("every function follows the schedule") {
    Program p = prog({ops::set_list(bytes({4, 8, 15, 16, 23})), ops::range_up(3, 40), ops::range_up_step(0, 90, 3),
                      ops::repeat_num(25, 255), ops::substitute(1, 5, 6), ops::reverse_list(2),
                      ops::subseq(1, 2, 20), ops::subseq_step(1, 0, 25, 5), ops::repeat_list(0, 3), ops::max_n(1, 4),
                      ops::min_n(1, 1), ops::add_const(0, 200), ops::sub_const(0, 3), ops::mod_const(1, 7),
                      ops::scan_add(0), ops::filter_even(1), ops::filter_odd(1), ops::filter_nonzero(0),
                      ops::add_lists(0, 1), ops::sub_lists(1, 0), ops::mod_lists(1, 0), ops::concatenate(3, 4),
                      ops::interleave(0, 21)},
                     22);
    REQUIRE(p.lines.size() == kNumOps);
    CHECK(program_bit_cost(p) == doctest::Approx(oracle::program_bits(p)).epsilon(1e-12));

    SamplerConfig cfg;
    for (const auto& r : sample_batch_parallel(cfg, 0, 3000)) {
      CHECK(program_bit_cost(r.program) == doctest::Approx(oracle::program_bits(r.program)).epsilon(1e-12));
    }
  }

  TEST_CASE("appending a line increases cost") {
    SamplerConfig cfg;
    cfg.seed = 9;
    for (const auto& r : sample_batch_serial(cfg, 0, 300)) {
      Program q = r.program;
      q.lines.push_back(ops::reverse_list(q.lines.size() - 1));
      q.output_ref = q.lines.size() - 1;
      CHECK(program_bit_cost(q) > program_bit_cost(r.program));
    }
  }

  TEST_CASE("parameters outside the prior are cost errors") {
    CHECK_THROWS_AS(program_bit_cost(prog({ops::repeat_num(26, 1)}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::repeat_num(0, 1)}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::range_up(1, 256)}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::range_up_step(1, 9, 6)}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::set_list(ByteSeq(26, 1))}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::range_up(1, 9), ops::subseq(0, 0, 30)}, 1)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::range_up(1, 9), ops::reverse_list(1)}, 1)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({}, 0)), CostError);
    CHECK_THROWS_AS(program_bit_cost(prog({ops::range_up(1, 9)}, 1)), CostError);
    Line bad = ops::range_up(1, 9);
    bad.ints.push_back(2);
    CHECK_THROWS_AS(program_bit_cost(prog({bad}, 0)), CostError);
  }

  TEST_CASE("program streams round-trip within two bits of the cost") {
    SamplerConfig cfg;
    cfg.seed = 17;
    for (const auto& r : sample_batch_parallel(cfg, 0, 5000)) {
      Bitstream s = encode_program(r.program);
      REQUIRE(decode_program(s) == r.program);
      CHECK(static_cast<double>(s.bit_length) <= std::ceil(r.bit_cost) + 2);
    }
    Program one = prog({ops::range_up(0, 255)}, 0);
    CHECK(decode_program(encode_program(one)) == one);
  }

  TEST_CASE("program streams carry the symbols in order") {
    Program p = prog({ops::range_up(2, 9), ops::concatenate(0, 0)}, 1);
    auto syms = program_symbols(p);
    std::vector<UniformSymbol> expect = {{1, 24}, {2, 256}, {9, 256}, {21, 24}, {0, 1}, {0, 1}, {23, 24}, {1, 2}};
    CHECK(syms == expect);
  }

  TEST_CASE("program decode rejects bad streams") {
    CHECK_THROWS_AS(decode_program(Bitstream{}), DecodeError);
    Bitstream liar{{0xff}, 20};
    CHECK_THROWS_AS(decode_program(liar), DecodeError);
    // a lone stop symbol is not a program
    BitWriter w;
    ArithmeticEncoder enc(w);
    enc.encode_uniform(23, 24);
    enc.finish();
    CHECK_THROWS_AS(decode_program(std::move(w).finish()), DecodeError);
  }

  TEST_CASE("arithmetic coder stays within two bits of the information content") {
    StaticModel m;
    for (std::size_t n : {0u, 1u, 10u, 1000u, 50000u}) {
      ByteSeq x = noise(n, n + 1);
      LmStream s = lm_compress(x, m);
      double info = model_cost_bits(x, m);
      double len = static_cast<double>(s.payload.bit_length);
      CHECK(len - info >= -1e-6);
      CHECK(len - info <= 2.0);
      CHECK(lm_decompress(s, m) == x);
    }
  }

  TEST_CASE("uniform symbols over awkward alphabets") {
    std::mt19937_64 g(3);
    std::vector<std::pair<std::uint64_t, std::uint64_t>> syms;
    double info = 0;
    for (int i = 0; i < 4000; ++i) {
      std::uint64_t n = 1 + g() % 1000003;
      syms.emplace_back(g() % n, n);
      info += std::log2(static_cast<double>(n));
    }
    BitWriter w;
    ArithmeticEncoder enc(w);
    for (auto [v, n] : syms) enc.encode_uniform(v, n);
    enc.finish();
    Bitstream s = std::move(w).finish();
    CHECK(static_cast<double>(s.bit_length) <= std::ceil(info) + 2);
    BitReader r(s);
    ArithmeticDecoder dec(r);
    for (auto [v, n] : syms) REQUIRE(dec.decode_uniform(n) == v);
  }

  TEST_CASE("adaptive context models") {
    auto data = oracle::markov_bytes(200000, 8);
    for (int k : {0, 1, 2}) {
      AdaptiveContextModel m(k);
      LmStream s = lm_compress(data, m);
      AdaptiveContextModel d(k);
      CHECK(lm_decompress(s, d) == data);
      CHECK(static_cast<double>(s.payload.bit_length) <= model_cost_bits(data, m) + 2);
    }
    AdaptiveContextModel m0(0), m1(1);
    CHECK(model_cost_bits(data, m1) < model_cost_bits(data, m0));
    CHECK_THROWS_AS(AdaptiveContextModel(3), std::invalid_argument);

    LmStream s = lm_compress(data, m1);
    AdaptiveContextModel wrong(2);
    CHECK_THROWS_AS(lm_decompress(s, wrong), ModelMismatch);

    // empty input costs only the end symbol
    AdaptiveContextModel e(0);
    LmStream es = lm_compress(ByteSeq{}, e);
    CHECK(lm_decompress(es, e).empty());
    CHECK(model_cost_bits(ByteSeq{}, e) == doctest::Approx(std::log2(257.0)));
  }

  TEST_CASE("lm stream serialization") {
    AdaptiveContextModel m(1);
    ByteSeq x = bytes({1, 2, 3, 1, 2, 3, 1, 2, 3});
    LmStream s = lm_compress(x, m);
    auto bytes_out = serialize(s);
    LmStream back = deserialize_lm_stream(bytes_out);
    CHECK(back.model_checksum == s.model_checksum);
    CHECK(back.symbols == x.size());
    CHECK(back.payload == s.payload);
    CHECK(lm_decompress(back, m) == x);
    bytes_out[0] ^= 1;
    CHECK_THROWS_AS(deserialize_lm_stream(bytes_out), DecodeError);
    CHECK_THROWS_AS(deserialize_lm_stream(ByteSeq{}), DecodeError);
    auto cut = serialize(s);
    cut.pop_back();
    CHECK_THROWS_AS(deserialize_lm_stream(cut), DecodeError);
  }

  TEST_CASE("external distributions") {
    // position i predicts byte i+1 with probability 0.9, then the end symbol
    ByteSeq x = bytes({1, 2, 3, 4});
    std::string rows;
    for (std::size_t i = 0; i <= x.size(); ++i) {
      std::vector<double> p(257, 0.1 / 256);
      p[i < x.size() ? x[i] : 256] = 0.9;
      nlohmann::json j{{"position", i}, {"distribution", p}};
      rows += j.dump() + "\n";
    }
    auto m = ExternalDistributionModel::from_text(rows);
    CHECK(m.has_distributions());
    LmStream s = lm_compress(x, m);
    CHECK(lm_decompress(s, m) == x);
    double info = 5 * -std::log2(0.9);
    CHECK(model_cost_bits(x, m) == doctest::Approx(info).epsilon(0.01));
    CHECK(static_cast<double>(s.payload.bit_length) <= info + 2.1);

    ByteSeq longer = bytes({1, 2, 3, 4, 5});
    CHECK_THROWS_AS(lm_compress(longer, m), ModelMismatch);

    auto lp = ExternalDistributionModel::from_text(
        "{\"position\": 0, \"logprob\": -0.6931471805599453}\n{\"position\": 1, \"logprob\": -1.3862943611198906}\n");
    CHECK_FALSE(lp.has_distributions());
    CHECK(lp.logprob_cost_bits() == doctest::Approx(3.0));
    CHECK_THROWS(ExternalDistributionModel::from_text("{\"position\": 1, \"logprob\": -1}\n"));
    CHECK_THROWS(ExternalDistributionModel::from_text("{\"position\": 0, \"distribution\": [0.5, 0.5]}\n"));
  }

  TEST_CASE("deflate") {
    ByteSeq x = bytes({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    auto z = gzip_compress(x);
    CHECK(gzip_decompress(z) == x);
    CHECK(deflate_cost(x) == 8.0 * static_cast<double>(z.size()));
    CHECK(gzip_compress(x) == z);  // no timestamp in the member

    auto empty = gzip_compress(ByteSeq{});
    CHECK(gzip_decompress(empty).empty());
    CHECK(deflate_cost(ByteSeq{}) > 0);
    CHECK(deflate_cost(ByteSeq{}) <= 8 * 24);

    std::string text(5000, 'a');
    CHECK(deflate_cost(text) < 8.0 * 100);
    auto big = noise(100000, 1);
    CHECK(gzip_decompress(gzip_compress(big)) == big);

    auto bad = z;
    bad[bad.size() - 6] ^= 0x40;  // corrupt the CRC trailer
    CHECK_THROWS(gzip_decompress(bad));
    CHECK_THROWS_AS(gzip_decompress(ByteSeq{1, 2, 3}), DecodeError);
  }

  TEST_CASE("container round-trip and decisions") {
    SamplerConfig cfg;
    cfg.seed = 5;
    std::vector<ByteSeq> chunks;
    std::vector<std::optional<Program>> cands;
    for (const auto& r : sample_batch_serial(cfg, 0, 300)) {
      chunks.push_back(r.sequence);
      cands.emplace_back(r.program);
    }
    for (int i = 0; i < 50; ++i) {
      chunks.push_back(noise(1 + static_cast<std::size_t>(i) * 3, static_cast<std::uint64_t>(i)));
      cands.emplace_back();
    }
    // a correct but wasteful program loses to literals
    chunks.push_back(bytes({42}));
    cands.emplace_back(prog({ops::repeat_num(1, 42)}, 0));

    auto res = compress_container(chunks, cands);
    CHECK(decompress_container(res.bytes) == chunks);
    REQUIRE(res.plans.size() == chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto& p = res.plans[i];
      CHECK(p.use_program == (cands[i].has_value() && p.program_bits < p.raw_bits));
      CHECK(p.body_bits == doctest::Approx(1 + std::min(p.use_program ? p.program_bits : 1e300, p.raw_bits)));
    }
    CHECK_FALSE(res.plans.back().use_program);
    CHECK(res.bytes.size() == kContainerHeaderBytes + (res.body_bits + 7) / 8);

    double planned = 0;
    for (const auto& p : res.plans) planned += p.body_bits;
    CHECK(static_cast<double>(res.body_bits) <= std::ceil(planned) + 2);

    auto a = plan_container_serial(chunks, cands, {}, 400);
    auto b = plan_container_parallel(chunks, cands, {}, 400);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].use_program == b[i].use_program);
      CHECK(a[i].body_bits == b[i].body_bits);
    }

    auto plain = compress_container(chunks, {});
    CHECK(decompress_container(plain.bytes) == chunks);
    CHECK(plain.bytes.size() > res.bytes.size());

    auto none = compress_container({}, {});
    CHECK(decompress_container(none.bytes).empty());
  }

  TEST_CASE("container rejects mismatches and corruption") {
    std::vector<ByteSeq> chunks = {iota_bytes(1, 10), bytes({7, 7, 7})};
    std::vector<std::optional<Program>> cands = {prog({ops::range_up(1, 10)}, 0), prog({ops::repeat_num(4, 7)}, 0)};
    CHECK_THROWS_AS(compress_container(chunks, cands), CandidateMismatch);
    CHECK_THROWS_AS(compress_container(chunks, {std::nullopt}), std::invalid_argument);
    CHECK_THROWS_AS(compress_container({ByteSeq{}}, {}), std::invalid_argument);

    cands[1] = prog({ops::repeat_num(3, 7)}, 0);
    auto res = compress_container(chunks, cands);
    auto good = res.bytes;
    REQUIRE(decompress_container(good) == chunks);

    for (std::size_t i = 0; i < good.size(); ++i) {
      auto bad = good;
      bad[i] ^= 0x10;
      CHECK_THROWS_AS_MESSAGE(decompress_container(bad), DecodeError, "byte " << i);
    }
    auto cut = good;
    cut.pop_back();
    CHECK_THROWS_AS(decompress_container(cut), DecodeError);
    CHECK_THROWS_AS(decompress_container(ByteSeq{}), DecodeError);

    PriorCostModel other;
    other.max_step = 6;
    CHECK_THROWS_AS(decompress_container(good, other), DecodeError);
  }
}
