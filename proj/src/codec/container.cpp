#include "kt/codec/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "kt/codec/bytes_io.hpp"
#include "kt/codec/errors.hpp"

namespace kt {

namespace {

constexpr char kMagic[4] = {'K', 'T', 'C', 'F'};
constexpr std::uint8_t kVersion = 1;

ChunkPlan plan_chunk(const ByteSeq& chunk, const std::optional<Program>& candidate, const PriorCostModel& m,
                     std::uint64_t max_chunk_len, std::size_t index) {
  ChunkPlan plan;
  plan.raw_bits = std::log2(static_cast<double>(max_chunk_len)) + 8.0 * static_cast<double>(chunk.size());
  if (candidate) {
    auto r = execute_program(*candidate);
    if (!r.ok() || r.value() != chunk) {
      throw CandidateMismatch("candidate for chunk " + std::to_string(index) + " does not reproduce it");
    }
    plan.program_bits = program_bit_cost(*candidate, m);
    plan.use_program = plan.program_bits < plan.raw_bits;
  }
  plan.body_bits = 1.0 + (plan.use_program ? plan.program_bits : plan.raw_bits);
  return plan;
}

void check_inputs(const std::vector<ByteSeq>& chunks, const std::vector<std::optional<Program>>& candidates) {
  if (!candidates.empty() && candidates.size() != chunks.size()) {
    throw std::invalid_argument("candidate list must be empty or match the chunks");
  }
  for (const auto& c : chunks) {
    if (c.empty()) throw std::invalid_argument("container chunks must be non-empty");
  }
}

const std::optional<Program>& candidate_at(const std::vector<std::optional<Program>>& c, std::size_t i) {
  static const std::optional<Program> none;
  return c.empty() ? none : c[i];
}

std::uint64_t max_len(const std::vector<ByteSeq>& chunks) {
  std::uint64_t n = 1;
  for (const auto& c : chunks) n = std::max<std::uint64_t>(n, c.size());
  return n;
}

void put_model(std::vector<std::uint8_t>& out, const PriorCostModel& m) {
  io::put_be(out, m.num_functions, 1);
  io::put_be(out, m.byte_size, 1);
  io::put_be(out, m.max_num_repetitions, 2);
  io::put_be(out, m.max_list_len, 2);
  io::put_be(out, m.max_step, 2);
}

std::uint32_t crc_chunks(const std::vector<ByteSeq>& chunks) {
  uLong crc = crc32(0L, Z_NULL, 0);
  for (const auto& c : chunks) crc = crc32(crc, c.data(), static_cast<uInt>(c.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<ChunkPlan> plan_container_serial(const std::vector<ByteSeq>& chunks,
                                             const std::vector<std::optional<Program>>& candidates,
                                             const PriorCostModel& m, std::uint64_t max_chunk_len) {
  check_inputs(chunks, candidates);
  std::vector<ChunkPlan> plans;
  plans.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    plans.push_back(plan_chunk(chunks[i], candidate_at(candidates, i), m, max_chunk_len, i));
  }
  return plans;
}

std::vector<ChunkPlan> plan_container_parallel(const std::vector<ByteSeq>& chunks,
                                               const std::vector<std::optional<Program>>& candidates,
                                               const PriorCostModel& m, std::uint64_t max_chunk_len) {
  check_inputs(chunks, candidates);
  std::vector<ChunkPlan> plans(chunks.size());
  std::vector<std::string> errors(chunks.size());
  const auto n = static_cast<std::int64_t>(chunks.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(i);
    try {
      plans[k] = plan_chunk(chunks[k], candidate_at(candidates, k), m, max_chunk_len, k);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw CandidateMismatch(e);
  }
  return plans;
}

ContainerResult compress_container(const std::vector<ByteSeq>& chunks,
                                   const std::vector<std::optional<Program>>& candidates,
                                   const PriorCostModel& m) {
  const std::uint64_t max_chunk_len = max_len(chunks);
  ContainerResult res;
  res.plans = plan_container_parallel(chunks, candidates, m, max_chunk_len);

  BitWriter w;
  ArithmeticEncoder enc(w);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (res.plans[i].use_program) {
      enc.encode_uniform(1, 2);
      encode_program_into(*candidate_at(candidates, i), m, enc);
    } else {
      enc.encode_uniform(0, 2);
      enc.encode_uniform(chunks[i].size() - 1, max_chunk_len);
      for (auto b : chunks[i]) enc.encode_uniform(b, 256);
    }
  }
  enc.finish();
  Bitstream body = std::move(w).finish();

  auto& out = res.bytes;
  out.assign(kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_model(out, m);
  io::put_be(out, chunks.size(), 4);
  io::put_be(out, max_chunk_len, 4);
  io::put_be(out, crc_chunks(chunks), 4);
  io::put_be(out, body.bit_length, 8);
  res.header_bits = 8 * out.size();
  out.insert(out.end(), body.bytes.begin(), body.bytes.end());
  res.body_bits = body.bit_length;
  return res;
}

std::vector<ByteSeq> decompress_container(std::span<const std::uint8_t> bytes, const PriorCostModel& m) {
  io::ByteCursor c(bytes);
  std::vector<ByteSeq> chunks;
  try {
    auto magic = c.take(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw DecodeError("not a container stream");
    if (c.get_be(1) != kVersion) throw DecodeError("unsupported container version");
    std::vector<std::uint8_t> expect_model;
    put_model(expect_model, m);
    auto model = c.take(expect_model.size());
    if (!std::equal(model.begin(), model.end(), expect_model.begin())) {
      throw DecodeError("container was written with a different prior");
    }
    const auto count = c.get_be(4);
    const auto max_chunk_len = c.get_be(4);
    const auto crc = static_cast<std::uint32_t>(c.get_be(4));
    Bitstream body;
    body.bit_length = c.get_be(8);
    auto payload = c.take(c.remaining());
    if ((body.bit_length + 7) / 8 != payload.size()) throw DecodeError("container body length mismatch");
    if (count > 0 && (body.bit_length == 0 || max_chunk_len == 0)) throw DecodeError("empty container body");
    if (const auto tail = body.bit_length % 8; tail && (payload.back() & (0xFFu >> tail))) {
      throw DecodeError("nonzero padding after container body");
    }
    body.bytes.assign(payload.begin(), payload.end());

    BitReader r(body);
    ArithmeticDecoder dec(r);
    for (std::uint64_t i = 0; i < count; ++i) {
      if (dec.decode_uniform(2) == 1) {
        Program p = decode_program_from(dec, m);
        auto out = execute_program(p);
        if (!out.ok() || out.value().empty()) throw DecodeError("decoded program does not execute");
        chunks.push_back(out.value());
      } else {
        auto len = dec.decode_uniform(max_chunk_len) + 1;
        ByteSeq chunk(len);
        for (auto& b : chunk) b = static_cast<std::uint8_t>(dec.decode_uniform(256));
        chunks.push_back(std::move(chunk));
      }
      if (dec.overrun() > static_cast<std::uint64_t>(kCoderBits)) throw DecodeError("container body truncated");
    }
    if (crc_chunks(chunks) != crc) throw DecodeError("container checksum mismatch");
    if (max_len(chunks) != max_chunk_len) throw DecodeError("container length bound does not match its chunks");
  } catch (const std::out_of_range&) {
    throw DecodeError("truncated container header");
  } catch (const CostError& e) {
    throw DecodeError(e.what());
  }
  return chunks;
}

}  // namespace kt
