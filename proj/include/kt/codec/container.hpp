#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kt/codec/prior.hpp"
#include "kt/dsl.hpp"

namespace kt {

/// How one chunk was stored and what it cost inside the coded body.
struct ChunkPlan {
  bool use_program = false;
  double program_bits = 0.0;  // prior cost of the candidate, 0 if none
  double raw_bits = 0.0;      // length prefix + 8 bits per byte
  double body_bits = 0.0;     // 1 flag bit + the cheaper of the two
};

struct ContainerResult {
  std::vector<std::uint8_t> bytes;  // header + arithmetic-coded body
  std::vector<ChunkPlan> plans;
  std::uint64_t header_bits = 0;
  std::uint64_t body_bits = 0;
};

/// Compresses each chunk as either its candidate program or raw literals,
/// whichever is cheaper, in one arithmetic-coded body. Throws
/// CandidateMismatch if a candidate does not execute to its chunk.
/// `candidates` may be empty (no programs) or match `chunks` in size.
ContainerResult compress_container(const std::vector<ByteSeq>& chunks,
                                   const std::vector<std::optional<Program>>& candidates,
                                   const PriorCostModel& m = {});

/// Same decisions computed one chunk at a time; reference for the parallel planner.
std::vector<ChunkPlan> plan_container_serial(const std::vector<ByteSeq>& chunks,
                                             const std::vector<std::optional<Program>>& candidates,
                                             const PriorCostModel& m, std::uint64_t max_chunk_len);
std::vector<ChunkPlan> plan_container_parallel(const std::vector<ByteSeq>& chunks,
                                               const std::vector<std::optional<Program>>& candidates,
                                               const PriorCostModel& m, std::uint64_t max_chunk_len);

/// Restores the chunks byte-exactly; throws DecodeError on any corruption.
std::vector<ByteSeq> decompress_container(std::span<const std::uint8_t> bytes, const PriorCostModel& m = {});

inline constexpr std::size_t kContainerHeaderBytes = 4 + 1 + 8 + 4 + 4 + 4 + 8;

}  // namespace kt
