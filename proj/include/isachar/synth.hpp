#pragma once

// Synthetic corpora with known ground truth.
//
// Endianness corpora: each ISA's files are a stream of small signed 16- and
// 32-bit integers serialized in the class byte order, interleaved with runs
// of uniformly random filler bytes (about half of all bytes).
//
// Fixed-width corpora: back-to-back instructions of w bytes. Every ISA fixes
// one or more opcode bytes (position and value) per instruction; the other
// bytes are operands. Instructions of 4 bytes or more end with a small 16-bit
// immediate in the corpus byte order. Variable ISAs draw each instruction
// from a per-ISA opcode table whose entries are 1 to 6 bytes long.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "isachar/corpus.hpp"
#include "isachar/error.hpp"
#include "isachar/labels.hpp"
#include "isachar/rng.hpp"

namespace isachar {

namespace detail {

inline constexpr std::uint64_t kEndianStream = 1;
inline constexpr std::uint64_t kFixedStream = 2;
inline constexpr std::uint64_t kVariableStream = 3;

inline void append_value(ByteBuffer& out, std::uint32_t value, int width_bytes, Endianness order) {
  for (int b = 0; b < width_bytes; ++b) {
    int shift = order == Endianness::BigEndian ? 8 * (width_bytes - 1 - b) : 8 * b;
    out.push_back(static_cast<std::uint8_t>(value >> shift));
  }
}

/// Signed value whose magnitude is geometric: P(|v| = m) = p (1 - p)^m.
inline std::int32_t small_signed(Rng& rng, double p_zero, double p_negative) {
  std::int32_t magnitude = 0;
  while (magnitude < 1 << 14 && !rng.chance(p_zero)) ++magnitude;
  return rng.chance(p_negative) ? -magnitude : magnitude;
}

inline std::string numbered_file(const std::string& isa, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return isa + "/" + isa + "_" + buf + ".bin";
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace detail

struct EndianSynthParams {
  std::size_t isa_count_per_class = 4;
  std::size_t files_per_isa = 10;
  std::size_t file_len = 65536;
  std::uint64_t seed = 0;
};

inline ByteBuffer synth_endian_file(Endianness order, std::size_t isa_index, std::size_t file_index,
                                    std::size_t file_len, std::uint64_t seed) {
  const std::uint64_t cls = order == Endianness::BigEndian ? 1 : 0;
  Rng isa_rng(seed, {detail::kEndianStream, cls, isa_index, 0});
  const double p16 = 0.3 + 0.4 * isa_rng.uniform();
  const double p_zero = 0.4 + 0.2 * isa_rng.uniform();
  const double p_negative = 0.3 + 0.4 * isa_rng.uniform();

  Rng rng(seed, {detail::kEndianStream, cls, isa_index, file_index + 1});
  ByteBuffer out;
  out.reserve(file_len + 8);
  while (out.size() < file_len) {
    if (rng.chance(0.5)) {
      int width = rng.chance(p16) ? 2 : 4;
      auto v = static_cast<std::uint32_t>(detail::small_signed(rng, p_zero, p_negative));
      detail::append_value(out, v, width, order);
    } else {
      auto run = 1 + rng.below(5);
      for (std::uint64_t j = 0; j < run; ++j) out.push_back(rng.byte());
    }
  }
  out.resize(file_len);
  return out;
}

/// ISAs are named synthLE_<i> and synthBE_<i>.
inline CorpusManifest generate_synthetic_endian(const EndianSynthParams& p) {
  detail::require(p.isa_count_per_class >= 1, "isa_count_per_class must be >= 1");
  detail::require(p.files_per_isa >= 1, "files_per_isa must be >= 1");
  detail::require(p.file_len >= 1024, "file_len must be >= 1024");

  CorpusManifest manifest;
  for (Endianness order : {Endianness::LittleEndian, Endianness::BigEndian}) {
    for (std::size_t i = 0; i < p.isa_count_per_class; ++i) {
      std::string isa = "synth" + std::string(to_string(order)) + "_" + std::to_string(i);
      manifest.registry[isa] = IsaLabel{isa, order, InstructionSizeSpec::unknown(), std::nullopt};
      for (std::size_t f = 0; f < p.files_per_isa; ++f) {
        manifest.samples.push_back({detail::numbered_file(isa, f), isa,
                                    std::make_shared<const ByteBuffer>(
                                        synth_endian_file(order, i, f, p.file_len, p.seed))});
      }
    }
  }
  return manifest;
}

struct FixedWidthSynthParams {
  std::vector<int> widths_bits = {16, 32, 64};
  std::size_t isas_per_width = 3;
  std::size_t files_per_isa = 10;
  std::size_t file_len = 32768;
  std::size_t variable_isas = 5;
  std::uint64_t seed = 0;
  Endianness byte_order = Endianness::LittleEndian;
};

/// Per-ISA encoding of a fixed-width synthetic ISA.
struct FixedWidthIsaLayout {
  int width_bytes = 0;
  std::vector<int> opcode_positions;
  std::vector<std::uint8_t> opcode_values;
  bool has_immediate = false;
  double operand_zero = 0.0;
};

inline FixedWidthIsaLayout fixed_width_layout(int width_bits, std::size_t isa_index, std::uint64_t seed) {
  Rng rng(seed, {detail::kFixedStream, static_cast<std::uint64_t>(width_bits), isa_index, 0});
  FixedWidthIsaLayout layout;
  layout.width_bytes = width_bits / 8;
  layout.has_immediate = layout.width_bytes >= 4;
  const int opcode_span = layout.has_immediate ? layout.width_bytes - 2 : layout.width_bytes;
  const int max_opcodes = std::max(1, opcode_span / 4);
  const int count = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_opcodes)));

  std::vector<int> slots(static_cast<std::size_t>(opcode_span));
  for (int i = 0; i < opcode_span; ++i) slots[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(opcode_span - i)));
    std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(j)]);
    layout.opcode_positions.push_back(slots[static_cast<std::size_t>(i)]);
    // Opcode bytes sit well above the operand mean so the per-position
    // structure is visible to a linear correlation.
    layout.opcode_values.push_back(static_cast<std::uint8_t>(0xc0 + rng.below(0x40)));
  }
  std::sort(layout.opcode_positions.begin(), layout.opcode_positions.end());
  layout.operand_zero = 0.3 + 0.3 * rng.uniform();
  return layout;
}

inline ByteBuffer synth_fixed_width_file(int width_bits, std::size_t isa_index, std::size_t file_index,
                                         std::size_t file_len, std::uint64_t seed, Endianness order) {
  const FixedWidthIsaLayout layout = fixed_width_layout(width_bits, isa_index, seed);
  Rng rng(seed, {detail::kFixedStream, static_cast<std::uint64_t>(width_bits), isa_index, file_index + 1});
  const auto w = static_cast<std::size_t>(layout.width_bytes);
  ByteBuffer out;
  out.reserve(file_len + w);
  std::vector<std::uint8_t> insn(w);
  while (out.size() < file_len) {
    for (auto& b : insn) b = rng.chance(layout.operand_zero) ? 0 : rng.byte();
    if (layout.has_immediate) {
      auto imm = static_cast<std::uint32_t>(detail::small_signed(rng, 0.5, 0.3));
      ByteBuffer tmp;
      detail::append_value(tmp, imm, 2, order);
      insn[w - 2] = tmp[0];
      insn[w - 1] = tmp[1];
    }
    for (std::size_t k = 0; k < layout.opcode_positions.size(); ++k) {
      insn[static_cast<std::size_t>(layout.opcode_positions[k])] = layout.opcode_values[k];
    }
    out.insert(out.end(), insn.begin(), insn.end());
  }
  out.resize(file_len);
  return out;
}

inline ByteBuffer synth_variable_file(std::size_t isa_index, std::size_t file_index, std::size_t file_len,
                                      std::uint64_t seed) {
  struct Entry {
    std::uint8_t opcode;
    std::size_t length;
  };
  Rng isa_rng(seed, {detail::kVariableStream, isa_index, 0});
  std::vector<Entry> table(24);
  for (auto& e : table) e = {isa_rng.byte(), static_cast<std::size_t>(1 + isa_rng.below(6))};
  const double operand_zero = 0.2 + 0.3 * isa_rng.uniform();

  Rng rng(seed, {detail::kVariableStream, isa_index, file_index + 1});
  ByteBuffer out;
  out.reserve(file_len + 6);
  while (out.size() < file_len) {
    const Entry& e = table[rng.below(table.size())];
    out.push_back(e.opcode);
    for (std::size_t j = 1; j < e.length; ++j) out.push_back(rng.chance(operand_zero) ? 0 : rng.byte());
  }
  out.resize(file_len);
  return out;
}

/// Fixed ISAs are named synthFW<bits>_<i>, variable ones synthVAR_<i>.
inline CorpusManifest generate_synthetic_fixedwidth(const FixedWidthSynthParams& p) {
  detail::require(!p.widths_bits.empty() || p.variable_isas > 0, "no ISAs requested");
  detail::require(p.files_per_isa >= 1, "files_per_isa must be >= 1");
  int max_width = 8;
  for (int w : p.widths_bits) {
    detail::require(w > 0 && w % 8 == 0, "widths must be positive multiples of 8");
    max_width = std::max(max_width, w);
  }
  if (!p.widths_bits.empty()) detail::require(p.isas_per_width >= 1, "isas_per_width must be >= 1");
  detail::require(p.file_len >= 64 * static_cast<std::size_t>(max_width / 8),
                  "file_len must be at least 64 instructions of the widest width");

  CorpusManifest manifest;
  for (int w : p.widths_bits) {
    for (std::size_t i = 0; i < p.isas_per_width; ++i) {
      std::string isa = "synthFW" + std::to_string(w) + "_" + std::to_string(i);
      manifest.registry[isa] = IsaLabel{isa, p.byte_order, InstructionSizeSpec::fixed(w), std::nullopt};
      for (std::size_t f = 0; f < p.files_per_isa; ++f) {
        manifest.samples.push_back(
            {detail::numbered_file(isa, f), isa,
             std::make_shared<const ByteBuffer>(synth_fixed_width_file(w, i, f, p.file_len, p.seed, p.byte_order))});
      }
    }
  }
  for (std::size_t i = 0; i < p.variable_isas; ++i) {
    std::string isa = "synthVAR_" + std::to_string(i);
    manifest.registry[isa] = IsaLabel{isa, p.byte_order, InstructionSizeSpec::variable(8, 48), std::nullopt};
    for (std::size_t f = 0; f < p.files_per_isa; ++f) {
      manifest.samples.push_back({detail::numbered_file(isa, f), isa,
                                  std::make_shared<const ByteBuffer>(synth_variable_file(i, f, p.file_len, p.seed))});
    }
  }
  return manifest;
}

}  // namespace isachar
