#pragma once

// ISA ground-truth labels and the CSV registry format:
//
//   isa_name,endianness,inst_size_kind,inst_size_bits,inst_size_min,inst_size_max,word_size_bits
//
// endianness is one of LE, BE, BI, NA; inst_size_kind is fixed, variable or
// unknown (an empty cell means unknown). Blank lines and lines starting with
// '#' are ignored.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isachar/error.hpp"

namespace isachar {

enum class Endianness { LittleEndian, BigEndian, BiEndian, Unknown };

inline std::string_view to_string(Endianness e) {
  switch (e) {
    case Endianness::LittleEndian: return "LE";
    case Endianness::BigEndian: return "BE";
    case Endianness::BiEndian: return "BI";
    case Endianness::Unknown: return "NA";
  }
  return "NA";
}

inline std::optional<Endianness> parse_endianness(std::string_view s) {
  if (s == "LE") return Endianness::LittleEndian;
  if (s == "BE") return Endianness::BigEndian;
  if (s == "BI") return Endianness::BiEndian;
  if (s == "NA") return Endianness::Unknown;
  return std::nullopt;
}

enum class SizeKind { Fixed, Variable, Unknown };

inline std::string_view to_string(SizeKind k) {
  switch (k) {
    case SizeKind::Fixed: return "fixed";
    case SizeKind::Variable: return "variable";
    case SizeKind::Unknown: return "unknown";
  }
  return "unknown";
}

struct InstructionSizeSpec {
  SizeKind kind = SizeKind::Unknown;
  std::optional<int> fixed_bits;                         // iff kind == Fixed
  std::optional<std::pair<int, int>> variable_range;     // only when kind == Variable

  static InstructionSizeSpec fixed(int bits) { return {SizeKind::Fixed, bits, std::nullopt}; }
  static InstructionSizeSpec variable() { return {SizeKind::Variable, std::nullopt, std::nullopt}; }
  static InstructionSizeSpec variable(int min_bits, int max_bits) {
    return {SizeKind::Variable, std::nullopt, std::make_pair(min_bits, max_bits)};
  }
  static InstructionSizeSpec unknown() { return {}; }

  bool operator==(const InstructionSizeSpec&) const = default;
};

struct IsaLabel {
  std::string isa_name;
  Endianness endianness = Endianness::Unknown;
  InstructionSizeSpec inst_size;
  std::optional<int> word_size_bits;

  bool operator==(const IsaLabel&) const = default;
};

using LabelRegistry = std::map<std::string, IsaLabel>;

inline constexpr std::string_view kLabelHeader =
    "isa_name,endianness,inst_size_kind,inst_size_bits,inst_size_min,inst_size_max,word_size_bits";

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<int> parse_positive_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value <= 0) return std::nullopt;
  return value;
}

}  // namespace detail

/// Parses one data row. `line_no` is only used for error messages.
inline IsaLabel parse_label_row(std::string_view row, std::size_t line_no) {
  auto fail = [line_no](const std::string& reason) {
    return Error(ErrorCode::MalformedLabelFile, "line " + std::to_string(line_no) + ": " + reason);
  };
  auto cells = detail::split(row, ',');
  if (cells.size() != 7) {
    throw fail("expected 7 columns, got " + std::to_string(cells.size()));
  }
  IsaLabel label;
  label.isa_name = std::string(cells[0]);
  if (label.isa_name.empty()) throw fail("empty isa_name");

  auto endian = parse_endianness(cells[1]);
  if (!endian) throw fail("endianness must be one of LE, BE, BI, NA (got '" + std::string(cells[1]) + "')");
  label.endianness = *endian;

  auto optional_int = [&](std::string_view cell, const char* column) -> std::optional<int> {
    if (cell.empty()) return std::nullopt;
    auto v = detail::parse_positive_int(cell);
    if (!v) throw fail(std::string(column) + " is not a positive integer ('" + std::string(cell) + "')");
    return v;
  };
  auto bits = optional_int(cells[3], "inst_size_bits");
  auto min_bits = optional_int(cells[4], "inst_size_min");
  auto max_bits = optional_int(cells[5], "inst_size_max");
  label.word_size_bits = optional_int(cells[6], "word_size_bits");

  std::string_view kind = cells[2];
  if (kind == "fixed") {
    if (!bits) throw fail("fixed instruction size requires inst_size_bits");
    if (*bits % 8 != 0) throw fail("inst_size_bits must be a multiple of 8");
    if (min_bits || max_bits) throw fail("inst_size_min/max only apply to variable sizes");
    label.inst_size = InstructionSizeSpec::fixed(*bits);
  } else if (kind == "variable") {
    if (bits) throw fail("variable instruction size must not set inst_size_bits");
    if (min_bits.has_value() != max_bits.has_value()) throw fail("inst_size_min and inst_size_max go together");
    if (min_bits) {
      if (*min_bits > *max_bits) throw fail("inst_size_min exceeds inst_size_max");
      label.inst_size = InstructionSizeSpec::variable(*min_bits, *max_bits);
    } else {
      label.inst_size = InstructionSizeSpec::variable();
    }
  } else if (kind == "unknown" || kind.empty()) {
    if (bits || min_bits || max_bits) throw fail("unknown instruction size must leave size columns empty");
    label.inst_size = InstructionSizeSpec::unknown();
  } else {
    throw fail("inst_size_kind must be fixed, variable or unknown (got '" + std::string(kind) + "')");
  }
  return label;
}

inline LabelRegistry parse_label_registry(std::istream& in) {
  LabelRegistry registry;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = detail::trim(line);
    if (row.empty() || row.front() == '#') continue;
    if (!seen_header) {
      if (row != kLabelHeader) {
        throw Error(ErrorCode::MalformedLabelFile,
                    "line " + std::to_string(line_no) + ": expected header '" + std::string(kLabelHeader) + "'");
      }
      seen_header = true;
      continue;
    }
    IsaLabel label = parse_label_row(row, line_no);
    std::string name = label.isa_name;
    if (!registry.emplace(name, std::move(label)).second) {
      throw Error(ErrorCode::DuplicateIsa, name + " (line " + std::to_string(line_no) + ")");
    }
  }
  if (!seen_header) throw Error(ErrorCode::MalformedLabelFile, "missing header");
  return registry;
}

inline LabelRegistry parse_label_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open label file " + path.string());
  return parse_label_registry(in);
}

inline void write_label_row(std::ostream& out, const IsaLabel& label) {
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  out << label.isa_name << ',' << to_string(label.endianness) << ',' << to_string(label.inst_size.kind) << ','
      << opt(label.inst_size.fixed_bits) << ',';
  if (label.inst_size.variable_range) {
    out << label.inst_size.variable_range->first << ',' << label.inst_size.variable_range->second;
  } else {
    out << ',';
  }
  out << ',' << opt(label.word_size_bits) << '\n';
}

inline void write_label_registry(std::ostream& out, const LabelRegistry& registry) {
  out << kLabelHeader << '\n';
  for (const auto& [_, label] : registry) write_label_row(out, label);
}

}  // namespace isachar
