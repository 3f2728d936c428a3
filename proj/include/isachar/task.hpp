#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isachar/corpus.hpp"
#include "isachar/error.hpp"
#include "isachar/labels.hpp"

namespace isachar {

/// Classification targets. Names on the command line: endianness, isvar, fixedwidth.
enum class Task { Endianness, FixedVsVariable, FixedWidth };

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::Endianness: return "endianness";
    case Task::FixedVsVariable: return "isvar";
    case Task::FixedWidth: return "fixedwidth";
  }
  return "endianness";
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "endianness") return Task::Endianness;
  if (s == "isvar") return Task::FixedVsVariable;
  if (s == "fixedwidth") return Task::FixedWidth;
  return std::nullopt;
}

/// Class label of an ISA for a task, or nullopt when the ISA does not take
/// part in it (BI/NA endianness, unknown size, variable size for fixedwidth).
inline std::optional<std::string> task_label(const IsaLabel& label, Task task) {
  switch (task) {
    case Task::Endianness:
      if (label.endianness == Endianness::LittleEndian || label.endianness == Endianness::BigEndian) {
        return std::string(to_string(label.endianness));
      }
      return std::nullopt;
    case Task::FixedVsVariable:
      if (label.inst_size.kind == SizeKind::Unknown) return std::nullopt;
      return std::string(to_string(label.inst_size.kind));
    case Task::FixedWidth:
      if (label.inst_size.kind != SizeKind::Fixed) return std::nullopt;
      return std::to_string(*label.inst_size.fixed_bits);
  }
  return std::nullopt;
}

/// Indices of the manifest samples eligible for `task`, in manifest order.
inline std::vector<std::size_t> eligible_samples(const CorpusManifest& manifest, Task task) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    if (task_label(manifest.label_of(i), task)) out.push_back(i);
  }
  return out;
}

inline CorpusManifest filter_for_task(const CorpusManifest& manifest, Task task) {
  CorpusManifest out;
  out.registry = manifest.registry;
  out.per_isa_cap = manifest.per_isa_cap;
  out.warnings = manifest.warnings;
  for (std::size_t i : eligible_samples(manifest, task)) out.samples.push_back(manifest.samples[i]);
  return out;
}

}  // namespace isachar
