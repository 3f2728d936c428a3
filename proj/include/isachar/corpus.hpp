#pragma once

// Labeled binary corpora. On disk a corpus is `root/<isa_name>/<file>`, one
// directory per ISA holding raw binaries; a single file per ISA is valid.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "isachar/error.hpp"
#include "isachar/labels.hpp"

namespace isachar {

using ByteBuffer = std::vector<std::uint8_t>;

/// Raw content of one binary plus the ISA it belongs to (the LOGOCV group key).
struct BinarySample {
  std::shared_ptr<const ByteBuffer> data;
  std::string isa_name;
  std::string source_path;

  BinarySample() : data(std::make_shared<const ByteBuffer>()) {}
  explicit BinarySample(ByteBuffer bytes, std::string isa = {}, std::string path = {})
      : data(std::make_shared<const ByteBuffer>(std::move(bytes))),
        isa_name(std::move(isa)),
        source_path(std::move(path)) {}
  BinarySample(std::shared_ptr<const ByteBuffer> bytes, std::string isa, std::string path)
      : data(std::move(bytes)), isa_name(std::move(isa)), source_path(std::move(path)) {}

  std::span<const std::uint8_t> bytes() const { return {data->data(), data->size()}; }
  std::size_t size() const { return data->size(); }
};

inline ByteBuffer read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return ByteBuffer(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// A manifest entry. `data` is null until the file is read; synthetic
/// corpora carry their bytes in memory from the start.
struct SampleRef {
  std::string source_path;
  std::string isa_name;
  std::shared_ptr<const ByteBuffer> data;
};

struct CorpusManifest {
  std::vector<SampleRef> samples;
  LabelRegistry registry;
  std::optional<std::size_t> per_isa_cap;
  std::vector<std::string> warnings;

  const IsaLabel& label_of(std::size_t i) const { return registry.at(samples.at(i).isa_name); }

  BinarySample load(std::size_t i) const {
    const SampleRef& ref = samples.at(i);
    if (ref.data) return BinarySample(ref.data, ref.isa_name, ref.source_path);
    return BinarySample(std::make_shared<const ByteBuffer>(read_file_bytes(ref.source_path)), ref.isa_name,
                        ref.source_path);
  }

  /// Reads every file into memory so later passes do not touch the disk.
  void load_all() {
    for (auto& ref : samples) {
      if (!ref.data) ref.data = std::make_shared<const ByteBuffer>(read_file_bytes(ref.source_path));
    }
  }

  std::map<std::string, std::size_t> counts_per_isa() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : samples) ++counts[s.isa_name];
    return counts;
  }

  std::size_t group_count() const { return counts_per_isa().size(); }
};

/// Builds a manifest from `root/<isa>/<file>`. Directories whose name is not
/// in the registry are skipped and reported in `warnings`. With a cap, the
/// lexicographically first `cap` paths of each ISA are kept.
inline CorpusManifest scan_corpus(const std::filesystem::path& root, const LabelRegistry& registry,
                                  std::optional<std::size_t> per_isa_cap = std::nullopt) {
  namespace fs = std::filesystem;
  if (per_isa_cap && *per_isa_cap == 0) throw Error(ErrorCode::InvalidArgument, "per-ISA cap must be positive");
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::Io, "corpus root is not a directory: " + root.string());

  CorpusManifest manifest;
  manifest.registry = registry;
  manifest.per_isa_cap = per_isa_cap;

  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());

  for (const auto& dir : dirs) {
    std::string isa = dir.filename().string();
    if (!registry.contains(isa)) {
      manifest.warnings.push_back("UnknownIsaDirectory: " + isa);
      continue;
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (per_isa_cap && files.size() > *per_isa_cap) files.resize(*per_isa_cap);
    for (auto& f : files) manifest.samples.push_back({std::move(f), isa, nullptr});
  }
  if (manifest.samples.empty()) throw Error(ErrorCode::EmptyCorpus, "no labeled files under " + root.string());
  return manifest;
}

/// Writes an in-memory corpus as `out/<isa>/<file>` plus `out/labels.csv`.
/// Sample paths in the returned manifest point at the written files.
inline CorpusManifest write_corpus(const CorpusManifest& manifest, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  CorpusManifest written = manifest;
  fs::create_directories(out);
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    const SampleRef& ref = manifest.samples[i];
    BinarySample sample = manifest.load(i);
    fs::path dir = out / ref.isa_name;
    fs::create_directories(dir);
    fs::path file = dir / fs::path(ref.source_path).filename();
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + file.string());
    f.write(reinterpret_cast<const char*>(sample.data->data()), static_cast<std::streamsize>(sample.size()));
    if (!f) throw Error(ErrorCode::Io, "short write to " + file.string());
    written.samples[i].source_path = file.string();
  }
  std::ofstream labels(out / "labels.csv", std::ios::trunc);
  if (!labels) throw Error(ErrorCode::Io, "cannot write labels.csv");
  write_label_registry(labels, manifest.registry);
  return written;
}

}  // namespace isachar
