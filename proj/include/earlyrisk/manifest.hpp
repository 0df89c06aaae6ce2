#pragma once

// Build manifest: a small text ledger of what each pipeline stage last
// produced — the hash of the configuration slice it saw, the hashes of the
// inputs it read, and the hashes of the outputs it wrote. A stage re-run
// compares the current state of the world against its entry and skips the
// work when nothing changed; a downstream stage uses the upstream entry to
// detect artifacts that no longer match what is on disk.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "earlyrisk/io.hpp"

namespace earlyrisk::manifest {

inline constexpr std::string_view kMagic = "earlyrisk-manifest v1";

struct HashedPath {
  std::uint64_t hash = 0;
  std::string path;  // relative to the artifacts root's parent run dir

  friend bool operator==(const HashedPath&, const HashedPath&) = default;
};

struct StageEntry {
  std::string stage;
  std::uint64_t config_hash = 0;
  std::vector<HashedPath> inputs;
  std::vector<HashedPath> outputs;

  friend bool operator==(const StageEntry&, const StageEntry&) = default;
};

struct Manifest {
  std::map<std::string, StageEntry> stages;

  const StageEntry* find(std::string_view stage) const {
    const auto it = stages.find(std::string(stage));
    return it == stages.end() ? nullptr : &it->second;
  }

  void put(StageEntry entry) {
    stages.insert_or_assign(entry.stage, std::move(entry));
  }
};

inline std::string serialize(const Manifest& m) {
  std::string out(kMagic);
  out += '\n';
  for (const auto& [name, entry] : m.stages) {
    out += '\n';
    out += "stage ";
    out += name;
    out += '\n';
    out += "config ";
    out += hash_to_hex(entry.config_hash);
    out += '\n';
    for (const auto& in : entry.inputs) {
      out += "input ";
      out += hash_to_hex(in.hash);
      out += ' ';
      out += in.path;
      out += '\n';
    }
    for (const auto& o : entry.outputs) {
      out += "output ";
      out += hash_to_hex(o.hash);
      out += ' ';
      out += o.path;
      out += '\n';
    }
  }
  return out;
}

inline Manifest parse(std::string_view text, std::string_view origin) {
  Manifest m;
  std::size_t pos = 0;
  int lineno = 0;
  StageEntry current;
  bool open = false;
  auto fail = [&](const std::string& why) {
    throw DataError(std::string(origin) + ":" + std::to_string(lineno) +
                    ": " + why);
  };
  auto flush = [&] {
    if (!open) return;
    if (m.stages.count(current.stage) != 0) {
      fail("duplicate stage '" + current.stage + "'");
    }
    m.stages.emplace(current.stage, std::move(current));
    current = StageEntry{};
    open = false;
  };
  bool saw_magic = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(
        text.data() + pos,
        (nl == std::string_view::npos ? text.size() : nl) - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!saw_magic) {
      if (line != kMagic) fail("unrecognized manifest header");
      saw_magic = true;
      continue;
    }
    const std::size_t sp = line.find(' ');
    const std::string_view word = line.substr(0, sp);
    const std::string_view rest =
        sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    if (word == "stage") {
      flush();
      if (rest.empty()) fail("stage line without a name");
      current.stage = std::string(rest);
      open = true;
    } else if (word == "config") {
      if (!open) fail("config line outside a stage block");
      current.config_hash = hex_to_hash(rest);
    } else if (word == "input" || word == "output") {
      if (!open) fail("entry line outside a stage block");
      const std::size_t sp2 = rest.find(' ');
      if (sp2 == std::string_view::npos || sp2 + 1 >= rest.size()) {
        fail("expected '<hash> <path>'");
      }
      HashedPath hp;
      hp.hash = hex_to_hash(rest.substr(0, sp2));
      hp.path = std::string(rest.substr(sp2 + 1));
      (word == "input" ? current.inputs : current.outputs)
          .push_back(std::move(hp));
    } else {
      fail("unrecognized line '" + std::string(line) + "'");
    }
  }
  if (!saw_magic && lineno > 0 && !text.empty()) {
    throw DataError(std::string(origin) + ": unrecognized manifest header");
  }
  flush();
  return m;
}

// Loads the manifest at `path`; a missing file is an empty manifest, since
// a fresh artifacts directory has no history yet.
inline Manifest load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return Manifest{};
  return parse(read_text_file(path), path.string());
}

inline void save(const std::filesystem::path& path, const Manifest& m) {
  write_text_file(path, serialize(m));
}

}  // namespace earlyrisk::manifest
