/*
 * Copyright 2026 The audiodream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "audiodream/clip.hpp"
#include "audiodream/error.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/resample.hpp"
#include "audiodream/trainer.hpp"
#include "audiodream/wav.hpp"

namespace audiodream {

class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : Error("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline std::optional<int> genre_index(std::string_view name) {
  for (std::size_t i = 0; i < kGenres.size(); ++i) {
    if (name == kGenres[i]) return static_cast<int>(i);
  }
  return std::nullopt;
}

struct ManifestRecord {
  std::filesystem::path path;
  int genre = 0;
};

struct Manifest {
  std::vector<ManifestRecord> records;
};

/// Parses "path,genre" CSV. Relative paths resolve against `base_dir`. The
/// genre is the text after the last comma, so paths may contain commas;
/// a path may also be double-quoted.
inline Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  if (!std::getline(in, line)) throw ManifestError(1, "empty manifest");
  ++lineno;
  trim_cr(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "path,genre") throw ManifestError(lineno, "header must be 'path,genre'");

  Manifest m;
  std::set<std::filesystem::path> seen;
  while (std::getline(in, line)) {
    ++lineno;
    trim_cr(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ManifestError(lineno, "expected 'path,genre'");
    std::string path = line.substr(0, comma);
    const std::string genre = line.substr(comma + 1);
    if (path.size() >= 2 && path.front() == '"' && path.back() == '"') {
      std::string unq;
      for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        unq += path[i];
        if (path[i] == '"' && i + 2 < path.size() && path[i + 1] == '"') ++i;
      }
      path = unq;
    }
    if (path.empty()) throw ManifestError(lineno, "empty path");
    const auto label = genre_index(genre);
    if (!label) throw ManifestError(lineno, "unknown genre '" + genre + "'");
    std::filesystem::path p(path);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    p = p.lexically_normal();
    if (!seen.insert(p).second) throw ManifestError(lineno, "duplicate path '" + path + "'");
    m.records.push_back({p, *label});
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

/// decode -> mono -> 8 kHz -> clips
inline std::vector<AudioClip> clips_from_wav(const std::vector<std::uint8_t>& bytes) {
  return segment(resample_to_8k(to_mono(wav_decode(bytes))));
}

struct SkippedFile {
  std::filesystem::path path;
  std::string reason;
};

struct Dataset {
  std::vector<AudioClip> clips;
  std::vector<int> labels;
  std::array<std::size_t, 5> per_genre{};
  std::vector<SkippedFile> skipped;

  DatasetView view() const { return view_of(clips, labels); }
};

/// Loads every manifest entry into labeled clips. Files that fail to load or
/// yield no clip are listed in `skipped`; the call throws only when nothing
/// usable remains.
inline Dataset ingest(const Manifest& manifest) {
  Dataset ds;
  for (const auto& rec : manifest.records) {
    try {
      auto clips = clips_from_wav(read_file(rec.path));
      if (clips.empty()) {
        ds.skipped.push_back({rec.path, "shorter than one five-second clip"});
        continue;
      }
      for (auto& c : clips) {
        ds.clips.push_back(std::move(c));
        ds.labels.push_back(rec.genre);
        ds.per_genre[static_cast<std::size_t>(rec.genre)] += 1;
      }
    } catch (const Error& e) {
      ds.skipped.push_back({rec.path, e.what()});
    }
  }
  if (ds.clips.empty()) throw ConfigError("ingest produced no clips");
  return ds;
}

inline Dataset ingest(const std::filesystem::path& manifest_path) {
  return ingest(load_manifest(manifest_path));
}

}  // namespace audiodream
