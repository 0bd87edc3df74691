#pragma once

// Run manifest: resolved configuration, input digests, seeds, and produced
// artifact paths. Digests are FNV-1a 64 over the raw file bytes so they can
// be recomputed with a few lines of any language.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysr/version.hpp"

namespace dysr {

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for digest: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return out;
}

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_digests;  // path -> digest
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;

  void add_input(const std::string& path) { input_digests[path] = file_digest(path); }

  void write(const std::string& path) const {
    nlohmann::json j;
    j["tool_version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = input_digests;
    j["seeds"] = seeds;
    j["artifacts"] = artifacts;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
    out << j.dump(2) << '\n';
  }
};

}  // namespace dysr
