#pragma once
// Run manifests: one JSON record per CLI invocation listing flags, seeds and
// content hashes of every input and output file.

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include "causalcbm/serialize.hpp"

namespace causalcbm::cli {

inline std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot hash '" + path + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class RunManifest {
 public:
  explicit RunManifest(std::string command) : command_(std::move(command)) {}

  template <typename T>
  void flag(const std::string& name, const T& value) {
    flags_[name] = value;
  }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }

  // The manifest lands next to the primary output as <primary>.manifest.json.
  std::string write(const std::string& primary_output) const {
    json files_in = json::array(), files_out = json::array();
    for (const auto& p : inputs_) files_in.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    for (const auto& p : outputs_) files_out.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    const json j = {{"command", command_},   {"flags", flags_},         {"seeds", seeds_},
                    {"inputs", files_in},    {"outputs", files_out},    {"timestamp", utc_timestamp()}};
    const std::string path = primary_output + ".manifest.json";
    write_json_file(path, j);
    return path;
  }

 private:
  std::string command_;
  json flags_ = json::object();
  json seeds_ = json::object();
  std::vector<std::string> inputs_, outputs_;
};

}  // namespace causalcbm::cli
