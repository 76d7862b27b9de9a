#include "dampsurf/manifest.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include <openssl/evp.h>

#include "dampsurf/error.hpp"

namespace dampsurf {
namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string to_hex(const unsigned char* data, unsigned int n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * n);
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw DomainError("SHA-256 computation failed");
  return to_hex(digest.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

bool Manifest::ok() const {
  for (const auto& s : stages)
    if (!s.ok) return false;
  return true;
}

void Manifest::write(std::ostream& out) const {
  out << "format = dampsurf-manifest-1\n";
  out << "status = " << (ok() ? "ok" : "failed") << '\n';
  for (const auto& s : stages)
    out << "stage." << s.name << " = " << (s.ok ? "ok" : "failed: " + s.message) << '\n';
  for (const auto& [name, hash] : files) out << "file." << name << " = sha256:" << hash << '\n';
}

Manifest Manifest::read(std::istream& in) {
  Manifest m;
  std::string line;
  bool seen_format = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DomainError("manifest: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "format") {
      if (value != "dampsurf-manifest-1") throw DomainError("manifest: unknown format " + value);
      seen_format = true;
    } else if (key == "status") {
      continue;
    } else if (key.rfind("stage.", 0) == 0) {
      StageRecord s{key.substr(6), value == "ok", ""};
      if (!s.ok) s.message = value.rfind("failed: ", 0) == 0 ? value.substr(8) : value;
      m.stages.push_back(std::move(s));
    } else if (key.rfind("file.", 0) == 0) {
      if (value.rfind("sha256:", 0) != 0) throw DomainError("manifest: bad hash for " + key);
      m.files.emplace_back(key.substr(5), value.substr(7));
    } else {
      throw DomainError("manifest: unknown key '" + key + "'");
    }
  }
  if (!seen_format) throw DomainError("manifest: missing format line");
  return m;
}

}  // namespace dampsurf
