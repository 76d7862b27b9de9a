#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dampsurf {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct StageRecord {
  std::string name;
  bool ok = true;
  std::string message;  // error text for a failed stage
};

/// key = value text: "file.<name> = <sha256>" and "stage.<name> = ok|failed: ...".
/// Entries keep insertion order; nothing time-dependent is recorded.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> files;
  std::vector<StageRecord> stages;

  bool ok() const;
  void write(std::ostream& out) const;
  static Manifest read(std::istream& in);
};

}  // namespace dampsurf
