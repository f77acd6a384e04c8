#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace matforge {

// Throws StoreError unless `id` is a safe single path component
// ([A-Za-z0-9._-]+, not "." or "..").
void check_safe_id(std::string_view id);

// Write-then-rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);
bool file_exists(const std::filesystem::path& path);

std::string utc_timestamp();

// Layout: <root>/<run_id>/{manifest.json, schema.json, templates/,
// docs/<doc_id>/{raw.txt, marked.txt, annotated.json, kg.json, result.json,
// review.json, attempts/}}
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path run_dir(std::string_view run_id) const;
  std::filesystem::path doc_dir(std::string_view run_id, std::string_view doc_id) const;

 private:
  std::filesystem::path root_;
};

}  // namespace matforge
