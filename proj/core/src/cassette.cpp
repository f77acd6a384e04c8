#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "matforge/errors.hpp"
#include "matforge/gateway.hpp"

namespace matforge {
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Cassette Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kStore, "cannot open cassette " + path.string());
  Cassette c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      c.entries_[j.at("request_hash").get<std::string>()] = j.at("response");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kStore, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

std::optional<nlohmann::json> Cassette::find(const std::string& request_hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(request_hash);
  if (it == entries_.end()) return std::nullopt;
  return std::optional<nlohmann::json>(std::in_place, it->second);
}

void Cassette::append(const std::filesystem::path& path, const std::string& request_hash,
                      const nlohmann::json& request, const nlohmann::json& response) {
  nlohmann::ordered_json line;
  line["request_hash"] = request_hash;
  line["request"] = nlohmann::ordered_json::parse(request.dump());
  line["response"] = nlohmann::ordered_json::parse(response.dump());
  line["timestamp"] = utc_now();
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kStore, "cannot append to cassette " + path.string());
  out << line.dump() << '\n';
  out.flush();
  entries_[request_hash] = response;
}

}  // namespace matforge
