#pragma once

// Canned chat-completion endpoint driven by tests/fixtures/cassettes/script.json.
// Each script entry answers one (stage, input, repair) combination; entries
// are tried in order and an optional "prompt_contains" narrows a match.

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matforge/gateway.hpp"

namespace matforge::testing {

struct ScriptEntry {
  std::string stage;
  std::string input;
  bool repair = false;
  std::string prompt_contains;
  std::string completion;
};

std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

// Splits a rendered prompt into (stage, input, repair).
struct PromptShape {
  std::string stage;  // annotate | special | kg_hybrid | kg_direct | unknown
  std::string input;
  bool repair = false;
};
PromptShape classify_prompt(const std::string& prompt);

class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

  HttpResponse post(const std::string& base_url, const std::string& path, const std::string& body,
                    const std::multimap<std::string, std::string>& headers,
                    std::chrono::milliseconds timeout) override;

  std::size_t calls() const { return calls_; }

 private:
  std::vector<ScriptEntry> script_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace matforge::testing
