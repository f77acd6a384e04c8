#pragma once

#include <filesystem>
#include <string>

#include "matforge/gateway.hpp"

namespace matforge::testing {

inline constexpr const char* kFixtureModel = "fixture-model";

inline std::filesystem::path fixture_dir() { return MATFORGE_FIXTURE_DIR; }
inline std::filesystem::path data_dir() { return MATFORGE_DATA_DIR; }

inline GatewayConfig replay_config(const std::filesystem::path& cassette) {
  GatewayConfig c;
  c.model_name = kFixtureModel;
  c.mode = GatewayMode::kReplay;
  c.cassette_path = cassette;
  return c;
}

}  // namespace matforge::testing
