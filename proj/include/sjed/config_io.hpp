#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sjed/config.hpp"

namespace sjed {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& allowed,
                                const std::string& ctx) {
  if (!j.is_object())
    throw std::runtime_error("config error: " + ctx + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::runtime_error("config error: unknown key '" + it.key() +
                               "' in " + ctx);
  }
}

inline SystemConfig system_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"B", "U", "T", "D", "Eh", "Tmax"}, "system");
  SystemConfig cfg;
  cfg.B = j.value("B", cfg.B);
  cfg.U = j.value("U", cfg.U);
  cfg.T = j.value("T", cfg.T);
  cfg.D = j.value("D", cfg.D);
  cfg.Eh = j.value("Eh", cfg.Eh);
  cfg.Tmax = j.value("Tmax", cfg.Tmax);
  cfg.validate();
  return cfg;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace sjed
