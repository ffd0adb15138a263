#include "quadlab/vehicle/model_params.hpp"

#include "quadlab/common.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace quadlab {
namespace {

std::map<std::string, double ModelParams::*> field_map() {
  return {
      {"kx", &ModelParams::kx},   {"ky", &ModelParams::ky},
      {"kw", &ModelParams::kw},   {"kz", &ModelParams::kz},
      {"kh", &ModelParams::kh},   {"Ix", &ModelParams::Ix},
      {"Iy", &ModelParams::Iy},   {"Iz", &ModelParams::Iz},
      {"kp", &ModelParams::kp},   {"kpv", &ModelParams::kpv},
      {"kq", &ModelParams::kq},   {"kqv", &ModelParams::kqv},
      {"kr1", &ModelParams::kr1}, {"kr2", &ModelParams::kr2},
      {"krr", &ModelParams::krr}, {"tau", &ModelParams::tau},
      {"omega_min", &ModelParams::omega_min},
      {"omega_max", &ModelParams::omega_max},
  };
}

}  // namespace

void ModelParams::validate() const {
  const double values[] = {kx, ky,  kw,  kz,  kh,  Ix,  Iy,        Iz,       kp,
                           kpv, kq, kqv, kr1, kr2, krr, tau, omega_min, omega_max};
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("model params: non-finite value");
  }
  if (Ix <= 0 || Iy <= 0 || Iz <= 0) throw ConfigError("model params: inertia must be positive");
  if (tau <= 0) throw ConfigError("model params: tau must be positive");
  if (omega_min < 0 || omega_min >= omega_max) {
    throw ConfigError("model params: need 0 <= omega_min < omega_max");
  }
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("model params: cannot open '" + path.string() + "'");
  ModelParams params;
  const auto fields = field_map();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key, eq;
    double value = 0.0;
    if (!(ss >> key)) continue;  // blank line
    if (!(ss >> eq >> value) || eq != "=") {
      throw ConfigError("model params: bad line " + std::to_string(lineno) + " in '" +
                        path.string() + "'");
    }
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError("model params: unknown key '" + key + "' in '" + path.string() + "'");
    }
    params.*(it->second) = value;
  }
  params.validate();
  return params;
}

void save_params(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw ConfigError("model params: cannot write '" + path.string() + "'");
  out.precision(17);
  for (const auto& [key, member] : field_map()) {
    out << key << " = " << params.*member << '\n';
  }
  if (!out) throw ConfigError("model params: write to '" + path.string() + "' failed");
}

}  // namespace quadlab
