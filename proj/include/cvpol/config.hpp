#pragma once

// JSON configuration files for ExperimentConfig. Units live in the key names.
//
//   {
//     "topology": "polarization_pair",
//     "squeezer": {"squeezed_variance": 0.44, "antisqueezed_variance": 4.0,
//                  "corner_frequency_hz": 1.2e7, "relaxation_noise": 0.0,
//                  "relaxation_reference_hz": 2e6},
//     "mixing": {"transmittance": 0.5, "phase_rad": 1.5707963267948966},
//     "mean_field": {"alpha_h_sq": 100, "alpha_v_sq": 3000,
//                    "theta_x_rad": 1.5707963267948966, "theta_y_rad": 1.5707963267948966},
//     "efficiencies": {"entangler_mode_matching": 0.978, ...},
//     "frequency_grid_hz": {"start": 2e6, "stop": 1e7, "points": 21}
//   }
//
// "squeezers" (an array) may replace "squeezer"; "frequencies_hz" (an array)
// may replace "frequency_grid_hz". Unknown keys are rejected.

#include "cvpol/experiment.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cvpol {

/// Malformed or inconsistent input files.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw InputError(where + ": unknown key '" + it.key() + "'");
}

inline double number(const json& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InputError(where + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

inline SqueezerModel parse_squeezer(const json& j, const std::string& where) {
  reject_unknown(j, {"squeezed_variance", "antisqueezed_variance", "corner_frequency_hz",
                     "relaxation_noise", "relaxation_reference_hz"},
                 where);
  SqueezerModel s;
  s.squeezed_variance = number(j, "squeezed_variance", 1.0, where);
  s.antisqueezed_variance = number(j, "antisqueezed_variance", 1.0 / s.squeezed_variance, where);
  s.corner_frequency_hz = number(j, "corner_frequency_hz", 0.0, where);
  s.relaxation_noise = number(j, "relaxation_noise", 0.0, where);
  s.relaxation_reference_hz = number(j, "relaxation_reference_hz", 1.0e6, where);
  return s;
}

inline json dump_squeezer(const SqueezerModel& s) {
  return {{"squeezed_variance", s.squeezed_variance},
          {"antisqueezed_variance", s.antisqueezed_variance},
          {"corner_frequency_hz", s.corner_frequency_hz},
          {"relaxation_noise", s.relaxation_noise},
          {"relaxation_reference_hz", s.relaxation_reference_hz}};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::number;
  detail::reject_unknown(j, {"topology", "squeezer", "squeezers", "mixing", "mean_field", "efficiencies",
                             "frequency_grid_hz", "frequencies_hz"},
                         "config");
  ExperimentConfig c;
  const std::string topo = j.value("topology", std::string("polarization_pair"));
  if (topo == "polarization_pair") {
    c = ExperimentConfig{};
  } else if (topo == "three_stokes") {
    c = ExperimentConfig::ideal_three_stokes(1.0);
  } else {
    throw InputError("config.topology: expected polarization_pair or three_stokes");
  }

  if (j.contains("squeezer") && j.contains("squeezers"))
    throw InputError("config: give either squeezer or squeezers, not both");
  if (j.contains("squeezer")) {
    c.squeezers.assign(c.required_squeezers(), detail::parse_squeezer(j.at("squeezer"), "squeezer"));
  } else if (j.contains("squeezers")) {
    if (!j.at("squeezers").is_array()) throw InputError("config.squeezers: expected an array");
    c.squeezers.clear();
    for (std::size_t k = 0; k < j.at("squeezers").size(); ++k)
      c.squeezers.push_back(detail::parse_squeezer(j.at("squeezers")[k], "squeezers[" + std::to_string(k) + "]"));
  }

  if (j.contains("mixing")) {
    const auto& m = j.at("mixing");
    detail::reject_unknown(m, {"transmittance", "phase_rad"}, "mixing");
    c.mixing_transmittance = number(m, "transmittance", c.mixing_transmittance, "mixing");
    c.mixing_phase = number(m, "phase_rad", c.mixing_phase, "mixing");
  }
  if (j.contains("mean_field")) {
    const auto& m = j.at("mean_field");
    detail::reject_unknown(m, {"alpha_h_sq", "alpha_v_sq", "alpha_sq", "theta_x_rad", "theta_y_rad"},
                           "mean_field");
    c.alpha_h_sq = number(m, "alpha_h_sq", c.alpha_h_sq, "mean_field");
    c.alpha_v_sq = number(m, "alpha_v_sq", c.alpha_v_sq, "mean_field");
    c.alpha_sq = number(m, "alpha_sq", c.alpha_sq, "mean_field");
    c.theta_x = number(m, "theta_x_rad", c.theta_x, "mean_field");
    c.theta_y = number(m, "theta_y_rad", c.theta_y, "mean_field");
  }
  if (j.contains("efficiencies")) {
    const auto& e = j.at("efficiencies");
    detail::reject_unknown(e, {"entangler_mode_matching", "polarization_overlap", "propagation",
                               "detection_mode_matching", "detector"},
                           "efficiencies");
    Efficiencies& f = c.efficiencies;
    f.entangler_mode_matching = number(e, "entangler_mode_matching", 1.0, "efficiencies");
    f.polarization_overlap = number(e, "polarization_overlap", 1.0, "efficiencies");
    f.propagation = number(e, "propagation", 1.0, "efficiencies");
    f.detection_mode_matching = number(e, "detection_mode_matching", 1.0, "efficiencies");
    f.detector = number(e, "detector", 1.0, "efficiencies");
  }

  if (j.contains("frequency_grid_hz") && j.contains("frequencies_hz"))
    throw InputError("config: give either frequency_grid_hz or frequencies_hz, not both");
  if (j.contains("frequency_grid_hz")) {
    const auto& g = j.at("frequency_grid_hz");
    detail::reject_unknown(g, {"start", "stop", "points"}, "frequency_grid_hz");
    if (!g.contains("start") || !g.contains("stop") || !g.contains("points"))
      throw InputError("frequency_grid_hz: start, stop and points are required");
    if (!g.at("points").is_number_integer() || g.at("points").get<long>() < 1)
      throw InputError("frequency_grid_hz.points: expected a positive integer");
    c.frequencies_hz = ExperimentConfig::uniform_grid(number(g, "start", 0, "frequency_grid_hz"),
                                                      number(g, "stop", 0, "frequency_grid_hz"),
                                                      g.at("points").get<std::size_t>());
  } else if (j.contains("frequencies_hz")) {
    try {
      c.frequencies_hz = j.at("frequencies_hz").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw InputError("frequencies_hz: expected an array of numbers");
    }
  }

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return c;
}

/// Canonical form: every field spelled out, keys sorted. Two configs that
/// simulate identically serialize identically.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json squeezers = nlohmann::json::array();
  for (const auto& s : c.squeezers) squeezers.push_back(detail::dump_squeezer(s));
  const Efficiencies& e = c.efficiencies;
  return {{"topology", to_string(c.topology)},
          {"squeezers", squeezers},
          {"mixing", {{"transmittance", c.mixing_transmittance}, {"phase_rad", c.mixing_phase}}},
          {"mean_field",
           {{"alpha_h_sq", c.alpha_h_sq},
            {"alpha_v_sq", c.alpha_v_sq},
            {"alpha_sq", c.alpha_sq},
            {"theta_x_rad", c.theta_x},
            {"theta_y_rad", c.theta_y}}},
          {"efficiencies",
           {{"entangler_mode_matching", e.entangler_mode_matching},
            {"polarization_overlap", e.polarization_overlap},
            {"propagation", e.propagation},
            {"detection_mode_matching", e.detection_mode_matching},
            {"detector", e.detector}}},
          {"frequencies_hz", c.frequencies_hz}};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << fnv1a(config_to_json(c).dump());
  return os.str();
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

/// Mean-field parameters needed to turn Stokes variance spectra into criteria.
struct MeanFieldParams {
  double alpha_h_sq = 0.0;
  double alpha_v_sq = 0.0;
  double theta = 0.0;

  std::array<double, 4> stokes_means() const {
    const double ah = std::sqrt(alpha_h_sq);
    const double av = std::sqrt(alpha_v_sq);
    return {alpha_h_sq + alpha_v_sq, alpha_h_sq - alpha_v_sq, 2.0 * std::cos(theta) * ah * av,
            2.0 * std::sin(theta) * ah * av};
  }
};

inline MeanFieldParams params_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"alpha_h_sq", "alpha_v_sq", "theta_rad"}, "params");
  for (const char* k : {"alpha_h_sq", "alpha_v_sq", "theta_rad"})
    if (!j.contains(k)) throw InputError(std::string("params: missing ") + k);
  MeanFieldParams p{detail::number(j, "alpha_h_sq", 0, "params"), detail::number(j, "alpha_v_sq", 0, "params"),
                    detail::number(j, "theta_rad", 0, "params")};
  if (p.alpha_h_sq < 0.0 || p.alpha_v_sq < 0.0) throw InputError("params: intensities must be >= 0");
  return p;
}

}  // namespace cvpol
