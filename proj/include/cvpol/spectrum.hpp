#pragma once

// Frequency-resolved data: calibration of measured noise-power traces,
// criteria from Stokes variance spectra, and CSV / JSON export.
//
// CSV layout:
//   # key: value            metadata, one per line
//   frequency_hz,<series>...,flags
//   <%.9g>,<%.9g>...,<flag;flag>
// A series column named NAME holds normalized values. Raw traces use three
// columns NAME:variance, NAME:dark and NAME:shot, calibrated on import.

#include "cvpol/config.hpp"
#include "cvpol/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cvpol {

/// Dark-noise clearance below which a calibrated point is flagged.
inline constexpr double kMinHeadroomDb = 4.5;

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline double round_to_9(double v) { return std::isfinite(v) ? std::stod(format_real(v)) : v; }

struct Spectrum {
  std::vector<double> frequency_hz;
  std::vector<std::pair<std::string, std::vector<double>>> series;
  /// Per point; ';'-separated, empty when clean.
  std::vector<std::string> flags;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return frequency_hz.size(); }

  bool has(const std::string& name) const {
    for (const auto& s : series)
      if (s.first == name) return true;
    return false;
  }

  const std::vector<double>& at(const std::string& name) const {
    for (const auto& s : series)
      if (s.first == name) return s.second;
    throw InputError("missing series '" + name + "'");
  }

  void add(std::string name, std::vector<double> values) {
    if (name.empty() || name.find_first_of(",\n") != std::string::npos || name == "flags" ||
        name == "frequency_hz")
      throw InputError("invalid series name '" + name + "'");
    if (has(name)) throw InputError("duplicate series '" + name + "'");
    if (values.size() != size()) throw InputError("series '" + name + "' does not match the frequency grid");
    series.emplace_back(std::move(name), std::move(values));
  }

  void flag(std::size_t point, const std::string& f) {
    if (flags.size() != size()) flags.resize(size());
    if (flags[point].find(f) != std::string::npos) return;
    flags[point] += flags[point].empty() ? f : ";" + f;
  }

  void validate() const {
    for (const auto& s : series)
      if (s.second.size() != size()) throw InputError("series '" + s.first + "' does not match the frequency grid");
    if (!flags.empty() && flags.size() != size()) throw InputError("flags do not match the frequency grid");
  }
};

// ---------------------------------------------------------------------------
// Calibration.

/// Raw noise power from a spectrum analyzer, in linear units.
struct MeasuredSpectrum {
  std::vector<double> frequency_hz;
  std::vector<double> variance;
  std::vector<double> dark_variance;
  std::vector<double> shot_reference;
  int traces_averaged = 1;
  double rbw_hz = 300e3;
  double vbw_hz = 300.0;

  void validate() const {
    const std::size_t n = frequency_hz.size();
    if (variance.size() != n || dark_variance.size() != n || shot_reference.size() != n)
      throw InputError("measured spectrum: grids are not aligned");
    if (traces_averaged < 1) throw InputError("measured spectrum: traces_averaged must be >= 1");
  }
};

struct CalibratedSeries {
  std::vector<double> values;
  std::vector<bool> low_headroom;
  std::vector<bool> invalid;
};

/// (variance - dark) / (shot - dark) per point. Points within 4.5 dB of the
/// dark floor are flagged low_headroom; non-positive results are flagged
/// invalid and kept as computed.
inline CalibratedSeries calibrate(const MeasuredSpectrum& m) {
  m.validate();
  CalibratedSeries out;
  for (std::size_t k = 0; k < m.frequency_hz.size(); ++k) {
    const double v = m.variance[k];
    const double d = m.dark_variance[k];
    const double s = m.shot_reference[k];
    const double value = (v - d) / (s - d);
    const double headroom = d > 0.0 ? 10.0 * std::log10(v / d) : INFINITY;
    out.values.push_back(value);
    out.low_headroom.push_back(!(headroom >= kMinHeadroomDb));
    out.invalid.push_back(!(value > 0.0) || !(s > d) || !std::isfinite(value));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria spectra.

inline std::string insep_series(StokesPair p) { return "I_" + p.label(); }
inline std::string epr_series(StokesPair p) { return "E_" + p.label(); }
inline std::string sumdiff_series(int i) { return "s" + std::to_string(i) + "_sumdiff"; }
inline std::string cond_series(int i) { return "s" + std::to_string(i) + "_cond"; }

namespace detail {
inline void flag_results(Spectrum& s, std::size_t k, const StokesPointResult& p) {
  for (const StokesPair pair : kStokesPairs) {
    if (p.inseparability[pair.index()].status == CriterionStatus::unverifiable)
      s.flag(k, "unverifiable_" + pair.label());
    else if (p.inseparability[pair.index()].entangled())
      s.flag(k, "entangled_" + pair.label());
    if (p.epr[pair.index()].entangled()) s.flag(k, "epr_" + pair.label());
  }
}
}  // namespace detail

/// Flattens criteria into named series: I_*, E_*, then the normalized Stokes
/// sum/difference and conditional variances.
inline Spectrum to_spectrum(const CriteriaSpectrum& c) {
  Spectrum s;
  s.frequency_hz = c.frequency_hz;
  s.flags.assign(s.size(), "");
  auto column = [&](auto get) {
    std::vector<double> v;
    for (const auto& p : c.points) v.push_back(get(p));
    return v;
  };
  for (const StokesPair pair : kStokesPairs)
    s.add(insep_series(pair), column([&](const StokesPointResult& p) { return p.inseparability[pair.index()].value; }));
  for (const StokesPair pair : kStokesPairs)
    s.add(epr_series(pair), column([&](const StokesPointResult& p) { return p.epr[pair.index()].value; }));
  for (int i = 0; i < 4; ++i)
    s.add(sumdiff_series(i), column([&](const StokesPointResult& p) { return p.sumdiff_norm[i]; }));
  for (int i = 0; i < 4; ++i)
    s.add(cond_series(i), column([&](const StokesPointResult& p) { return p.conditional_norm[i]; }));
  for (std::size_t k = 0; k < c.points.size(); ++k) detail::flag_results(s, k, c.points[k]);
  return s;
}

/// Criteria from measured Stokes variance spectra. Needs s{1,2,3}_sumdiff
/// (over 2<S0>) and s{1,2,3}_cond (over <S0>); the commutators come from the
/// mean-field parameters.
inline CriteriaSpectrum criteria_from_spectra(const Spectrum& in, const MeanFieldParams& params) {
  in.validate();
  for (int i = 1; i <= 3; ++i) {
    if (!in.has(sumdiff_series(i))) throw InputError("missing series '" + sumdiff_series(i) + "'");
    if (!in.has(cond_series(i))) throw InputError("missing series '" + cond_series(i) + "'");
  }
  const auto m = params.stokes_means();
  const double s0 = m[0];
  const double floor = std::max(2.0 * kStokesDegeneracyFraction * s0, kDefaultCommutatorFloor);
  CriteriaSpectrum out;
  out.frequency_hz = in.frequency_hz;
  for (std::size_t k = 0; k < in.size(); ++k) {
    StokesPointResult p;
    for (int i = 0; i < 4; ++i) {
      p.sumdiff_norm[i] = in.has(sumdiff_series(i)) ? in.at(sumdiff_series(i))[k] : std::nan("");
      p.conditional_norm[i] = in.has(cond_series(i)) ? in.at(cond_series(i))[k] : std::nan("");
    }
    for (const StokesPair pair : kStokesPairs) {
      const double comm = 2.0 * std::abs(m[pair.third()]);
      const double da = p.sumdiff_norm[pair.i] * 2.0 * s0;
      const double db = p.sumdiff_norm[pair.j] * 2.0 * s0;
      const double ca = p.conditional_norm[pair.i] * s0;
      const double cb = p.conditional_norm[pair.j] * s0;
      p.inseparability[pair.index()] = inseparability_from_variances(da, db, comm, CriterionForm::sum, floor);
      p.epr[pair.index()] = epr_from_conditional(ca, cb, comm, floor);
    }
    out.points.push_back(p);
  }
  return out;
}

/// Merges several spectra on one grid; raw NAME:variance/dark/shot triplets
/// are calibrated into NAME and their flags carried over.
inline Spectrum merge_and_calibrate(const std::vector<Spectrum>& parts) {
  Spectrum out;
  if (parts.empty()) return out;
  out.frequency_hz = parts.front().frequency_hz;
  out.flags.assign(out.size(), "");
  for (const Spectrum& part : parts) {
    part.validate();
    if (part.frequency_hz != out.frequency_hz) throw InputError("spectra are on different frequency grids");
    for (std::size_t k = 0; k < part.flags.size(); ++k)
      if (!part.flags[k].empty()) out.flag(k, part.flags[k]);
    for (const auto& [name, values] : part.series) {
      const auto colon = name.find(':');
      if (colon == std::string::npos) {
        out.add(name, values);
        continue;
      }
      const std::string base = name.substr(0, colon);
      const std::string role = name.substr(colon + 1);
      if (role != "variance" && role != "dark" && role != "shot")
        throw InputError("unknown column role in '" + name + "'");
      if (role != "variance") continue;
      MeasuredSpectrum ms;
      ms.frequency_hz = part.frequency_hz;
      ms.variance = values;
      ms.dark_variance = part.at(base + ":dark");
      ms.shot_reference = part.at(base + ":shot");
      const CalibratedSeries cal = calibrate(ms);
      out.add(base, cal.values);
      for (std::size_t k = 0; k < out.size(); ++k) {
        if (cal.low_headroom[k]) out.flag(k, "low_headroom_" + base);
        if (cal.invalid[k]) out.flag(k, "invalid_" + base);
      }
    }
  }
  out.metadata["calibration"] = "linear_dark_subtraction";
  return out;
}

// ---------------------------------------------------------------------------
// CSV and JSON.

inline void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  s.validate();
  for (const auto& [k, v] : s.metadata) os << "# " << k << ": " << v << "\n";
  os << "frequency_hz";
  for (const auto& col : s.series) os << "," << col.first;
  os << ",flags\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    os << format_real(s.frequency_hz[k]);
    for (const auto& col : s.series) os << "," << format_real(col.second[k]);
    os << "," << (s.flags.empty() ? "" : s.flags[k]) << "\n";
  }
}

namespace detail {
inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_real(const std::string& text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    if (text == "nan" || text == "NaN" || text == "-nan") return std::nan("");
    throw InputError("line " + std::to_string(line) + ": not a number: '" + text + "'");
  }
}
}  // namespace detail

inline Spectrum read_spectrum_csv(std::istream& is) {
  Spectrum s;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  bool has_flags = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        const auto key_begin = line.find_first_not_of(" #");
        std::string value = line.substr(colon + 1);
        value.erase(0, value.find_first_not_of(' '));
        s.metadata[line.substr(key_begin, colon - key_begin)] = value;
      }
      continue;
    }
    const auto cells = detail::split(line, ',');
    if (header.empty()) {
      header = cells;
      if (header.empty() || header.front() != "frequency_hz")
        throw InputError("CSV header must start with frequency_hz");
      has_flags = header.back() == "flags";
      const std::size_t n_series = header.size() - 1 - (has_flags ? 1 : 0);
      for (std::size_t c = 1; c <= n_series; ++c) s.series.emplace_back(header[c], std::vector<double>{});
      continue;
    }
    if (cells.size() != header.size())
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " cells");
    s.frequency_hz.push_back(detail::parse_real(cells[0], lineno));
    for (std::size_t c = 0; c < s.series.size(); ++c)
      s.series[c].second.push_back(detail::parse_real(cells[c + 1], lineno));
    s.flags.push_back(has_flags ? cells.back() : "");
  }
  if (header.empty()) throw InputError("CSV has no header");
  for (std::size_t k = 1; k < s.size(); ++k)
    if (!(s.frequency_hz[k] > s.frequency_hz[k - 1])) throw InputError("CSV frequency grid is not increasing");
  return s;
}

inline nlohmann::ordered_json spectrum_to_json(const Spectrum& s) {
  s.validate();
  auto reals = [](const std::vector<double>& v) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::ordered_json(round_to_9(x)) : nlohmann::ordered_json());
    return a;
  };
  nlohmann::ordered_json j;
  j["metadata"] = s.metadata;
  j["frequency_hz"] = reals(s.frequency_hz);
  nlohmann::ordered_json series = nlohmann::ordered_json::object();
  for (const auto& [name, values] : s.series) series[name] = reals(values);
  j["series"] = series;
  j["flags"] = s.flags.empty() ? std::vector<std::string>(s.size()) : s.flags;
  return j;
}

inline Spectrum spectrum_from_json(const nlohmann::ordered_json& j) {
  try {
    Spectrum s;
    auto reals = [](const nlohmann::ordered_json& a) {
      std::vector<double> v;
      for (const auto& x : a) v.push_back(x.is_null() ? std::nan("") : x.get<double>());
      return v;
    };
    s.frequency_hz = reals(j.at("frequency_hz"));
    if (j.contains("metadata"))
      for (auto it = j.at("metadata").begin(); it != j.at("metadata").end(); ++it)
        s.metadata[it.key()] = it.value().get<std::string>();
    if (j.contains("series"))
      for (auto it = j.at("series").begin(); it != j.at("series").end(); ++it) s.add(it.key(), reals(it.value()));
    if (j.contains("flags")) s.flags = j.at("flags").get<std::vector<std::string>>();
    s.validate();
    return s;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw InputError(std::string("spectrum JSON: ") + e.what());
  }
}

/// Loads a spectrum, choosing the format from the extension (.json or CSV).
inline Spectrum load_spectrum(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    // ordered_json keeps the series order of the file.
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
      return spectrum_from_json(nlohmann::ordered_json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(path + ": " + e.what());
    }
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_spectrum_csv(in);
}

// ---------------------------------------------------------------------------
// Noise balls.

inline nlohmann::ordered_json noise_ball_to_json(const NoiseBall& b) {
  nlohmann::ordered_json j;
  auto vec = [](const Eigen::Vector3d& v) {
    return std::vector<double>{round_to_9(v(0)), round_to_9(v(1)), round_to_9(v(2))};
  };
  j["mean"] = vec(b.mean);
  j["covariance"] = {vec(b.cov.row(0)), vec(b.cov.row(1)), vec(b.cov.row(2))};
  j["axes"] = {vec(b.axes.col(0)), vec(b.axes.col(1)), vec(b.axes.col(2))};
  j["std_devs"] = vec(b.std_devs);
  j["shot_radius"] = round_to_9(b.shot_radius);
  j["conditioned_on"] = b.conditioned_on ? nlohmann::ordered_json("s" + std::to_string(*b.conditioned_on))
                                         : nlohmann::ordered_json("none");
  j["degenerate"] = b.degenerate;
  return j;
}

/// One record per row: field,s1,s2,s3. Axes are rows axis0..axis2 (unit
/// vectors, increasing spread) matching std_devs.
inline void write_noise_ball_csv(std::ostream& os, const NoiseBall& b) {
  os << "# conditioned_on: " << (b.conditioned_on ? "s" + std::to_string(*b.conditioned_on) : "none") << "\n";
  os << "# degenerate: " << (b.degenerate ? "true" : "false") << "\n";
  os << "field,s1,s2,s3\n";
  auto row = [&](const std::string& name, const Eigen::Vector3d& v) {
    os << name << "," << format_real(v(0)) << "," << format_real(v(1)) << "," << format_real(v(2)) << "\n";
  };
  row("mean", b.mean);
  for (int r = 0; r < 3; ++r) row("cov" + std::to_string(r), b.cov.row(r));
  for (int a = 0; a < 3; ++a) row("axis" + std::to_string(a), b.axes.col(a));
  row("std_devs", b.std_devs);
  os << "shot_radius," << format_real(b.shot_radius) << ",,\n";
}

}  // namespace cvpol
