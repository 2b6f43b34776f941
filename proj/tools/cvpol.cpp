// cvpol: simulate polarization-entanglement spectra, evaluate criteria from
// measured spectra, export Poincare noise balls, and self-validate.
//
// exit status: 0 success, 1 validation failure, 2 input error

#include "cvpol/cvpol.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace cvpol;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;

struct Output {
  std::string path;
  std::string format = "csv";
};

template <class WriteFn>
void emit(const Output& out, WriteFn write) {
  if (out.path.empty() || out.path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream f(out.path);
  if (!f) throw InputError("cannot write " + out.path);
  write(f);
  if (!f) throw InputError("write failed: " + out.path);
}

void write_spectrum(const Output& out, const Spectrum& s) {
  emit(out, [&](std::ostream& os) {
    if (out.format == "json")
      os << spectrum_to_json(s).dump(2) << "\n";
    else
      write_spectrum_csv(os, s);
  });
}

int run_simulate(const std::string& config_path, const Output& out) {
  const ExperimentConfig cfg = load_config(config_path);
  if (cfg.frequencies_hz.empty()) throw InputError("config has no frequency grid");
  Spectrum s = to_spectrum(sweep_spectrum(cfg));
  s.metadata["config_hash"] = config_hash(cfg);
  s.metadata["topology"] = to_string(cfg.topology);
  s.metadata["calibration"] = "none";
  write_spectrum(out, s);
  return kExitOk;
}

int run_criteria(const std::vector<std::string>& spectra, const std::string& params_path, const Output& out) {
  std::vector<Spectrum> parts;
  for (const auto& p : spectra) parts.push_back(load_spectrum(p));
  const Spectrum merged = merge_and_calibrate(parts);
  const MeanFieldParams params = params_from_json(read_json_file(params_path));
  Spectrum s = to_spectrum(criteria_from_spectra(merged, params));
  for (std::size_t k = 0; k < merged.flags.size(); ++k)
    if (!merged.flags[k].empty()) s.flag(k, merged.flags[k]);
  s.metadata["calibration"] = merged.metadata.count("calibration") ? merged.metadata.at("calibration") : "none";
  write_spectrum(out, s);
  return kExitOk;
}

int run_poincare(const std::string& config_path, const std::string& beam, const std::string& conditional,
                 std::optional<double> frequency, const Output& out) {
  ExperimentConfig cfg = load_config(config_path);
  double f = 0.0;
  if (frequency)
    f = *frequency;
  else if (!cfg.frequencies_hz.empty())
    f = cfg.frequencies_hz[cfg.frequencies_hz.size() / 2];
  const PolarizationSetup setup = build_setup(cfg.at_frequency(f));
  const PolarizedBeam& self = beam == "x" ? setup.beam_x : setup.beam_y;
  const PolarizedBeam& partner = beam == "x" ? setup.beam_y : setup.beam_x;
  const NoiseBall ball = conditional == "none" ? noise_ball(self)
                                               : conditional_noise_ball(self, partner, conditional[1] - '0');
  emit(out, [&](std::ostream& os) {
    if (out.format == "json") {
      auto j = noise_ball_to_json(ball);
      j["beam"] = beam;
      j["frequency_hz"] = f;
      j["config_hash"] = config_hash(cfg);
      os << j.dump(2) << "\n";
    } else {
      os << "# beam: " << beam << "\n# frequency_hz: " << format_real(f) << "\n# config_hash: " << config_hash(cfg)
         << "\n";
      write_noise_ball_csv(os, ball);
    }
  });
  return kExitOk;
}

int run_validate(unsigned seed) {
  const auto checks = run_validation_suite(seed);
  bool ok = true;
  std::size_t width = 0;
  for (const auto& c : checks) width = std::max(width, c.name.size());
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS  " : "FAIL  ") << c.name << std::string(width - c.name.size() + 2, ' ')
              << c.detail << "\n";
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable polarization entanglement toolkit"};
  app.require_subcommand(1);

  auto add_output = [](CLI::App* cmd, Output& out) {
    cmd->add_option("--out", out.path, "Output file (default: stdout)");
    cmd->add_option("--format", out.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  std::string config_path;
  Output sim_out;
  auto* simulate = app.add_subcommand("simulate", "Sweep the criteria over the config's frequency grid");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  add_output(simulate, sim_out);

  std::vector<std::string> spectra;
  std::string params_path;
  Output crit_out;
  auto* criteria = app.add_subcommand("criteria", "Criteria from measured Stokes variance spectra");
  criteria->add_option("--spectra", spectra, "Spectrum files (CSV or .json)")->required()->check(CLI::ExistingFile);
  criteria->add_option("--params", params_path, "Mean-field parameters (JSON)")->required()->check(CLI::ExistingFile);
  add_output(criteria, crit_out);

  std::string ball_config;
  std::string beam = "x";
  std::string conditional = "none";
  std::optional<double> frequency;
  Output ball_out;
  auto* poincare = app.add_subcommand("poincare", "Export a Poincare-sphere noise ball");
  poincare->add_option("--config", ball_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  poincare->add_option("--beam", beam, "Beam")->check(CLI::IsMember({"x", "y"}));
  poincare->add_option("--conditional", conditional, "Stokes operator measured on the other beam")
      ->check(CLI::IsMember({"none", "s1", "s2", "s3"}));
  poincare->add_option("--frequency-hz", frequency, "Sideband frequency (default: middle of the grid)");
  add_output(poincare, ball_out);

  unsigned seed = 20030101u;
  auto* validate = app.add_subcommand("validate", "Run the randomized self-checks");
  validate->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitInput;
  }

  try {
    if (*simulate) return run_simulate(config_path, sim_out);
    if (*criteria) return run_criteria(spectra, params_path, crit_out);
    if (*poincare) return run_poincare(ball_config, beam, conditional, frequency, ball_out);
    if (*validate) return run_validate(seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
