#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "meanfield/core.hpp"
#include "pipelines.hpp"

namespace {

using nlohmann::json;

// Flags declared through this helper land in the config object only when
// given on the command line, so pipeline defaults stay in one place.
struct FlagSet {
  CLI::App* app;
  std::map<std::string, std::string> numbers;
  std::map<std::string, std::string> texts;

  void number(const std::string& key, const std::string& help) {
    app->add_option("--" + dashed(key), numbers[key], help);
  }
  void text(const std::string& key, const std::string& help) {
    app->add_option("--" + dashed(key), texts[key], help);
  }

  json to_config(const std::string& command) const {
    json c = {{"command", command}};
    for (const auto& [key, value] : numbers) {
      if (app->count("--" + dashed(key)) == 0) continue;
      c[key] = parse_number(key, value);
    }
    for (const auto& [key, value] : texts) {
      if (app->count("--" + dashed(key)) > 0) c[key] = value;
    }
    return c;
  }

  static std::string dashed(std::string s) {
    for (auto& ch : s) ch = ch == '_' ? '-' : ch;
    return s;
  }

  static json parse_number(const std::string& key, const std::string& value) {
    try {
      std::size_t pos = 0;
      if (value.find_first_of(".eE") == std::string::npos) {
        if (value.rfind('-', 0) != 0) {
          const auto u = std::stoull(value, &pos);
          if (pos == value.size()) return u;
        } else {
          const auto i = std::stoll(value, &pos);
          if (pos == value.size()) return i;
        }
      }
      const double d = std::stod(value, &pos);
      if (pos == value.size()) return d;
    } catch (const std::exception&) {
    }
    throw meanfield::ConfigError("--" + dashed(key) + " expects a number, got '" + value + "'");
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-N simulation and analysis of mean-field spin and rotator systems"};
  app.require_subcommand(1);
  unsigned threads = 0;
  std::string output_dir;
  app.add_option("--threads", threads, "worker cap (MEANFIELD_THREADS overrides)");
  app.set_version_flag("--version", meanfield::cli::kVersion);

  std::vector<std::pair<CLI::App*, FlagSet>> commands;
  commands.reserve(8);
  const auto add = [&](const std::string& name, const std::string& help) -> FlagSet& {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--out", output_dir, "output directory for CSV, summary and manifest");
    commands.emplace_back(sub, FlagSet{sub, {}, {}});
    return commands.back().second;
  };

  {
    auto& f = add("simulate-cw", "aggregated Gillespie simulation of the disordered Curie-Weiss model");
    f.number("base_seed", "base seed (required)");
    f.text("law", "disorder law 'v:w,...' (default 0:1)");
    f.number("beta", "inverse temperature (default: critical value)");
    f.number("n", "number of spins");
    f.number("m_star", "stationary magnetization used as reference");
    f.number("initial_magnetization", "start from a product state with this magnetization");
    f.number("t_end", "observed end time");
    f.number("observations", "number of observation intervals");
    f.number("replicas", "independent replicas");
    f.text("space_scale", "sqrt_n | moderate");
    f.text("time_scale", "unit | n_quarter | n_half");
    f.text("csv_layout", "long | per-replica");
  }
  {
    auto& f = add("simulate-kuramoto", "Euler-Maruyama simulation of the random Kuramoto model");
    f.number("base_seed", "base seed (required)");
    f.text("law", "frequency law (default 1:0.5,-1:0.5)");
    f.number("theta", "coupling (default: critical value)");
    f.number("omega", "frequency scale");
    f.number("n", "number of rotators");
    f.number("dt", "microscopic step");
    f.number("t_end", "observed end time");
    f.number("observations", "number of observation intervals");
    f.number("h_max", "highest harmonic in the weighted norm");
    f.number("weight_exponent", "exponent r of the norm weights");
    f.number("replicas", "independent replicas");
    f.text("space_scale", "sqrt_n | moderate");
    f.text("time_scale", "unit | n_quarter | n_half");
    f.text("csv_layout", "long | per-replica");
  }
  {
    auto& f = add("ensemble", "replica ensemble with summary statistics only");
    f.text("model", "cw | kuramoto");
    for (const char* k : {"base_seed", "beta", "theta", "omega", "n", "dt", "t_end", "observations", "replicas", "m_star",
                          "h_max", "weight_exponent", "initial_magnetization"}) {
      f.number(k, k);
    }
    f.text("law", "disorder law");
    f.text("space_scale", "sqrt_n | moderate");
    f.text("time_scale", "unit | n_quarter | n_half");
  }
  {
    auto& f = add("mckean-vlasov", "integrate the limiting nonlinear equation");
    f.text("model", "cw | kuramoto");
    f.text("law", "disorder law");
    for (const char* k : {"beta", "theta", "omega", "t_end", "dt", "record_every", "initial_magnetization",
                          "perturbation", "harmonics"}) {
      f.number(k, k);
    }
  }
  {
    auto& f = add("analyze", "critical values, stationary states, spectra and CLT parameters");
    f.text("model", "cw | kuramoto");
    f.text("law", "disorder law");
    f.number("beta", "inverse temperature (default: critical value)");
    f.number("theta", "coupling (default: critical value)");
    f.number("omega", "frequency scale");
    f.number("harmonics", "Fourier truncation for the spectrum");
  }
  {
    auto& f = add("limit-sde", "simulate a limiting diffusion ensemble");
    f.text("kind", "cw-cubic | kuramoto-cubic | cw-random-slope");
    f.text("law", "disorder law (random slope)");
    for (const char* k : {"base_seed", "omega", "beta", "t_end", "dt", "paths", "r_stop"}) f.number(k, k);
  }

  std::string experiment;
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify", "run a named acceptance experiment");
  verify->add_option("experiment", experiment, "experiment name")->required();
  verify->add_option("--out", output_dir, "output directory");
  verify->add_option("--base-seed", verify_seed, "base seed (default: the experiment's fixed seed)");
  verify->allow_extras();

  std::string config_path;
  auto* run = app.add_subcommand("run", "execute a JSON config file");
  run->add_option("config", config_path, "config path")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : meanfield::cli::kExitConfig;
  }

  try {
    if (run->parsed()) return meanfield::cli::run_config_file(config_path, threads, std::cout);
    json config;
    if (verify->parsed()) {
      config = {{"command", "verify"}, {"experiment", experiment}};
      if (verify->count("--base-seed")) config["base_seed"] = verify_seed;
      // remaining "--key value" pairs are experiment parameters
      const auto extras = verify->remaining();
      json params = json::object();
      for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok.rfind("--", 0) != 0 || i + 1 >= extras.size()) {
          throw meanfield::ConfigError("expected '--name value' pairs after the experiment name, got '" + tok + "'");
        }
        std::string key = tok.substr(2);
        for (auto& ch : key) ch = ch == '-' ? '_' : ch;
        params[key] = FlagSet::parse_number(key, extras[++i]);
      }
      if (!params.empty()) config["parameters"] = params;
    } else {
      for (const auto& [sub, flags] : commands) {
        if (sub->parsed()) config = flags.to_config(sub->get_name());
      }
    }
    if (!output_dir.empty()) config["output_dir"] = output_dir;
    return meanfield::cli::run_config(config, threads, std::cout);
  } catch (const meanfield::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return meanfield::cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return meanfield::cli::kExitConfig;
  }
}
