// Command-line front end.
//
//   fots run --scenario <file> [--out <dir>] [--seed N]
//   fots tdev --input <csv> --out <csv> [--tau0 s]
//   fots compare <report> <report> [...]
//   fots calibrate --scenario <file>
//
// Exit codes: 0 ok, 1 validation/parse, 2 runtime (protocol), 3 I/O.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fots/fots.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2, kIo = 3 };

int cmd_run(const std::string& scenario_path, const std::string& out,
            std::optional<std::uint64_t> seed) {
  fots::Scenario s = fots::load_scenario(scenario_path);
  if (seed) s.reseed(*seed);
  std::filesystem::path dir = out;
  if (dir.empty()) {
    if (!s.outputs) throw fots::ValidationError("outputs", "no --out given and scenario sets none");
    dir = *s.outputs;
  }
  const auto rep = fots::run(s, dir);
  std::cout << "scenario " << rep.name << ": " << rep.rounds.size() << " rounds -> "
            << dir.string() << '\n';
  for (const double tau : {1.0, 10.0, 100.0, 1000.0}) {
    if (const auto* p = rep.residual_tdev.at(tau)) {
      std::cout << "  TDEV(" << tau << " s) = " << p->value * 1e12 << " ps\n";
    }
  }
  return kOk;
}

int cmd_tdev(const std::string& input, const std::string& out, double tau0) {
  const auto series = fots::io::read_series(input, tau0);
  const auto curve = fots::tdev(series);
  fots::io::write_tdev_csv(out, curve);
  std::cout << curve.points.size() << " TDEV points -> " << out << '\n';
  return kOk;
}

int cmd_compare(const std::vector<std::string>& reports) {
  std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
  const auto cmp = fots::compare(paths);
  std::cout << fots::format_comparison(cmp);
  return kOk;
}

int cmd_calibrate(const std::string& scenario_path) {
  const fots::Scenario s = fots::load_scenario(scenario_path);
  std::cout << fots::to_json(fots::calibrate(s)).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-reversal fiber time synchronization simulator"};
  app.require_subcommand(1);

  std::string scenario, out, input;
  std::uint64_t seed = 0;
  double tau0 = 1.0;
  std::vector<std::string> reports;

  auto* run = app.add_subcommand("run", "simulate a scenario and write its artifact tree");
  run->add_option("--scenario", scenario, "scenario JSON")->required();
  run->add_option("--out", out, "output directory (defaults to the scenario's outputs)");
  auto* seed_opt = run->add_option("--seed", seed, "override master_seed");

  auto* tdev = app.add_subcommand("tdev", "TDEV of a residual or time-error CSV");
  tdev->add_option("--input", input, "rounds/node CSV or index,x_seconds CSV")->required();
  tdev->add_option("--out", out, "output CSV")->required();
  tdev->add_option("--tau0", tau0, "sample interval for index,x_seconds input");

  auto* cmp = app.add_subcommand("compare", "tabulate residual TDEV across runs");
  cmp->add_option("reports", reports, "run directories or TDEV CSVs")->required()->expected(2, -1);

  auto* cal = app.add_subcommand("calibrate", "run the calibration procedure");
  cal->add_option("--scenario", scenario, "scenario JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;  // --help exits 0
  }

  try {
    if (*run) {
      return cmd_run(scenario, out,
                     seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (*tdev) return cmd_tdev(input, out, tau0);
    if (*cmp) return cmd_compare(reports);
    if (*cal) return cmd_calibrate(scenario);
  } catch (const fots::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kValidation;
  } catch (const fots::ValidationError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return kValidation;
  } catch (const fots::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const fots::Error& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
