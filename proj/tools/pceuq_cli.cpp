#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "pceuq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Polynomial chaos propagation and truncation errors"};
  app.set_version_flag("--version", "pceuq 0.1.0");

  pceuq::cli::RunConfig cfg;
  std::optional<double> degree, n, quad_points, tolerance, dz, z0;

  app.add_option("command", cfg.command, "Command to run")
      ->required()
      ->check(CLI::IsMember(pceuq::cli::commands()));
  app.add_option("--input,-i", cfg.input_path, "JSON problem spec");
  app.add_option("--output,-o", cfg.output_path, "CSV output path (manifest is written alongside)");
  app.add_option("--degree", degree, "Basis total degree");
  app.add_option("--n", n, "Truncation index");
  app.add_option("--quad-points", quad_points, "Gauss points per dimension");
  app.add_option("--tolerance", tolerance, "Quadrature convergence tolerance");
  app.add_option("--dz", dz, "table1: input PCE degree");
  app.add_option("--z0", z0, "table1: mean coefficient z_0");
  app.add_option("--z", cfg.z, "table1: coefficients z_1..z_dz")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    pceuq::cli::detail::write_error(std::cerr, "validation", e.what(), pceuq::cli::kValidation);
    return pceuq::cli::kValidation;
  }

  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) cfg.overrides[key] = *v;
  };
  put("degree", degree);
  put("n", n);
  put("quad-points", quad_points);
  put("tolerance", tolerance);
  put("dz", dz);
  put("z0", z0);
  return pceuq::cli::run(cfg);
}
