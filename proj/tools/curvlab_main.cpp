#include <iostream>

#include <CLI11.hpp>

#include "curvlab/error.hpp"
#include "scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"curvlab: curvature and optimal transport experiments on the flat torus"};
  app.require_subcommand(1);

  std::string scenario_path, suite_dir, out_dir;
  bool assert_verdict = false;

  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory (default: out/<name>)");
  run->add_flag("--assert", assert_verdict, "exit 1 when the verdict fails");

  auto* suite = app.add_subcommand("suite", "run every scenario in a directory");
  suite->add_option("dir", suite_dir, "directory of scenario JSON files")->required();
  suite->add_option("--out", out_dir, "output directory (default: out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      std::filesystem::path out = out_dir;
      if (out.empty()) {
        std::string name = std::filesystem::path(scenario_path).stem().string();
        try {
          name = curvlab::cli::load_scenario(scenario_path).name;
        } catch (const curvlab::Error&) {
        }
        out = std::filesystem::path("out") / name;
      }
      const auto r = curvlab::cli::run_scenario_file(scenario_path, out, assert_verdict);
      if (r.status == "ok") {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.kind << ", verdict " << (r.verdict ? "holds" : "fails")
                  << "): " << r.summary << '\n';
      } else {
        std::cerr << "curvlab: " << r.status << ": " << r.error << '\n';
      }
      return r.exit_code;
    }
    return curvlab::cli::run_suite(suite_dir, out_dir.empty() ? "out" : out_dir, std::cout);
  } catch (const curvlab::Error& e) {
    std::cerr << "curvlab: " << curvlab::to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == curvlab::ErrorCode::kSchema ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "curvlab: " << e.what() << '\n';
    return 3;
  }
}
