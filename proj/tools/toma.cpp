// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// toma: command-line front end.
//
//   toma gen    synthetic token fields -> tensor files
//   toma run    merge/unmerge pipeline over tensor files -> JSON report
//   toma bench  merge/unmerge micro-benchmark -> JSON (or CSV) timings
//   toma flops  cost model -> JSON
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toma/cost_model.hpp"
#include "toma/errors.hpp"
#include "toma/parallel.hpp"
#include "toma/report.hpp"
#include "toma/synth.hpp"
#include "toma/tensor_file.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int fail(const char* kind, const std::string& message, int code) {
  const nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << std::endl;
  return code;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << std::endl;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw toma::DataError("cannot open " + out_path + " for writing");
  out << text << '\n';
}

std::filesystem::path step_path(const std::filesystem::path& base, std::size_t step,
                                std::size_t steps) {
  if (steps == 1) return base;
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "_step%03zu", step);
  std::filesystem::path p = base;
  p.replace_filename(base.stem().string() + suffix + base.extension().string());
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token merging with attention: selection, merge/unmerge, cost model"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = all cores)")
      ->envname("TOMA_THREADS");

  // gen
  toma::SynthConfig synth;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Write synthetic smooth token fields");
  gen->add_option("--height", synth.grid.height, "Grid height")->required()->check(CLI::PositiveNumber);
  gen->add_option("--width", synth.grid.width, "Grid width")->required()->check(CLI::PositiveNumber);
  gen->add_option("--dim", synth.d, "Embedding dimension")->required()->check(CLI::PositiveNumber);
  gen->add_option("--sigma", synth.smooth_sigma, "Gaussian blur std-dev in grid cells")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--drift", synth.drift, "Per-step drift coefficient in [0, 1]")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--steps", synth.steps, "Number of drift steps")
      ->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output path (steps > 1 adds _stepNNN)")->required();

  // run
  toma::RunOptions run_opts;
  std::vector<std::string> inputs;
  std::string layout_name = "global";
  std::string unmerge_name = "transpose";
  bool no_sqrt_d = false;
  bool dot_logits = false;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run the merge pipeline over tensor files (one per step)");
  run->add_option("inputs", inputs, "Tensor files, one per denoising step")->required();
  run->add_option("--ratio", run_opts.ratio, "Fraction of tokens kept")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  run->add_option("--tau", run_opts.config.merge.tau, "Attention temperature")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--layout", layout_name, "Region layout")
      ->capture_default_str()->check(CLI::IsMember({"global", "stripe", "tile"}));
  run->add_option("--regions", run_opts.regions, "Number of regions")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--dest-every", run_opts.dest_every, "Steps between destination refreshes")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--weights-every", run_opts.weights_every, "Steps between weight refreshes")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--unmerge", unmerge_name, "Unmerge operator")
      ->capture_default_str()->check(CLI::IsMember({"transpose", "pinv"}));
  run->add_option("--ridge", run_opts.config.ridge, "Ridge added to the Gram matrix (pinv)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  run->add_option("--core", run_opts.core, "Core transform")
      ->capture_default_str()->check(CLI::IsMember({"identity"}));
  run->add_flag("--deterministic", run_opts.deterministic, "Single-threaded fixed-order reductions");
  run->add_flag("--compare-unmerge", run_opts.compare_unmerge, "Report transpose and pinv side by side");
  run->add_flag("--freeze-destinations", run_opts.freeze_destinations,
                "Keep destination embeddings from the selection step");
  run->add_flag("--no-sqrt-d-scale", no_sqrt_d, "Divide logits by tau only");
  run->add_flag("--dot-logits", dot_logits, "Raw dot-product logits instead of cosine");
  run->add_option("--reps", run_opts.reps, "Timing repetitions")
      ->capture_default_str()->check(CLI::PositiveNumber);
  run->add_option("--warmup", run_opts.warmup, "Untimed warmup runs")->capture_default_str();
  run->add_option("--seed", run_opts.seed, "Seed echoed in the report")->capture_default_str();
  run->add_option("--out", run_out, "Write the JSON report here instead of stdout");

  // bench
  toma::BenchOptions bench_opts;
  bool bench_csv = false;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "Time merge and transpose-unmerge per ratio");
  bench->add_option("--n", bench_opts.n, "Sequence length")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--dim", bench_opts.d, "Embedding dimension")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--ratios", bench_opts.ratios, "Comma-separated keep ratios")
      ->delimiter(',')->capture_default_str()->check(CLI::Range(0.0, 1.0));
  bench->add_option("--reps", bench_opts.reps, "Timed repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--warmup", bench_opts.warmup, "Untimed warmup runs")->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "RNG seed")->capture_default_str();
  bench->add_flag("--csv", bench_csv, "Emit the timing table as CSV");
  bench->add_option("--out", bench_out, "Write output here instead of stdout");

  // flops
  toma::CostParams cost;
  bool with_adds = false;
  auto* flops = app.add_subcommand("flops", "Evaluate the multiplication-count cost model");
  flops->add_option("--n", cost.n, "Sequence length")->required();
  flops->add_option("--dim", cost.d, "Embedding dimension")->required();
  flops->add_option("--ratio", cost.r, "Fraction of tokens kept")->required();
  flops->add_option("--tiles", cost.tiles, "Number of local regions")->capture_default_str();
  flops->add_flag("--with-adds", with_adds, "Also report multiply-add FLOPs (x2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    toma::set_num_threads(threads);

    if (*gen) {
      const auto states = toma::drift_sequence(synth);
      for (std::size_t t = 0; t < states.size(); ++t) {
        const auto path = step_path(gen_out, t, states.size());
        toma::write_tensor_file(path, states[t]);
        std::cout << path.string() << '\n';
      }
    } else if (*run) {
      run_opts.layout = toma::parse_layout_kind(layout_name);
      run_opts.config.unmerge =
          unmerge_name == "pinv" ? toma::UnmergeMode::kPinv : toma::UnmergeMode::kTranspose;
      run_opts.config.merge.scale_by_sqrt_d = !no_sqrt_d;
      run_opts.config.merge.cosine_logits = !dot_logits;
      std::vector<toma::TokenMatrix> states;
      for (const auto& path : inputs) states.push_back(toma::read_tensor_file(path));
      const toma::RunReport report = toma::execute_run(states, run_opts);
      emit(toma::to_json(report).dump(2), run_out);
    } else if (*bench) {
      const auto rows = toma::bench_merge_unmerge(bench_opts);
      emit(bench_csv ? toma::bench_csv(rows) : toma::to_json(rows, bench_opts).dump(2), bench_out);
    } else if (*flops) {
      emit(toma::to_json(toma::cost_report(cost), with_adds).dump(2), "");
    }
  } catch (const toma::InvalidArgument& e) {
    return fail("usage", e.what(), kExitUsage);
  } catch (const toma::DataError& e) {
    return fail("data", e.what(), kExitData);
  } catch (const toma::NumericalError& e) {
    return fail("numerical", e.what(), kExitNumerical);
  }
  return 0;
}
