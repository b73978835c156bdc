#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vda/assimilate.hpp"
#include "vda/codec.hpp"
#include "vda/field.hpp"
#include "vda/sweep.hpp"

namespace vda {

enum class TauRule { Fixed, SqrtSigma1 };
enum class CodecKind { Neural, Linear };

/// Everything the command-line tool reads from its JSON configuration file.
/// Field defaults apply when a key is absent; command-line flags override both.
struct RunConfig {
  std::uint64_t seed = 0;

  std::filesystem::path data_path = "data.vdaf";
  SynthConfig synth{Grid3{16, 16, 8}, 200};
  double split = 0.8;
  std::optional<NormMode> normalization = NormMode::PerLocation;  // nullopt = raw units

  std::filesystem::path basis_path = "basis.vdab";
  std::size_t tau = 0;  // 0 = S
  TauRule tau_rule = TauRule::Fixed;

  std::filesystem::path codec_path = "codec.vdac";
  CodecKind codec_kind = CodecKind::Neural;
  std::size_t latent = 16;
  std::vector<std::size_t> hidden;  // empty = {4 * latent}
  Activation activation = Activation::PReLU;
  TrainConfig train;
  std::filesystem::path train_log = "train.csv";

  double sigma0 = 0.005;
  std::optional<double> sigma_l;
  SolveOptions solve;
  bool noise = false;
  std::size_t max_steps = 0;
  Pipeline pipeline = Pipeline::Mono;
  ObsCount obs = ObsCount::of_state(1.0);

  std::vector<std::size_t> sweep_taus;
  std::vector<ObsCount> sweep_obs;
  std::vector<Pipeline> sweep_pipelines{Pipeline::Mono};
  std::size_t repetitions = 5;
  bool timing = false;

  std::filesystem::path report_path = "report.csv";
  std::filesystem::path compare_path = "compare.csv";
  bool compare_linear = false;
};

/// Parses JSON text. Unknown keys and out-of-range values raise
/// InvalidArgument; malformed JSON raises InvalidArgument too.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Range checks shared by every subcommand.
void validate_common(const RunConfig& cfg);

Pipeline parse_pipeline(std::string_view name);
Solver parse_solver(std::string_view name);
std::optional<NormMode> parse_normalization(std::string_view name);
TauRule parse_tau_rule(std::string_view name);

}  // namespace vda
