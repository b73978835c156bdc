#include "vda/cli.hpp"

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "vda/assimilate.hpp"
#include "vda/codec.hpp"
#include "vda/config.hpp"
#include "vda/error.hpp"
#include "vda/field_io.hpp"
#include "vda/reduced_space.hpp"
#include "vda/report.hpp"
#include "vda/rng.hpp"
#include "vda/sweep.hpp"

namespace vda {
namespace {

constexpr const char* kFooter = R"(Exit codes:
  0  success
  1  usage error (unknown subcommand or flag, bad flag value)
  2  invalid configuration (rejected before any compute)
  3  file missing, unreadable or malformed
  4  component failure (divergence, non-finite values, unsupported setup)
Errors are reported on stderr as one line: error: code=<name> msg=<text>
Environment: VDA_NUM_THREADS sets the number of worker threads.)";

// Collects flag values and applies only the flags actually given, so that
// flags override the config file, which overrides built-in defaults.
class Overrides {
 public:
  template <typename T, typename Fn>
  CLI::Option* option(CLI::App* app, const std::string& name, const std::string& desc, Fn apply) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, desc);
    actions_.push_back([opt, value, apply](RunConfig& cfg) {
      if (opt->count() > 0) apply(cfg, *value);
    });
    return opt;
  }

  template <typename Fn>
  CLI::Option* flag(CLI::App* app, const std::string& name, const std::string& desc, Fn apply) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = app->add_flag(name, *value, desc);
    actions_.push_back([opt, apply](RunConfig& cfg) {
      if (opt->count() > 0) apply(cfg);
    });
    return opt;
  }

  void apply(RunConfig& cfg) const {
    for (const auto& a : actions_) a(cfg);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> actions_;
};

struct Subcommand {
  explicit Subcommand(CLI::App* a) : app(a) {}
  CLI::App* app = nullptr;
  std::string config_path;
  Overrides overrides;
};

void add_common(Subcommand& sc) {
  sc.app->add_option("-c,--config", sc.config_path, "JSON configuration file");
  sc.overrides.option<std::uint64_t>(sc.app, "--seed", "master seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
  sc.overrides.option<std::string>(sc.app, "--data", "field series file (VDAF)",
                                   [](RunConfig& c, const std::string& v) { c.data_path = v; });
}

void add_data_options(Subcommand& sc) {
  sc.overrides.option<double>(sc.app, "--split", "training fraction of the series", [](RunConfig& c, double v) { c.split = v; });
  sc.overrides.option<std::string>(sc.app, "--normalization", "per-location | scalar | none",
                                   [](RunConfig& c, const std::string& v) { c.normalization = parse_normalization(v); });
}

void add_assim_options(Subcommand& sc) {
  auto& o = sc.overrides;
  o.option<std::string>(sc.app, "--basis", "basis checkpoint (VDAB)", [](RunConfig& c, const std::string& v) { c.basis_path = v; });
  o.option<std::string>(sc.app, "--codec", "codec checkpoint (VDAC)", [](RunConfig& c, const std::string& v) { c.codec_path = v; });
  o.option<double>(sc.app, "--sigma0", "observation error std", [](RunConfig& c, double v) { c.sigma0 = v; });
  o.option<double>(sc.app, "--sigma-l", "latent observation error std (default sigma0)",
                   [](RunConfig& c, double v) { c.sigma_l = v; });
  o.option<std::string>(sc.app, "--solver", "lbfgs | closed",
                        [](RunConfig& c, const std::string& v) { c.solve.solver = parse_solver(v); });
  o.flag(sc.app, "--noise", "add N(0, sigma0^2) noise to the observations", [](RunConfig& c) { c.noise = true; });
  o.option<std::size_t>(sc.app, "--max-steps", "assimilate at most this many test steps (0 = all)",
                        [](RunConfig& c, std::size_t v) { c.max_steps = v; });
  o.option<std::string>(sc.app, "-o,--out", "output CSV", [](RunConfig& c, const std::string& v) {
    c.report_path = v;
    c.compare_path = v;
  });
}

// ---------------------------------------------------------------------------

struct Prepared {
  FieldSeries train;  // normalized
  FieldSeries test;   // normalized
  std::optional<NormStats> stats;
  BackgroundMatrix background;
};

Prepared prepare_data(const RunConfig& cfg) {
  const FieldSeries raw = load_series(cfg.data_path);
  auto [train, test] = split_series(raw, cfg.split);
  Prepared p;
  if (cfg.normalization) {
    p.stats = compute_norm_stats(train, *cfg.normalization);
    p.train = apply_normalization(train, *p.stats);
    p.test = apply_normalization(test, *p.stats);
  } else {
    p.train = std::move(train);
    p.test = std::move(test);
  }
  p.background = build_background_matrix(p.train);
  return p;
}

void require_input(const std::filesystem::path& path, const char* what) {
  require(std::filesystem::is_regular_file(path), ErrorCode::Io, std::string(what) + " not found: " + path.string());
}

void require_output(const std::filesystem::path& path) {
  const auto parent = path.parent_path();
  require(parent.empty() || std::filesystem::is_directory(parent), ErrorCode::InvalidArgument,
          "output directory does not exist: " + parent.string());
}

void log(const std::string& msg) { std::cerr << "vda: " << msg << '\n'; }

// Each command is split in two: validate() may read inputs but never writes
// or computes; run() does the work and writes outputs at the end.
struct Phases {
  std::function<void()> validate;
  std::function<void()> run;
};

Phases cmd_gen(const RunConfig& cfg) {
  return {[&] {
            cfg.synth.validate();
            require_output(cfg.data_path);
          },
          [&] {
            const FieldSeries s = generate_synthetic(cfg.synth, cfg.seed);
            save_series(s, cfg.data_path);
            log("wrote " + std::to_string(s.steps()) + " steps of " + std::to_string(s.points()) + " points to " +
                cfg.data_path.string());
          }};
}

Phases cmd_basis(const RunConfig& cfg, std::shared_ptr<Prepared> data) {
  return {[&, data] {
            require_input(cfg.data_path, "data file");
            require_output(cfg.basis_path);
            *data = prepare_data(cfg);
            const std::size_t s = data->background.samples();
            require(data->background.state_size() >= s, ErrorCode::InvalidArgument,
                    "basis: more training steps (" + std::to_string(s) + ") than grid points");
            if (cfg.tau_rule == TauRule::Fixed) {
              require(cfg.tau <= s, ErrorCode::InvalidArgument,
                      "basis: tau=" + std::to_string(cfg.tau) + " exceeds S=" + std::to_string(s));
            }
          },
          [&, data] {
            BasisCheckpoint ck;
            ck.factors = compute_svd(data->background);
            ck.mean = data->background.mean;
            ck.tau = cfg.tau_rule == TauRule::SqrtSigma1 ? select_tau_sqrt_sigma1(ck.factors.sigma)
                                                         : (cfg.tau == 0 ? ck.factors.rank_capacity() : cfg.tau);
            save_basis(ck, cfg.basis_path);
            log("basis: S=" + std::to_string(ck.factors.rank_capacity()) + " tau=" + std::to_string(ck.tau) +
                " sigma_1=" + format_double(ck.factors.sigma[0]));
          }};
}

FieldSeries centered(const FieldSeries& s, const Eigen::VectorXd& mean) { return mean_center(s, mean); }

Phases cmd_train(const RunConfig& cfg, std::shared_ptr<Prepared> data) {
  return {[&, data] {
            require_input(cfg.data_path, "data file");
            require_output(cfg.codec_path);
            if (cfg.codec_kind == CodecKind::Neural) require_output(cfg.train_log);
            *data = prepare_data(cfg);
            const std::size_t n = data->background.state_size();
            require(cfg.latent <= n, ErrorCode::InvalidArgument, "train: latent size exceeds the state size");
            if (cfg.codec_kind == CodecKind::Linear) {
              require(cfg.latent <= data->background.samples(), ErrorCode::InvalidArgument,
                      "train: a linear codec needs latent <= S");
              require(n >= data->background.samples(), ErrorCode::InvalidArgument, "train: more training steps than grid points");
            }
          },
          [&, data] {
            const std::size_t n = data->background.state_size();
            if (cfg.codec_kind == CodecKind::Linear) {
              const LinearCodec codec = make_linear_codec(compute_svd(data->background), cfg.latent);
              save_codec(codec, cfg.codec_path);
              log("linear codec m=" + std::to_string(cfg.latent) + " written to " + cfg.codec_path.string());
              return;
            }
            std::vector<std::size_t> widths{n};
            if (cfg.hidden.empty()) {
              widths.push_back(4 * cfg.latent);
            } else {
              widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
            }
            widths.push_back(cfg.latent);
            NeuralCodec codec(widths, cfg.activation);
            codec.initialize(derive_seed(cfg.seed, "codec-init"));
            TrainConfig tc = cfg.train;
            tc.seed = derive_seed(cfg.seed ^ cfg.train.seed, "codec-train");
            const FieldSeries train = centered(data->train, data->background.mean);
            const FieldSeries held = centered(data->test, data->background.mean);
            AdamState adam;
            const TrainReport rep = train_codec(codec, train, held, tc, &adam);
            const LatentGram lg = latent_gram(codec, train);

            std::ofstream out(cfg.train_log, std::ios::binary | std::ios::trunc);
            require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + cfg.train_log.string());
            out << "epoch,train_loss,held_loss\n";
            for (std::size_t e = 0; e < rep.train_loss.size(); ++e) {
              out << e << ',' << format_double(rep.train_loss[e]) << ',' << format_double(rep.held_loss[e]) << '\n';
            }
            out.flush();
            require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + cfg.train_log.string());
            save_codec(codec, cfg.codec_path, &adam);
            log("trained " + std::to_string(rep.train_loss.size()) + " epochs in " + format_double(rep.wall_seconds) +
                " s; final train loss " + (rep.train_loss.empty() ? std::string("n/a") : format_double(rep.train_loss.back())) +
                "; latent orthonormality score " + format_double(lg.score));
          }};
}

struct ModelInputs {
  Prepared data;
  std::optional<BasisCheckpoint> basis;
  std::shared_ptr<const Codec> codec;
};

void load_models(const RunConfig& cfg, ModelInputs& in, bool need_basis, bool need_codec, bool linear_from_basis) {
  require_input(cfg.data_path, "data file");
  if (need_basis) require_input(cfg.basis_path, "basis checkpoint");
  if (need_codec && !linear_from_basis) require_input(cfg.codec_path, "codec checkpoint");
  in.data = prepare_data(cfg);
  const std::size_t n = in.data.background.state_size();
  if (need_basis) {
    in.basis = load_basis(cfg.basis_path);
    require(static_cast<std::size_t>(in.basis->factors.U.rows()) == n, ErrorCode::InvalidArgument,
            "basis checkpoint state size does not match the data");
    require(in.basis->factors.rank_capacity() == in.data.background.samples(), ErrorCode::InvalidArgument,
            "basis checkpoint sample count does not match the training split");
  }
  if (need_codec) {
    if (linear_from_basis) {
      in.codec = std::make_shared<LinearCodec>(make_linear_codec(in.basis->factors, in.basis->factors.rank_capacity()));
    } else {
      CodecCheckpoint ck = load_codec(cfg.codec_path);
      in.codec = std::shared_ptr<const Codec>(std::move(ck.codec));
    }
    require(in.codec->input_dim() == n, ErrorCode::InvalidArgument, "codec input size does not match the data");
  }
}

SweepData sweep_data(ModelInputs& in) {
  SweepData sd;
  sd.test = in.data.test;
  sd.background = in.data.background;
  sd.stats = in.data.stats;
  sd.codec = in.codec;
  if (in.basis) {
    sd.factors = in.basis->factors;
    sd.background.mean = in.basis->mean;
  }
  return sd;
}

Phases cmd_assimilate(const RunConfig& cfg, std::shared_ptr<ModelInputs> in, std::shared_ptr<SweepConfig> sc) {
  return {[&, in, sc] {
            require_output(cfg.report_path);
            const bool mono = cfg.pipeline == Pipeline::Mono;
            load_models(cfg, *in, mono, !mono, false);
            const std::size_t n = in->data.background.state_size();
            sc->pipelines = {cfg.pipeline};
            sc->obs_counts = {cfg.obs};
            sc->sigma0 = cfg.sigma0;
            sc->sigma_l = cfg.sigma_l;
            sc->seed = cfg.seed;
            sc->noise = cfg.noise;
            sc->max_steps = cfg.max_steps;
            sc->solve = cfg.solve;
            sc->repetitions = 1;
            sc->propagate_errors = true;
            if (mono) {
              sc->taus = {cfg.tau == 0 ? in->basis->tau : cfg.tau};
            } else {
              require(cfg.obs.resolve(n) == n, ErrorCode::InvalidArgument,
                      "the bi pipeline observes the full state; set the observation count to n");
            }
            sc->validate(n, in->data.background.samples());
          },
          [&, in, sc] {
            std::vector<MetricRecord> rows = run_sweep(*sc, sweep_data(*in));
            std::vector<MetricRecord> steps;
            for (auto& r : rows) {
              if (r.step != "mean") steps.push_back(std::move(r));
            }
            export_report(steps, cfg.report_path);
            log("assimilated " + std::to_string(steps.size()) + " steps; report written to " + cfg.report_path.string());
          }};
}

Phases cmd_sweep(const RunConfig& cfg, std::shared_ptr<ModelInputs> in, std::shared_ptr<SweepConfig> sc) {
  return {[&, in, sc] {
            require_output(cfg.report_path);
            bool mono = false;
            bool bi = false;
            for (Pipeline p : cfg.sweep_pipelines) (p == Pipeline::Mono ? mono : bi) = true;
            load_models(cfg, *in, mono, bi, false);
            sc->pipelines = cfg.sweep_pipelines;
            sc->taus = cfg.sweep_taus;
            sc->obs_counts = cfg.sweep_obs.empty() ? std::vector<ObsCount>{cfg.obs} : cfg.sweep_obs;
            sc->sigma0 = cfg.sigma0;
            sc->sigma_l = cfg.sigma_l;
            sc->seed = cfg.seed;
            sc->noise = cfg.noise;
            sc->max_steps = cfg.max_steps;
            sc->solve = cfg.solve;
            sc->repetitions = cfg.repetitions;
            sc->timing = cfg.timing;
            sc->validate(in->data.background.state_size(), in->data.background.samples());
          },
          [&, in, sc] {
            const std::vector<MetricRecord> rows = run_sweep(*sc, sweep_data(*in));
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.step == "failed";
            export_report(rows, cfg.report_path);
            log("sweep wrote " + std::to_string(rows.size()) + " rows (" + std::to_string(failed) + " failed cells) to " +
                cfg.report_path.string());
          }};
}

Phases cmd_compare(const RunConfig& cfg, std::shared_ptr<ModelInputs> in, std::shared_ptr<CompareConfig> cc) {
  return {[&, in, cc] {
            require_output(cfg.compare_path);
            load_models(cfg, *in, true, true, cfg.compare_linear);
            cc->tau = cfg.tau;
            cc->sigma0 = cfg.sigma0;
            cc->sigma_l = cfg.sigma_l;
            cc->seed = cfg.seed;
            cc->noise = cfg.noise;
            cc->max_steps = cfg.max_steps;
            cc->solve = cfg.solve;
            require(cfg.tau <= in->basis->factors.rank_capacity(), ErrorCode::InvalidArgument, "compare: tau exceeds S");
          },
          [&, in, cc] {
            const std::vector<CompareRow> rows = run_compare(*cc, sweep_data(*in));
            export_compare(rows, cfg.compare_path);
            double worst = 0.0;
            double mono = 0.0, bi = 0.0, ref = 0.0;
            for (const auto& r : rows) {
              worst = std::max(worst, r.w_maxdiff);
              mono += r.mono_da_mse;
              bi += r.bi_da_mse;
              ref += r.ref_mse;
            }
            const double k = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
            log("compare: " + std::to_string(rows.size()) + " steps, mean ref " + format_double(ref / k) + ", mono " +
                format_double(mono / k) + ", bi " + format_double(bi / k) + ", max |w diff| " + format_double(worst));
          }};
}

int exit_for(ErrorCode code, bool validating) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::BadMagic:
    case ErrorCode::Truncated:
    case ErrorCode::DimensionOverflow:
    case ErrorCode::UnsupportedVersion:
      return kExitFormat;
    default:
      return validating ? kExitConfig : kExitComponent;
  }
}

void report_error(const char* code, const std::string& msg) {
  std::string one_line = msg;
  for (char& ch : one_line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: code=" << code << " msg=" << one_line << '\n';
}

void apply_thread_env() {
  if (const char* env = std::getenv("VDA_NUM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) omp_set_num_threads(static_cast<int>(v));
  }
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  apply_thread_env();
  CLI::App app{"Reduced-space and latent-space 3D-Var data assimilation", "vda"};
  app.footer(kFooter);
  app.require_subcommand(1);

  Subcommand gen{app.add_subcommand("gen", "generate a synthetic field series (VDAF)")};
  add_common(gen);
  {
    auto& o = gen.overrides;
    o.option<std::vector<std::size_t>>(gen.app, "--grid", "grid extents nx ny nz", [](RunConfig& c, const std::vector<std::size_t>& v) {
       require(v.size() == 3, ErrorCode::InvalidArgument, "--grid needs three extents");
       c.synth.grid.nx = v[0];
       c.synth.grid.ny = v[1];
       c.synth.grid.nz = v[2];
     })->expected(3);
    o.option<std::size_t>(gen.app, "--steps", "number of time steps", [](RunConfig& c, std::size_t v) { c.synth.steps = v; });
    o.option<std::size_t>(gen.app, "--modes", "number of spatial modes", [](RunConfig& c, std::size_t v) { c.synth.modes = v; });
    o.option<double>(gen.app, "--rho", "AR(1) coefficient", [](RunConfig& c, double v) { c.synth.rho = v; });
    o.option<double>(gen.app, "--nonlinearity", "strength of the tanh term", [](RunConfig& c, double v) { c.synth.nonlinearity = v; });
    o.option<double>(gen.app, "--amplitude", "field amplitude", [](RunConfig& c, double v) { c.synth.amplitude = v; });
    o.option<std::string>(gen.app, "-o,--out", "output VDAF file", [](RunConfig& c, const std::string& v) { c.data_path = v; });
  }

  Subcommand basis{app.add_subcommand("basis", "build the truncated SVD basis of the training split (VDAB)")};
  add_common(basis);
  add_data_options(basis);
  {
    auto& o = basis.overrides;
    o.option<std::size_t>(basis.app, "--tau", "truncation parameter (0 = S)", [](RunConfig& c, std::size_t v) {
      c.tau = v;
      c.tau_rule = TauRule::Fixed;
    });
    o.option<std::string>(basis.app, "--tau-rule", "fixed | sqrt-sigma1", [](RunConfig& c, const std::string& v) { c.tau_rule = parse_tau_rule(v); });
    o.option<std::string>(basis.app, "-o,--out", "output VDAB file", [](RunConfig& c, const std::string& v) { c.basis_path = v; });
  }

  Subcommand train{app.add_subcommand("train", "train a codec on the training split (VDAC + loss CSV)")};
  add_common(train);
  add_data_options(train);
  {
    auto& o = train.overrides;
    o.option<std::string>(train.app, "--kind", "neural | linear", [](RunConfig& c, const std::string& v) {
      require(v == "neural" || v == "linear", ErrorCode::InvalidArgument, "--kind must be neural or linear");
      c.codec_kind = v == "neural" ? CodecKind::Neural : CodecKind::Linear;
    });
    o.option<std::size_t>(train.app, "--latent", "latent size m", [](RunConfig& c, std::size_t v) { c.latent = v; });
    o.option<std::vector<std::size_t>>(train.app, "--hidden", "hidden encoder widths", [](RunConfig& c, const std::vector<std::size_t>& v) { c.hidden = v; });
    o.option<std::size_t>(train.app, "--epochs", "training epochs", [](RunConfig& c, std::size_t v) { c.train.epochs = v; });
    o.option<std::size_t>(train.app, "--batch-size", "mini-batch size", [](RunConfig& c, std::size_t v) { c.train.batch_size = v; });
    o.option<double>(train.app, "--lr", "Adam learning rate", [](RunConfig& c, double v) { c.train.adam.learning_rate = v; });
    o.option<std::string>(train.app, "--loss", "l2 | l1", [](RunConfig& c, const std::string& v) {
      require(v == "l2" || v == "l1", ErrorCode::InvalidArgument, "--loss must be l2 or l1");
      c.train.loss = v == "l2" ? LossKind::L2 : LossKind::L1;
    });
    o.option<std::vector<double>>(train.app, "--jitter", "field jitter amplitude and frequency", [](RunConfig& c, const std::vector<double>& v) {
       require(v.size() == 2, ErrorCode::InvalidArgument, "--jitter needs amplitude and frequency");
       JitterConfig j = c.train.jitter.value_or(JitterConfig{});
       j.amplitude = v[0];
       j.frequency = v[1];
       c.train.jitter = j;
     })->expected(2);
    o.option<std::string>(train.app, "-o,--out", "output VDAC file", [](RunConfig& c, const std::string& v) { c.codec_path = v; });
    o.option<std::string>(train.app, "--log", "training loss CSV", [](RunConfig& c, const std::string& v) { c.train_log = v; });
  }

  Subcommand assim{app.add_subcommand("assimilate", "assimilate every test step with one pipeline (report CSV)")};
  add_common(assim);
  add_data_options(assim);
  add_assim_options(assim);
  {
    auto& o = assim.overrides;
    o.option<std::string>(assim.app, "--pipeline", "mono | bi", [](RunConfig& c, const std::string& v) { c.pipeline = parse_pipeline(v); });
    o.option<std::size_t>(assim.app, "--tau", "truncation (0 = value stored in the basis)", [](RunConfig& c, std::size_t v) { c.tau = v; });
    o.option<std::size_t>(assim.app, "--obs-count", "number of observed locations", [](RunConfig& c, std::size_t v) { c.obs = ObsCount::absolute(v); });
    o.option<double>(assim.app, "--obs-fraction", "observed fraction of locations", [](RunConfig& c, double v) { c.obs = ObsCount::of_state(v); });
  }

  Subcommand sweep{app.add_subcommand("sweep", "tau x M tradeoff sweep (report CSV)")};
  add_common(sweep);
  add_data_options(sweep);
  add_assim_options(sweep);
  {
    auto& o = sweep.overrides;
    o.option<std::vector<std::size_t>>(sweep.app, "--taus", "truncation values", [](RunConfig& c, const std::vector<std::size_t>& v) { c.sweep_taus = v; });
    o.option<std::vector<std::size_t>>(sweep.app, "--obs-counts", "observation counts", [](RunConfig& c, const std::vector<std::size_t>& v) {
      c.sweep_obs.clear();
      for (std::size_t m : v) c.sweep_obs.push_back(ObsCount::absolute(m));
    });
    o.option<std::vector<double>>(sweep.app, "--obs-fractions", "observation fractions", [](RunConfig& c, const std::vector<double>& v) {
      c.sweep_obs.clear();
      for (double f : v) c.sweep_obs.push_back(ObsCount::of_state(f));
    });
    o.option<std::vector<std::string>>(sweep.app, "--pipelines", "mono and/or bi", [](RunConfig& c, const std::vector<std::string>& v) {
      c.sweep_pipelines.clear();
      for (const auto& p : v) c.sweep_pipelines.push_back(parse_pipeline(p));
    });
    o.option<std::size_t>(sweep.app, "--repetitions", "timing repetitions (median)", [](RunConfig& c, std::size_t v) { c.repetitions = v; });
    o.flag(sweep.app, "--timing", "serial timing mode with median-of-repetitions", [](RunConfig& c) { c.timing = true; });
  }

  Subcommand compare{app.add_subcommand("compare", "per-step mono versus bi comparison (compare CSV)")};
  add_common(compare);
  add_data_options(compare);
  add_assim_options(compare);
  {
    auto& o = compare.overrides;
    o.option<std::size_t>(compare.app, "--tau", "mono truncation (0 = S)", [](RunConfig& c, std::size_t v) { c.tau = v; });
    o.flag(compare.app, "--linear-codec", "use the linear codec Q = U (m = S) built from the basis", [](RunConfig& c) { c.compare_linear = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitUsage;
  }

  Subcommand* active = nullptr;
  for (Subcommand* sc : {&gen, &basis, &train, &assim, &sweep, &compare}) {
    if (sc->app->parsed()) active = sc;
  }
  if (active == nullptr) {
    report_error("usage", "no subcommand given");
    return kExitUsage;
  }

  RunConfig cfg;
  auto prepared = std::make_shared<Prepared>();
  auto models = std::make_shared<ModelInputs>();
  auto sweep_cfg = std::make_shared<SweepConfig>();
  auto compare_cfg = std::make_shared<CompareConfig>();
  Phases phases;
  bool validating = true;
  try {
    if (!active->config_path.empty()) cfg = load_run_config(active->config_path);
    active->overrides.apply(cfg);
    validate_common(cfg);
    if (active == &gen) phases = cmd_gen(cfg);
    if (active == &basis) phases = cmd_basis(cfg, prepared);
    if (active == &train) phases = cmd_train(cfg, prepared);
    if (active == &assim) phases = cmd_assimilate(cfg, models, sweep_cfg);
    if (active == &sweep) phases = cmd_sweep(cfg, models, sweep_cfg);
    if (active == &compare) phases = cmd_compare(cfg, models, compare_cfg);
    phases.validate();
    validating = false;
    phases.run();
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return exit_for(e.code(), validating);
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return validating ? kExitConfig : kExitComponent;
  }
  return kExitOk;
}

int run_command(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_command(static_cast<int>(argv.size()), argv.data());
}

}  // namespace vda
