#include "vda/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vda/error.hpp"

namespace vda {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  require(obj.is_object(), ErrorCode::InvalidArgument, "config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    require(ok.count(key) > 0, ErrorCode::InvalidArgument, "config: unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidArgument, "config: '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = get<T>(obj, key, where);
}

std::size_t read_count(const json& obj, const char* key, const std::string& where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 0, ErrorCode::InvalidArgument,
          "config: '" + where + "." + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<std::size_t> read_counts(const json& obj, const char* key, const std::string& where) {
  std::vector<std::size_t> out;
  const json& v = obj.at(key);
  require(v.is_array(), ErrorCode::InvalidArgument, "config: '" + where + "." + key + "' must be an array");
  for (const json& e : v) {
    require(e.is_number_integer() && e.get<long long>() >= 0, ErrorCode::InvalidArgument,
            "config: '" + where + "." + key + "' entries must be non-negative integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

void parse_synth(const json& j, RunConfig& cfg) {
  check_keys(j, "synth", {"grid", "spacing", "steps", "modes", "rho", "nonlinearity", "amplitude"});
  if (j.contains("grid")) {
    const auto g = read_counts(j, "grid", "synth");
    require(g.size() == 3, ErrorCode::InvalidArgument, "config: 'synth.grid' needs three extents");
    cfg.synth.grid.nx = g[0];
    cfg.synth.grid.ny = g[1];
    cfg.synth.grid.nz = g[2];
  }
  if (j.contains("spacing")) {
    const auto s = get<std::vector<double>>(j, "spacing", "synth");
    require(s.size() == 3, ErrorCode::InvalidArgument, "config: 'synth.spacing' needs three values");
    cfg.synth.grid.spacing = {s[0], s[1], s[2]};
  }
  cfg.synth.steps = read_count(j, "steps", "synth", cfg.synth.steps);
  cfg.synth.modes = read_count(j, "modes", "synth", cfg.synth.modes);
  read(j, "rho", "synth", cfg.synth.rho);
  read(j, "nonlinearity", "synth", cfg.synth.nonlinearity);
  read(j, "amplitude", "synth", cfg.synth.amplitude);
}

void parse_codec(const json& j, RunConfig& cfg) {
  check_keys(j, "codec", {"path", "kind", "latent", "hidden", "activation", "epochs", "batch_size", "learning_rate",
                          "beta1", "beta2", "epsilon", "loss", "jitter", "train_log", "seed"});
  if (j.contains("path")) cfg.codec_path = get<std::string>(j, "path", "codec");
  if (j.contains("kind")) {
    const auto k = get<std::string>(j, "kind", "codec");
    require(k == "neural" || k == "linear", ErrorCode::InvalidArgument, "config: 'codec.kind' must be neural or linear");
    cfg.codec_kind = k == "neural" ? CodecKind::Neural : CodecKind::Linear;
  }
  cfg.latent = read_count(j, "latent", "codec", cfg.latent);
  if (j.contains("hidden")) cfg.hidden = read_counts(j, "hidden", "codec");
  if (j.contains("activation")) {
    const auto a = get<std::string>(j, "activation", "codec");
    require(a == "prelu" || a == "identity", ErrorCode::InvalidArgument,
            "config: 'codec.activation' must be prelu or identity");
    cfg.activation = a == "prelu" ? Activation::PReLU : Activation::Identity;
  }
  cfg.train.epochs = read_count(j, "epochs", "codec", cfg.train.epochs);
  cfg.train.batch_size = read_count(j, "batch_size", "codec", cfg.train.batch_size);
  read(j, "learning_rate", "codec", cfg.train.adam.learning_rate);
  read(j, "beta1", "codec", cfg.train.adam.beta1);
  read(j, "beta2", "codec", cfg.train.adam.beta2);
  read(j, "epsilon", "codec", cfg.train.adam.epsilon);
  read(j, "seed", "codec", cfg.train.seed);
  if (j.contains("loss")) {
    const auto l = get<std::string>(j, "loss", "codec");
    require(l == "l2" || l == "l1", ErrorCode::InvalidArgument, "config: 'codec.loss' must be l2 or l1");
    cfg.train.loss = l == "l2" ? LossKind::L2 : LossKind::L1;
  }
  if (j.contains("jitter") && !j.at("jitter").is_null()) {
    const json& jj = j.at("jitter");
    check_keys(jj, "codec.jitter", {"amplitude", "frequency", "seed"});
    JitterConfig jc;
    read(jj, "amplitude", "codec.jitter", jc.amplitude);
    read(jj, "frequency", "codec.jitter", jc.frequency);
    read(jj, "seed", "codec.jitter", jc.seed);
    cfg.train.jitter = jc;
  }
  if (j.contains("train_log")) cfg.train_log = get<std::string>(j, "train_log", "codec");
}

std::vector<ObsCount> parse_obs_list(const json& j, const std::string& where) {
  std::vector<ObsCount> out;
  if (j.contains("obs_counts")) {
    for (std::size_t m : read_counts(j, "obs_counts", where)) out.push_back(ObsCount::absolute(m));
  }
  if (j.contains("obs_fractions")) {
    for (double f : get<std::vector<double>>(j, "obs_fractions", where)) out.push_back(ObsCount::of_state(f));
  }
  return out;
}

void parse_assimilation(const json& j, RunConfig& cfg) {
  check_keys(j, "assimilation", {"sigma0", "sigma_l", "solver", "noise", "max_steps", "pipeline", "obs_count",
                                 "obs_fraction", "grad_tol", "max_iterations", "memory"});
  read(j, "sigma0", "assimilation", cfg.sigma0);
  if (j.contains("sigma_l") && !j.at("sigma_l").is_null()) cfg.sigma_l = get<double>(j, "sigma_l", "assimilation");
  if (j.contains("solver")) cfg.solve.solver = parse_solver(get<std::string>(j, "solver", "assimilation"));
  read(j, "noise", "assimilation", cfg.noise);
  cfg.max_steps = read_count(j, "max_steps", "assimilation", cfg.max_steps);
  if (j.contains("pipeline")) cfg.pipeline = parse_pipeline(get<std::string>(j, "pipeline", "assimilation"));
  require(!(j.contains("obs_count") && j.contains("obs_fraction")), ErrorCode::InvalidArgument,
          "config: give either 'assimilation.obs_count' or 'assimilation.obs_fraction', not both");
  if (j.contains("obs_count")) cfg.obs = ObsCount::absolute(read_count(j, "obs_count", "assimilation", 0));
  if (j.contains("obs_fraction")) cfg.obs = ObsCount::of_state(get<double>(j, "obs_fraction", "assimilation"));
  read(j, "grad_tol", "assimilation", cfg.solve.lbfgs.grad_tol);
  cfg.solve.lbfgs.max_iterations = read_count(j, "max_iterations", "assimilation", cfg.solve.lbfgs.max_iterations);
  cfg.solve.lbfgs.memory = read_count(j, "memory", "assimilation", cfg.solve.lbfgs.memory);
}

void parse_sweep(const json& j, RunConfig& cfg) {
  check_keys(j, "sweep", {"taus", "obs_counts", "obs_fractions", "pipelines", "repetitions", "timing"});
  if (j.contains("taus")) cfg.sweep_taus = read_counts(j, "taus", "sweep");
  auto obs = parse_obs_list(j, "sweep");
  if (!obs.empty()) cfg.sweep_obs = std::move(obs);
  if (j.contains("pipelines")) {
    cfg.sweep_pipelines.clear();
    for (const auto& p : get<std::vector<std::string>>(j, "pipelines", "sweep")) cfg.sweep_pipelines.push_back(parse_pipeline(p));
  }
  cfg.repetitions = read_count(j, "repetitions", "sweep", cfg.repetitions);
  read(j, "timing", "sweep", cfg.timing);
}

}  // namespace

Pipeline parse_pipeline(std::string_view name) {
  if (name == "mono") return Pipeline::Mono;
  if (name == "bi") return Pipeline::Bi;
  fail(ErrorCode::InvalidArgument, "unknown pipeline '" + std::string(name) + "' (expected mono or bi)");
}

Solver parse_solver(std::string_view name) {
  if (name == "lbfgs") return Solver::Lbfgs;
  if (name == "closed") return Solver::ClosedForm;
  fail(ErrorCode::InvalidArgument, "unknown solver '" + std::string(name) + "' (expected lbfgs or closed)");
}

std::optional<NormMode> parse_normalization(std::string_view name) {
  if (name == "per-location") return NormMode::PerLocation;
  if (name == "scalar") return NormMode::Scalar;
  if (name == "none") return std::nullopt;
  fail(ErrorCode::InvalidArgument, "unknown normalization '" + std::string(name) + "'");
}

TauRule parse_tau_rule(std::string_view name) {
  if (name == "fixed") return TauRule::Fixed;
  if (name == "sqrt-sigma1") return TauRule::SqrtSigma1;
  fail(ErrorCode::InvalidArgument, "unknown tau rule '" + std::string(name) + "' (expected fixed or sqrt-sigma1)");
}

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  check_keys(root, "config", {"seed", "data", "synth", "split", "normalization", "basis", "codec", "assimilation",
                              "sweep", "output"});
  read(root, "seed", "config", cfg.seed);
  if (root.contains("data")) {
    check_keys(root.at("data"), "data", {"path"});
    if (root.at("data").contains("path")) cfg.data_path = get<std::string>(root.at("data"), "path", "data");
  }
  if (root.contains("synth")) parse_synth(root.at("synth"), cfg);
  read(root, "split", "config", cfg.split);
  if (root.contains("normalization")) cfg.normalization = parse_normalization(get<std::string>(root, "normalization", "config"));
  if (root.contains("basis")) {
    const json& b = root.at("basis");
    check_keys(b, "basis", {"path", "tau", "tau_rule"});
    if (b.contains("path")) cfg.basis_path = get<std::string>(b, "path", "basis");
    cfg.tau = read_count(b, "tau", "basis", cfg.tau);
    if (b.contains("tau_rule")) cfg.tau_rule = parse_tau_rule(get<std::string>(b, "tau_rule", "basis"));
  }
  if (root.contains("codec")) parse_codec(root.at("codec"), cfg);
  if (root.contains("assimilation")) parse_assimilation(root.at("assimilation"), cfg);
  if (root.contains("sweep")) parse_sweep(root.at("sweep"), cfg);
  if (root.contains("output")) {
    const json& o = root.at("output");
    check_keys(o, "output", {"report", "compare", "linear_codec"});
    if (o.contains("report")) cfg.report_path = get<std::string>(o, "report", "output");
    if (o.contains("compare")) cfg.compare_path = get<std::string>(o, "compare", "output");
    read(o, "linear_codec", "output", cfg.compare_linear);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::InvalidArgument, "config file not found: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

void validate_common(const RunConfig& cfg) {
  require(cfg.split > 0.0 && cfg.split < 1.0, ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  require(cfg.sigma0 > 0.0 && std::isfinite(cfg.sigma0), ErrorCode::InvalidArgument, "sigma0 must be positive");
  if (cfg.sigma_l) require(*cfg.sigma_l > 0.0 && std::isfinite(*cfg.sigma_l), ErrorCode::InvalidArgument, "sigma_l must be positive");
  require(cfg.latent >= 1, ErrorCode::InvalidArgument, "latent size must be at least 1");
  for (std::size_t h : cfg.hidden) require(h >= 1, ErrorCode::InvalidArgument, "hidden widths must be positive");
  require(cfg.repetitions >= 1, ErrorCode::InvalidArgument, "repetitions must be at least 1");
  cfg.train.validate();
  cfg.solve.lbfgs.validate();
}

}  // namespace vda
