#include "flocklab/core.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "flocklab/fft.hpp"

namespace flocklab {

const char* regime_name(Regime r) { return r == Regime::Diffusive ? "diffusive" : "diffusionless"; }

std::optional<Regime> parse_regime(const std::string& name) {
  if (name == "diffusive") return Regime::Diffusive;
  if (name == "diffusionless") return Regime::Diffusionless;
  return std::nullopt;
}

GridFn Grid1D::centers() const {
  GridFn x(n_cells);
  for (int j = 0; j < n_cells; ++j) x[j] = center(j);
  return x;
}

static std::string join_violations(const std::vector<ConfigViolation>& violations) {
  std::ostringstream os;
  os << "invalid config:";
  for (const auto& v : violations) os << " [" << v.field << "] " << v.message << ";";
  return os.str();
}

ConfigError::ConfigError(const std::vector<ConfigViolation>& v)
    : std::runtime_error(join_violations(v)), violations(v) {}

std::vector<ConfigViolation> validate_config(RunConfig& cfg) {
  std::vector<ConfigViolation> out;
  auto bad = [&out](const std::string& field, const std::string& message) {
    out.push_back({field, message});
  };

  ModelParams& p = cfg.params;
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) bad("epsilon", "must be positive and finite");
  for (const auto& [name, value] : {std::pair<const char*, double>{"gamma", p.gamma},
                                    {"lambda", p.lambda},
                                    {"alpha", p.alpha}}) {
    if (!(value >= 0.0) || !std::isfinite(value)) bad(name, "must be non-negative and finite");
  }
  if (p.epsilon > 0.0) {
    const double inv_eps = 1.0 / p.epsilon;
    if (p.beta < 0.0) p.beta = inv_eps;
    if (p.beta != inv_eps) bad("beta", "must equal 1/epsilon in this regime");
    if (p.regime == Regime::Diffusive) {
      if (p.sigma < 0.0) p.sigma = inv_eps;
      if (p.sigma != inv_eps) bad("sigma", "must equal 1/epsilon in the diffusive regime");
    } else {
      if (p.sigma < 0.0) p.sigma = 0.0;
      if (p.sigma != 0.0) bad("sigma", "must be 0 in the diffusionless regime");
    }
  }

  if (cfg.grid.n_cells <= 0 || !is_power_of_two(static_cast<std::size_t>(cfg.grid.n_cells)))
    bad("n_cells", "power of two required");
  if (cfg.grid.length != 1.0) bad("grid.length", "torus period is fixed to 1");
  if (cfg.grid.velocity) {
    const auto& vg = *cfg.grid.velocity;
    if (!(vg.v_min < vg.v_max)) bad("v_min", "velocity grid must have v_min < v_max");
    if (vg.n_v <= 0) bad("n_v", "velocity grid needs at least one cell");
  }

  if (cfg.n_particles <= 0) bad("n_particles", "must be positive");
  if (!(cfg.dt > 0.0)) bad("dt", "must be positive");
  if (!(cfg.t_final >= cfg.dt)) bad("t_final", "must be at least dt");
  if (cfg.snapshot_stride < 1) bad("snapshot_stride", "must be at least 1");
  if (!(cfg.eps_reg >= 0.0)) bad("eps_reg", "must be non-negative");
  if (cfg.potential.kind == PotentialSpec::Kind::CosineWell && !(cfg.potential.amplitude >= 0.0))
    bad("potential_amplitude", "must be non-negative");
  if (cfg.interaction.kind == InteractionChoice::Kind::Table && cfg.interaction.table_path.empty())
    bad("interaction_table", "table interaction requires a CSV path");
  if (cfg.weight.kind == WeightChoice::Kind::Table && cfg.weight.table_path.empty())
    bad("weight_table", "table weight requires a CSV path");
  if (!(std::abs(cfg.rho0_cos_amp) < 1.0)) bad("rho0_cos_amp", "initial density must stay positive");
  if (!std::isfinite(cfg.u0_sin_amp)) bad("u0_sin_amp", "must be finite");
  return out;
}

ValidatedConfig validate_or_throw(RunConfig cfg) {
  auto violations = validate_config(cfg);
  if (!violations.empty()) throw ConfigError(violations);
  return ValidatedConfig{std::move(cfg)};
}

// --- flat JSON config document ---------------------------------------------

namespace {

const std::vector<std::string> kKnownKeys = {
    "epsilon",        "regime",          "gamma",          "lambda",
    "alpha",          "beta",            "sigma",          "n_cells",
    "v_min",          "v_max",           "n_v",            "n_particles",
    "dt",             "t_final",         "seed",           "potential",
    "potential_amplitude", "interaction", "interaction_table", "weight",
    "weight_table",   "eps_reg",         "snapshot_stride", "output_dir",
    "dump_particles", "dealias",         "rho0_cos_amp",   "u0_sin_amp"};

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::vector<ConfigViolation>{{"<document>", e.what()}});
  }
  if (!doc.is_object()) throw ConfigError(std::vector<ConfigViolation>{{"<document>", "config must be a flat JSON object"}});

  std::vector<ConfigViolation> violations;
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      violations.push_back({key, "unknown key"});
  }
  if (!violations.empty()) throw ConfigError(violations);

  RunConfig cfg;
  cfg.params.beta = -1.0;   // unset; filled by validation from the regime
  cfg.params.sigma = -1.0;
  auto get = [&doc](const char* key, auto fallback) {
    using T = decltype(fallback);
    return doc.contains(key) ? doc.at(key).get<T>() : fallback;
  };

  cfg.params.epsilon = get("epsilon", 0.0);
  cfg.params.gamma = get("gamma", 0.0);
  cfg.params.lambda = get("lambda", 0.0);
  cfg.params.alpha = get("alpha", 0.0);
  cfg.params.beta = get("beta", -1.0);
  cfg.params.sigma = get("sigma", -1.0);
  const std::string regime = get("regime", std::string("diffusive"));
  if (auto r = parse_regime(regime)) {
    cfg.params.regime = *r;
  } else {
    throw ConfigError(std::vector<ConfigViolation>{{"regime", "expected 'diffusive' or 'diffusionless'"}});
  }

  cfg.grid.n_cells = get("n_cells", 0);
  VelocityGrid vg;
  vg.v_min = get("v_min", vg.v_min);
  vg.v_max = get("v_max", vg.v_max);
  vg.n_v = get("n_v", vg.n_v);
  cfg.grid.velocity = vg;

  cfg.n_particles = get("n_particles", 0L);
  cfg.dt = get("dt", 0.0);
  cfg.t_final = get("t_final", 0.0);
  cfg.seed = get("seed", std::uint64_t{0});

  const std::string potential = get("potential", std::string("zero"));
  if (potential == "zero") {
    cfg.potential.kind = PotentialSpec::Kind::Zero;
  } else if (potential == "cosine_well") {
    cfg.potential.kind = PotentialSpec::Kind::CosineWell;
  } else {
    throw ConfigError(std::vector<ConfigViolation>{{"potential", "expected 'zero' or 'cosine_well'"}});
  }
  cfg.potential.amplitude = get("potential_amplitude", 0.0);

  const std::string interaction = get("interaction", std::string("none"));
  if (interaction == "none") {
    cfg.interaction.kind = InteractionChoice::Kind::None;
  } else if (interaction == "coulomb") {
    cfg.interaction.kind = InteractionChoice::Kind::Coulomb;
  } else if (interaction == "sine") {
    cfg.interaction.kind = InteractionChoice::Kind::Sine;
  } else if (interaction == "table") {
    cfg.interaction.kind = InteractionChoice::Kind::Table;
  } else {
    throw ConfigError(std::vector<ConfigViolation>{{"interaction", "expected 'none', 'coulomb', 'sine' or 'table'"}});
  }
  cfg.interaction.table_path = get("interaction_table", std::string());

  const std::string weight = get("weight", std::string("constant"));
  if (weight == "zero") {
    cfg.weight.kind = WeightChoice::Kind::Zero;
  } else if (weight == "constant") {
    cfg.weight.kind = WeightChoice::Kind::Constant;
  } else if (weight == "cosine") {
    cfg.weight.kind = WeightChoice::Kind::Cosine;
  } else if (weight == "table") {
    cfg.weight.kind = WeightChoice::Kind::Table;
  } else {
    throw ConfigError(std::vector<ConfigViolation>{{"weight", "expected 'zero', 'constant', 'cosine' or 'table'"}});
  }
  cfg.weight.table_path = get("weight_table", std::string());

  cfg.eps_reg = get("eps_reg", 1e-8);
  cfg.snapshot_stride = get("snapshot_stride", 1);
  cfg.output_dir = get("output_dir", std::string("."));
  cfg.dump_particles = get("dump_particles", false);
  cfg.dealias = get("dealias", true);
  cfg.rho0_cos_amp = get("rho0_cos_amp", 0.3);
  cfg.u0_sin_amp = get("u0_sin_amp", 0.2);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::vector<ConfigViolation>{{"<file>", "cannot open " + path}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const RunConfig& cfg) {
  nlohmann::json doc;
  doc["epsilon"] = cfg.params.epsilon;
  doc["regime"] = regime_name(cfg.params.regime);
  doc["gamma"] = cfg.params.gamma;
  doc["lambda"] = cfg.params.lambda;
  doc["alpha"] = cfg.params.alpha;
  doc["beta"] = cfg.params.beta;
  doc["sigma"] = cfg.params.sigma;
  doc["n_cells"] = cfg.grid.n_cells;
  if (cfg.grid.velocity) {
    doc["v_min"] = cfg.grid.velocity->v_min;
    doc["v_max"] = cfg.grid.velocity->v_max;
    doc["n_v"] = cfg.grid.velocity->n_v;
  }
  doc["n_particles"] = cfg.n_particles;
  doc["dt"] = cfg.dt;
  doc["t_final"] = cfg.t_final;
  doc["seed"] = cfg.seed;
  doc["potential"] = cfg.potential.kind == PotentialSpec::Kind::Zero ? "zero" : "cosine_well";
  doc["potential_amplitude"] = cfg.potential.amplitude;
  switch (cfg.interaction.kind) {
    case InteractionChoice::Kind::None: doc["interaction"] = "none"; break;
    case InteractionChoice::Kind::Coulomb: doc["interaction"] = "coulomb"; break;
    case InteractionChoice::Kind::Sine: doc["interaction"] = "sine"; break;
    case InteractionChoice::Kind::Table: doc["interaction"] = "table"; break;
  }
  doc["interaction_table"] = cfg.interaction.table_path;
  switch (cfg.weight.kind) {
    case WeightChoice::Kind::Zero: doc["weight"] = "zero"; break;
    case WeightChoice::Kind::Constant: doc["weight"] = "constant"; break;
    case WeightChoice::Kind::Cosine: doc["weight"] = "cosine"; break;
    case WeightChoice::Kind::Table: doc["weight"] = "table"; break;
  }
  doc["weight_table"] = cfg.weight.table_path;
  doc["eps_reg"] = cfg.eps_reg;
  doc["snapshot_stride"] = cfg.snapshot_stride;
  doc["output_dir"] = cfg.output_dir;
  doc["dump_particles"] = cfg.dump_particles;
  doc["dealias"] = cfg.dealias;
  doc["rho0_cos_amp"] = cfg.rho0_cos_amp;
  doc["u0_sin_amp"] = cfg.u0_sin_amp;
  return doc.dump(2);
}

RunConfig default_experiment_config() {
  RunConfig cfg;
  cfg.params.epsilon = 0.1;
  cfg.params.gamma = 1.0;
  cfg.params.lambda = 1.0;
  cfg.params.alpha = 1.0;
  cfg.params.beta = -1.0;
  cfg.params.sigma = -1.0;
  cfg.params.regime = Regime::Diffusive;
  cfg.grid.n_cells = 128;
  cfg.grid.velocity = VelocityGrid{};
  cfg.n_particles = 200000;
  cfg.dt = 0.025;
  cfg.t_final = 0.5;
  cfg.seed = 20240801;
  cfg.potential.kind = PotentialSpec::Kind::Zero;
  cfg.interaction.kind = InteractionChoice::Kind::Sine;
  cfg.weight.kind = WeightChoice::Kind::Cosine;
  cfg.snapshot_stride = 2;
  return cfg;
}

GridFn initial_density(const RunConfig& cfg) {
  const GridFn x = cfg.grid.centers();
  return 1.0 + cfg.rho0_cos_amp * (2.0 * M_PI * x).cos();
}

GridFn initial_velocity(const RunConfig& cfg) {
  const GridFn x = cfg.grid.centers();
  return cfg.u0_sin_amp * (2.0 * M_PI * x).sin();
}

// --- deterministic chunked execution ---------------------------------------

int& global_thread_count() {
  static int n = 1;
  return n;
}

void parallel_chunks(long n_items, int n_threads,
                     const std::function<void(int chunk, long begin, long end)>& body) {
  if (n_items <= 0) return;
  const int chunks = kFixedChunks;
  const long per = (n_items + chunks - 1) / chunks;
  auto run_chunk = [&](int c) {
    const long begin = static_cast<long>(c) * per;
    const long end = std::min(n_items, begin + per);
    if (begin < end) body(c, begin, end);
  };
  if (n_threads <= 1) {
    for (int c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chunks) return;
      run_chunk(c);
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(n_threads, chunks);
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace flocklab
