#include "mfctrl/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mfctrl/policy_io.hpp"
#include "mfctrl/rollout.hpp"

namespace mfctrl::cli {

DiagonalWeights WeightOverrides::Apply(DiagonalWeights base) const {
  if (q) base.q = *q;
  if (r) base.r = *r;
  if (q_terminal) base.q_terminal = *q_terminal;
  return base;
}

void RunConfig::Validate() const {
  if (threads < 0) throw ConfigError("run.threads must be >= 0");
  if (out_dir.empty()) throw ConfigError("run.out_dir must not be empty");
  if (rollouts < 1) throw ConfigError("noise.rollouts must be >= 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ConfigError("noise.epsilon must lie in [0, 1)");
  }
  if (epsilons.empty()) throw ConfigError("noise.epsilons must not be empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0 && epsilons[i] < 1.0)) {
      throw ConfigError("noise.epsilons entries must lie in [0, 1)");
    }
    if (i > 0 && !(epsilons[i] > epsilons[i - 1])) {
      throw ConfigError("noise.epsilons must be strictly ascending");
    }
  }
  if (bench_repeats < 1) throw ConfigError("bench.repeats must be >= 1");
  for (const auto& name : bench_envs) {
    bool known = false;
    for (const auto& b : BuiltinEnvironments()) known = known || b == name;
    if (!known) throw ConfigError("bench.envs: unknown environment '" + name + "'");
  }
  for (int n : bench_samples) {
    if (n < 0) throw ConfigError("bench.n_samples entries must be >= 0");
  }
  for (double h : bench_fd_steps) {
    if (!(h > 0.0)) throw ConfigError("bench.fd_steps entries must be > 0");
  }
  try {
    optimizer.Validate();
    const EnvironmentPtr e = MakeEnvironment(*this);
    optimizer.estimator.Validate(e->state_dim(), e->control_dim());
    CostWeights(*this).ToCost(e->spec());
    FeedbackWeights(*this).ToCost(e->spec());
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

template <typename Int>
Int ParseInteger(const std::string& text) {
  Int value{};
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(text.data(), last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ContractViolation("not an integer: '" + text + "'");
  }
  return value;
}

double ParseReal(const std::string& text) {
  const double v = ParseDouble(text);
  if (!std::isfinite(v)) throw ContractViolation("not a finite number: '" + text + "'");
  return v;
}

bool ParseBool(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ContractViolation("expected true or false, got '" + text + "'");
}

std::vector<double> ParseRealList(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : SplitList(text)) out.push_back(ParseReal(item));
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::set<std::string>& EnvKeys(const std::string& env) {
  static const std::set<std::string> linear = {"name", "horizon"};
  static const std::set<std::string> pendulum = {
      "name",    "horizon", "dt",      "substeps",    "mass",
      "length",  "gravity", "damping", "torque_limit"};
  static const std::set<std::string> cartpole = {
      "name",      "horizon",   "dt",      "substeps",   "cart_mass",
      "pole_mass", "pole_half_length", "gravity", "force_limit"};
  if (env == "linear_test") return linear;
  if (env == "pendulum") return pendulum;
  if (env == "cartpole") return cartpole;
  throw ContractViolation("unknown environment '" + env +
                          "' (expected linear_test, pendulum or cartpole)");
}

void SetEnvKey(RunConfig& c, const std::string& key, const std::string& v) {
  auto& p = c.pendulum;
  auto& k = c.cartpole;
  const bool pend = c.env == "pendulum";
  if (key == "horizon") {
    const int n = ParseInteger<int>(v);
    if (n < 1) throw ContractViolation("horizon must be >= 1");
    if (c.env == "linear_test") {
      c.linear_horizon = n;
    } else {
      (pend ? p.horizon : k.horizon) = n;
    }
  } else if (key == "dt") {
    (pend ? p.dt : k.dt) = ParseReal(v);
  } else if (key == "substeps") {
    (pend ? p.substeps : k.substeps) = ParseInteger<int>(v);
  } else if (key == "gravity") {
    (pend ? p.gravity : k.gravity) = ParseReal(v);
  } else if (key == "mass") {
    p.mass = ParseReal(v);
  } else if (key == "length") {
    p.length = ParseReal(v);
  } else if (key == "damping") {
    p.damping = ParseReal(v);
  } else if (key == "torque_limit") {
    p.torque_limit = ParseReal(v);
  } else if (key == "cart_mass") {
    k.cart_mass = ParseReal(v);
  } else if (key == "pole_mass") {
    k.pole_mass = ParseReal(v);
  } else if (key == "pole_half_length") {
    k.pole_half_length = ParseReal(v);
  } else if (key == "force_limit") {
    k.force_limit = ParseReal(v);
  }
}

std::map<std::string, std::map<std::string, Setter>> BuildSetters() {
  std::map<std::string, std::map<std::string, Setter>> s;
  auto& run = s["run"];
  run["seed"] = [](RunConfig& c, const std::string& v) {
    c.seed = ParseInteger<std::uint64_t>(v);
  };
  run["threads"] = [](RunConfig& c, const std::string& v) {
    c.threads = ParseInteger<int>(v);
  };
  run["out_dir"] = [](RunConfig& c, const std::string& v) { c.out_dir = v; };
  run["record_wall_time"] = [](RunConfig& c, const std::string& v) {
    c.record_wall_time = ParseBool(v);
  };
  run["trajectory"] = [](RunConfig& c, const std::string& v) { c.trajectory = v; };
  run["policy"] = [](RunConfig& c, const std::string& v) { c.policy = v; };

  for (const char* section : {"cost", "feedback"}) {
    const bool is_cost = std::string(section) == "cost";
    auto pick = [is_cost](RunConfig& c) -> WeightOverrides& {
      return is_cost ? c.cost : c.feedback;
    };
    auto& sec = s[section];
    sec["q"] = [pick](RunConfig& c, const std::string& v) {
      const auto list = ParseRealList(v);
      pick(c).q = Eigen::Map<const Eigen::VectorXd>(
          list.data(), static_cast<Eigen::Index>(list.size()));
    };
    sec["r"] = [pick](RunConfig& c, const std::string& v) { pick(c).r = ParseReal(v); };
    sec["q_terminal"] = [pick](RunConfig& c, const std::string& v) {
      pick(c).q_terminal = ParseReal(v);
    };
  }

  auto& opt = s["optimizer"];
  opt["mu"] = [](RunConfig& c, const std::string& v) { c.optimizer.mu = ParseReal(v); };
  opt["mu_factor"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.mu_factor = ParseReal(v);
  };
  opt["mu_min"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.mu_min = ParseReal(v);
  };
  opt["mu_max"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.mu_max = ParseReal(v);
  };
  opt["decay_mu"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.decay_mu = ParseBool(v);
  };
  opt["alphas"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.alphas = ParseRealList(v);
  };
  opt["band"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.band = ParseReal(v);
  };
  opt["conv_tol"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.conv_tol = ParseReal(v);
  };
  opt["conv_patience"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.conv_patience = ParseInteger<int>(v);
  };
  opt["max_iters"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.max_iters = ParseInteger<int>(v);
  };

  auto& est = s["estimator"];
  est["n_samples"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.estimator.n_samples = ParseInteger<int>(v);
  };
  est["sigma"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.estimator.sigma = ParseReal(v);
  };
  est["approx_identity"] = [](RunConfig& c, const std::string& v) {
    c.optimizer.estimator.approx_identity = ParseBool(v);
  };

  auto& noise = s["noise"];
  noise["channel"] = [](RunConfig& c, const std::string& v) {
    c.channel = ParseNoiseChannel(v);
  };
  noise["epsilon"] = [](RunConfig& c, const std::string& v) { c.epsilon = ParseReal(v); };
  noise["rollouts"] = [](RunConfig& c, const std::string& v) {
    c.rollouts = ParseInteger<int>(v);
  };
  noise["epsilons"] = [](RunConfig& c, const std::string& v) {
    c.epsilons = ParseRealList(v);
  };
  noise["antithetic"] = [](RunConfig& c, const std::string& v) {
    c.antithetic = ParseBool(v);
  };
  noise["open_loop_baseline"] = [](RunConfig& c, const std::string& v) {
    c.open_loop_baseline = ParseBool(v);
  };

  auto& bench = s["bench"];
  bench["envs"] = [](RunConfig& c, const std::string& v) { c.bench_envs = SplitList(v); };
  bench["n_samples"] = [](RunConfig& c, const std::string& v) {
    c.bench_samples.clear();
    for (const auto& item : SplitList(v)) c.bench_samples.push_back(ParseInteger<int>(item));
  };
  bench["fd_steps"] = [](RunConfig& c, const std::string& v) {
    c.bench_fd_steps = ParseRealList(v);
  };
  bench["repeats"] = [](RunConfig& c, const std::string& v) {
    c.bench_repeats = ParseInteger<int>(v);
  };
  return s;
}

std::string At(const std::string& source, int line) {
  return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

RunConfig ParseConfig(std::istream& in, const std::string& source) {
  static const auto setters = BuildSetters();
  std::map<std::string, std::map<std::string, Entry>> entries;
  std::map<std::string, Entry> env_entries;

  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = Trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(At(source, line_no) + "malformed section header");
      section = Trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "env" && !setters.contains(section)) {
        throw ConfigError(At(source, line_no) + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(At(source, line_no) + "expected 'key = value'");
    }
    if (section.empty()) {
      throw ConfigError(At(source, line_no) + "key outside of any [section]");
    }
    const std::string key = Trim(std::string_view(line).substr(0, eq));
    const std::string value = Trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(At(source, line_no) + "empty key");
    auto& bucket = section == "env" ? env_entries : entries[section];
    if (bucket.contains(key)) {
      throw ConfigError(At(source, line_no) + "duplicate key '" + key + "' in [" +
                        section + "] (first set on line " +
                        std::to_string(bucket[key].line) + ")");
    }
    if (section != "env" && !setters.at(section).contains(key)) {
      throw ConfigError(At(source, line_no) + "unknown key '" + key + "' in [" +
                        section + "]");
    }
    bucket[key] = Entry{value, line_no};
  }

  RunConfig config;
  auto apply = [&](int line, auto&& fn) {
    try {
      fn();
    } catch (const ContractViolation& e) {
      throw ConfigError(At(source, line) + e.what());
    }
  };

  if (auto it = env_entries.find("name"); it != env_entries.end()) {
    apply(it->second.line, [&] {
      EnvKeys(it->second.value);
      config.env = it->second.value;
    });
  }
  const auto& allowed = EnvKeys(config.env);
  for (const auto& [key, entry] : env_entries) {
    if (!allowed.contains(key)) {
      throw ConfigError(At(source, entry.line) + "unknown key '" + key +
                        "' in [env] for environment " + config.env);
    }
    if (key == "name") continue;
    apply(entry.line, [&] { SetEnvKey(config, key, entry.value); });
  }
  for (const auto& [sec, keys] : entries) {
    for (const auto& [key, entry] : keys) {
      apply(entry.line, [&] { setters.at(sec).at(key)(config, entry.value); });
    }
  }
  try {
    config.Validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return config;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return ParseConfig(in, path.string());
}

namespace {

std::string JoinReals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += FormatDouble(values[i]);
  }
  return out;
}

std::string JoinVector(const Eigen::VectorXd& v) {
  return JoinReals(std::vector<double>(v.data(), v.data() + v.size()));
}

void WriteWeights(std::ostream& out, const char* section, const DiagonalWeights& w) {
  out << "\n[" << section << "]\n";
  out << "q = " << JoinVector(w.q) << '\n';
  out << "r = " << FormatDouble(w.r) << '\n';
  out << "q_terminal = " << FormatDouble(w.q_terminal) << '\n';
}

}  // namespace

void WriteConfig(std::ostream& out, const RunConfig& c) {
  const auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[run]\n";
  out << "seed = " << c.seed << '\n';
  out << "threads = " << c.threads << '\n';
  out << "out_dir = " << c.out_dir << '\n';
  out << "record_wall_time = " << b(c.record_wall_time) << '\n';
  if (!c.trajectory.empty()) out << "trajectory = " << c.trajectory << '\n';
  if (!c.policy.empty()) out << "policy = " << c.policy << '\n';

  out << "\n[env]\nname = " << c.env << '\n';
  if (c.env == "linear_test") {
    out << "horizon = " << c.linear_horizon << '\n';
  } else if (c.env == "pendulum") {
    const auto& p = c.pendulum;
    out << "horizon = " << p.horizon << '\n'
        << "dt = " << FormatDouble(p.dt) << '\n'
        << "substeps = " << p.substeps << '\n'
        << "mass = " << FormatDouble(p.mass) << '\n'
        << "length = " << FormatDouble(p.length) << '\n'
        << "gravity = " << FormatDouble(p.gravity) << '\n'
        << "damping = " << FormatDouble(p.damping) << '\n'
        << "torque_limit = " << FormatDouble(p.torque_limit) << '\n';
  } else {
    const auto& k = c.cartpole;
    out << "horizon = " << k.horizon << '\n'
        << "dt = " << FormatDouble(k.dt) << '\n'
        << "substeps = " << k.substeps << '\n'
        << "cart_mass = " << FormatDouble(k.cart_mass) << '\n'
        << "pole_mass = " << FormatDouble(k.pole_mass) << '\n'
        << "pole_half_length = " << FormatDouble(k.pole_half_length) << '\n'
        << "gravity = " << FormatDouble(k.gravity) << '\n'
        << "force_limit = " << FormatDouble(k.force_limit) << '\n';
  }

  WriteWeights(out, "cost", CostWeights(c));
  WriteWeights(out, "feedback", FeedbackWeights(c));

  const auto& o = c.optimizer;
  out << "\n[optimizer]\n"
      << "mu = " << FormatDouble(o.mu) << '\n'
      << "mu_factor = " << FormatDouble(o.mu_factor) << '\n'
      << "mu_min = " << FormatDouble(o.mu_min) << '\n'
      << "mu_max = " << FormatDouble(o.mu_max) << '\n'
      << "decay_mu = " << b(o.decay_mu) << '\n'
      << "alphas = " << JoinReals(o.alphas) << '\n'
      << "band = " << FormatDouble(o.band) << '\n'
      << "conv_tol = " << FormatDouble(o.conv_tol) << '\n'
      << "conv_patience = " << o.conv_patience << '\n'
      << "max_iters = " << o.max_iters << '\n';

  out << "\n[estimator]\n"
      << "n_samples = " << o.estimator.n_samples << '\n'
      << "sigma = " << FormatDouble(o.estimator.sigma) << '\n'
      << "approx_identity = " << b(o.estimator.approx_identity) << '\n';

  out << "\n[noise]\n"
      << "channel = " << ToString(c.channel) << '\n'
      << "epsilon = " << FormatDouble(c.epsilon) << '\n'
      << "rollouts = " << c.rollouts << '\n'
      << "epsilons = " << JoinReals(c.epsilons) << '\n'
      << "antithetic = " << b(c.antithetic) << '\n'
      << "open_loop_baseline = " << b(c.open_loop_baseline) << '\n';

  out << "\n[bench]\nenvs = ";
  for (std::size_t i = 0; i < c.bench_envs.size(); ++i) {
    out << (i ? ", " : "") << c.bench_envs[i];
  }
  out << "\nn_samples = ";
  for (std::size_t i = 0; i < c.bench_samples.size(); ++i) {
    out << (i ? ", " : "") << c.bench_samples[i];
  }
  out << "\nfd_steps = " << JoinReals(c.bench_fd_steps) << '\n'
      << "repeats = " << c.bench_repeats << '\n';
}

EnvironmentPtr MakeEnvironment(const RunConfig& c) {
  if (c.env == "linear_test") return MakeLinearTest(c.linear_horizon);
  if (c.env == "pendulum") return std::make_shared<PendulumEnvironment>(c.pendulum);
  if (c.env == "cartpole") return std::make_shared<CartPoleEnvironment>(c.cartpole);
  throw ConfigError("unknown environment '" + c.env + "'");
}

DiagonalWeights CostWeights(const RunConfig& c) {
  return c.cost.Apply(DefaultWeights(c.env));
}

DiagonalWeights FeedbackWeights(const RunConfig& c) {
  return c.feedback.Apply(CostWeights(c));
}

std::uint64_t TrainSeed(const RunConfig& c) { return DeriveSeed(c.seed, 1); }
std::uint64_t FeedbackSeed(const RunConfig& c) { return DeriveSeed(c.seed, 2); }
std::uint64_t NoiseSeed(const RunConfig& c) { return DeriveSeed(c.seed, 3); }
std::uint64_t BenchSeed(const RunConfig& c) { return DeriveSeed(c.seed, 4); }

}  // namespace mfctrl::cli
