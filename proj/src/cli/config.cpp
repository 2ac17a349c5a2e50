// Copyright 2026 The sage-opt Authors
// SPDX-License-Identifier: Apache-2.0

#include "sage/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <type_traits>

#include "sage/cli/csv.hpp"
#include "sage/optim.hpp"
#include "sage/theorylab.hpp"

namespace sage::cli {

std::string to_string(Subcommand s) {
  switch (s) {
    case Subcommand::verify_decomposition: return "verify-decomposition";
    case Subcommand::counterexample: return "counterexample";
    case Subcommand::motivating: return "motivating";
    case Subcommand::scale_invariance: return "scale-invariance";
    case Subcommand::toy2d: return "toy2d";
    case Subcommand::train: return "train";
  }
  return "unknown";
}

const std::vector<Subcommand>& all_subcommands() {
  static const std::vector<Subcommand> all{Subcommand::verify_decomposition, Subcommand::counterexample,
                                           Subcommand::motivating,           Subcommand::scale_invariance,
                                           Subcommand::toy2d,                Subcommand::train};
  return all;
}

std::optional<Subcommand> subcommand_from_string(std::string_view name) {
  for (Subcommand s : all_subcommands())
    if (to_string(s) == name) return s;
  return std::nullopt;
}

// ------------------------------------------------------------------ parsing

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_line(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

}  // namespace

const ConfigSection* ConfigText::find(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

ConfigText parse_config_text(std::string_view text) {
  ConfigText out;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_line(line_no, "unterminated section header");
      std::string name(trim(line.substr(1, line.size() - 2)));
      if (!subcommand_from_string(name)) fail_line(line_no, "unknown section [" + name + "]");
      if (!seen.insert(name).second) fail_line(line_no, "repeated section [" + name + "]");
      out.sections.push_back({name, {}, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail_line(line_no, "expected 'key = value'");
    if (out.sections.empty()) fail_line(line_no, "key outside a [subcommand] section");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) fail_line(line_no, "empty key");
    out.sections.back().entries.emplace_back(key, std::string(trim(line.substr(eq + 1))));
    out.sections.back().lines.push_back(line_no);
  }
  return out;
}

// ------------------------------------------------------------------- values

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto c = v.find(',', pos);
    out.emplace_back(trim(std::string_view(v).substr(pos, c == std::string::npos ? std::string::npos : c - pos)));
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return out;
}

template <typename T>
T parse_scalar(const std::string& s) {
  if constexpr (std::is_same_v<T, std::string>) {
    return s;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
  } else {
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if constexpr (std::is_unsigned_v<T>) {
      if (!s.empty() && s.front() == '-') throw ConfigError("expected a non-negative integer, got '" + s + "'");
    }
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (s.empty() || ec != std::errc() || ptr != e) throw ConfigError("cannot parse '" + s + "'");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) throw ConfigError("value must be finite, got '" + s + "'");
    }
    return v;
  }
}

template <typename T>
std::string format_scalar(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) return v;
  else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_floating_point_v<T>) return format_double(v);
  else return std::to_string(v);
}

template <typename T>
struct IsVector : std::false_type {};
template <typename T>
struct IsVector<std::vector<T>> : std::true_type {};

}  // namespace

template <typename T>
void KeyBinder::bind(std::string key, T& field) {
  Entry e;
  e.key = std::move(key);
  if constexpr (IsVector<T>::value) {
    using V = typename T::value_type;
    e.set = [&field](const std::string& s) {
      T out;
      for (const auto& item : split_list(s)) out.push_back(parse_scalar<V>(item));
      field = std::move(out);
    };
    e.get = [&field] {
      std::string out;
      for (std::size_t i = 0; i < field.size(); ++i) out += (i ? ", " : "") + format_scalar(field[i]);
      return out;
    };
  } else {
    e.set = [&field](const std::string& s) { field = parse_scalar<T>(s); };
    e.get = [&field] { return format_scalar(field); };
  }
  entries_.push_back(std::move(e));
}

template void KeyBinder::bind(std::string, double&);
template void KeyBinder::bind(std::string, int&);
template void KeyBinder::bind(std::string, std::uint64_t&);
template void KeyBinder::bind(std::string, bool&);
template void KeyBinder::bind(std::string, std::string&);
template void KeyBinder::bind(std::string, std::vector<double>&);
template void KeyBinder::bind(std::string, std::vector<std::size_t>&);
template void KeyBinder::bind(std::string, std::vector<std::string>&);

void KeyBinder::apply(const ConfigSection& section) const {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < section.entries.size(); ++i) {
    const auto& [key, value] = section.entries[i];
    const int line = i < section.lines.size() ? section.lines[i] : 0;
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    if (it == entries_.end()) fail_line(line, "unknown key '" + key + "' in [" + section.name + "]");
    if (!seen.insert(key).second) fail_line(line, "repeated key '" + key + "'");
    try {
      it->set(value);
    } catch (const ConfigError& e) {
      fail_line(line, "key '" + key + "': " + e.what());
    }
  }
}

std::string KeyBinder::echo() const {
  std::string out;
  for (const auto& e : entries_) {
    const std::string v = e.get();
    out += e.key + (v.empty() ? " =\n" : " = " + v + "\n");
  }
  return out;
}

// ------------------------------------------------------------------ structs

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void require_one_of(const std::string& v, std::initializer_list<const char*> options, const std::string& key) {
  for (const char* o : options)
    if (v == o) return;
  std::string list;
  for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
  throw ConfigError(key + " must be one of {" + list + "}, got '" + v + "'");
}

}  // namespace

void DecompositionConfig::bind(KeyBinder& b) {
  b.bind("family", family);
  b.bind("m", m);
  b.bind("ks", ks);
  b.bind("sigmas", sigmas);
  b.bind("trials", trials);
  b.bind("meta", meta);
  b.bind("solver", solver);
}

void DecompositionConfig::validate() const {
  require_one_of(family, {"flat_misaligned", "aligned_sharp", "zero"}, "family");
  require(m > 1.0, "m must be > 1");
  require(!ks.empty() && !sigmas.empty(), "ks and sigmas must be non-empty");
  for (auto k : ks) require(k >= 1, "every K must be >= 1");
  for (double s : sigmas) require(s >= 0.0, "every sigma must be >= 0");
  require(trials >= kMinTrials, "trials must be >= " + std::to_string(kMinTrials));
  require_one_of(meta, {"uniform_finite", "gaussian"}, "meta");
  require_one_of(solver, {"closed_form", "sgd"}, "solver");
}

void CounterexampleConfig::bind(KeyBinder& b) {
  b.bind("ms", ms);
  b.bind("variants", variants);
  b.bind("decoupling_replacements", decoupling_replacements);
}

void CounterexampleConfig::validate() const {
  require(!ms.empty(), "ms must be non-empty");
  for (double m : ms) require(m > 1.0, "every M must be > 1");
  require(!variants.empty(), "variants must be non-empty");
  for (const auto& v : variants) require_one_of(v, {"flat_misaligned", "aligned_sharp"}, "variants");
  require(decoupling_replacements >= 1, "decoupling_replacements must be >= 1");
}

void MotivatingConfig::bind(KeyBinder& b) {
  b.bind("mu_inv", mu_inv);
  b.bind("var_inv", var_inv);
  b.bind("mu_spur", mu_spur);
  b.bind("var_spur", var_spur);
  b.bind("delta", delta);
  b.bind("remainder_cubic", remainder_cubic);
  b.bind("remainder_ks", remainder_ks);
}

void MotivatingConfig::validate() const {
  require(var_inv > 0.0 && var_spur > 0.0, "variances must be > 0");
  for (auto k : remainder_ks) require(k >= 1, "every remainder K must be >= 1");
}

void ScaleInvarianceConfig::bind(KeyBinder& b) {
  b.bind("alphas", alphas);
  b.bind("train_steps", train_steps);
  b.bind("lr", lr);
  b.bind("rho", rho);
  b.bind("ns_iters", ns_iters);
  b.bind("adaptive_eta", adaptive_eta);
  b.bind("hidden", hidden);
  b.bind("init_std", init_std);
  b.bind("spectral_max_ratio", spectral_max_ratio);
  b.bind("sam_min_ratio", sam_min_ratio);
  b.bind("nobias_rel_tol", nobias_rel_tol);
}

void ScaleInvarianceConfig::validate() const {
  require(!alphas.empty(), "alphas must be non-empty");
  for (double a : alphas) require(a > 0.0, "every alpha must be > 0");
  require(lr > 0.0 && rho > 0.0, "lr and rho must be > 0");
  require(ns_iters >= 1, "ns_iters must be >= 1");
  require(adaptive_eta >= 0.0, "adaptive_eta must be >= 0");
  require(hidden >= 1 && init_std > 0.0, "hidden must be >= 1 and init_std > 0");
}

void Toy2dConfig::bind(KeyBinder& b) {
  b.bind("seeds", seeds);
  b.bind("steps", steps);
  b.bind("lr", lr);
  b.bind("rho", rho);
  b.bind("gamma", gamma);
  b.bind("sigma_sgld", sigma_sgld);
  b.bind("start", start);
  b.bind("start_jitter", start_jitter);
  b.bind("margin", margin);
  b.bind("steppers", steppers);
  b.bind("trajectory_stride", trajectory_stride);
}

void Toy2dConfig::validate() const {
  require(seeds >= 1 && steps >= 1, "seeds and steps must be >= 1");
  require(lr > 0.0 && rho > 0.0, "lr and rho must be > 0");
  require(gamma >= 0.0 && sigma_sgld >= 0.0 && start_jitter >= 0.0, "gamma, sigma_sgld and start_jitter must be >= 0");
  require(start.size() == 2, "start must have two coordinates");
  require(!steppers.empty(), "steppers must be non-empty");
  for (const auto& s : steppers) require_one_of(s, {"erm", "sam", "sgld", "sage_noise"}, "steppers");
  require(trajectory_stride >= 1, "trajectory_stride must be >= 1");
}

void TrainConfig::bind(KeyBinder& b) {
  b.bind("problem", problem);
  b.bind("stepper", stepper);
  b.bind("steps", steps);
  b.bind("base", base);
  b.bind("lr", lr);
  b.bind("adam_beta1", adam_beta1);
  b.bind("adam_beta2", adam_beta2);
  b.bind("adam_eps", adam_eps);
  b.bind("rule", rule);
  b.bind("rho", rho);
  b.bind("ns_iters", ns_iters);
  b.bind("adaptive_eta", adaptive_eta);
  b.bind("gamma", gamma);
  b.bind("sigma_sgld", sigma_sgld);
  b.bind("init", init);
  b.bind("quadratic_variant", quadratic_variant);
  b.bind("quadratic_m", quadratic_m);
  b.bind("mlp_bias", mlp_bias);
  b.bind("hidden", hidden);
  b.bind("target_tolerance", target_tolerance);
  b.bind("resume_from", resume_from);
}

void TrainConfig::validate() const {
  require_one_of(problem, {"gaussian_domains", "quadratic", "mlp", "toy2d"}, "problem");
  require_one_of(stepper, {"erm", "sam", "sgld", "sage"}, "stepper");
  require_one_of(base, {"sgd", "adam"}, "base");
  require_one_of(rule, {"sam_l2", "spectral", "adaptive_l2"}, "rule");
  require_one_of(quadratic_variant, {"flat_misaligned", "aligned_sharp"}, "quadratic_variant");
  require(quadratic_m > 1.0, "quadratic_m must be > 1");
  require(hidden >= 1, "hidden must be >= 1");
  require(target_tolerance >= 0.0, "target_tolerance must be >= 0");
  require(sigma_sgld >= 0.0, "sigma_sgld must be >= 0");
  try {
    PerturbationRule r{perturbation_kind_from_string(rule), rho, ns_iters, adaptive_eta};
    r.validate();
    SageConfig c{r, gamma, base == "sgd" ? BaseOptimizer(SgdBase{lr}) : BaseOptimizer(AdamBase{lr, adam_beta1, adam_beta2, adam_eps}), {}};
    c.validate(2);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

// --------------------------------------------------------------- resolution

RunConfig default_config(Subcommand s) {
  RunConfig cfg;
  cfg.subcommand = s;
  switch (s) {
    case Subcommand::verify_decomposition: cfg.params = DecompositionConfig{}; break;
    case Subcommand::counterexample: cfg.params = CounterexampleConfig{}; break;
    case Subcommand::motivating: cfg.params = MotivatingConfig{}; break;
    case Subcommand::scale_invariance: cfg.params = ScaleInvarianceConfig{}; break;
    case Subcommand::toy2d: cfg.params = Toy2dConfig{}; break;
    case Subcommand::train: cfg.params = TrainConfig{}; break;
  }
  return cfg;
}

namespace {

KeyBinder binder_for(RunConfig& cfg) {
  KeyBinder b;
  b.bind("seed", cfg.seed);
  std::visit([&](auto& p) { p.bind(b); }, cfg.params);
  return b;
}

}  // namespace

RunConfig resolve_config(Subcommand s, const ConfigText& text) {
  RunConfig cfg = default_config(s);
  if (const ConfigSection* section = text.find(to_string(s))) binder_for(cfg).apply(*section);
  std::visit([](const auto& p) { p.validate(); }, cfg.params);
  return cfg;
}

RunConfig resolve_config(Subcommand s, std::string_view text) { return resolve_config(s, parse_config_text(text)); }

std::string echo_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  return "[" + to_string(cfg.subcommand) + "]\n" + binder_for(copy).echo();
}

}  // namespace sage::cli
