#include "bcom_cli/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include "bcom/errors.hpp"

namespace bcom::cli {

using nlohmann::json;

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kBcom:
      return "bcom";
    case Mode::kControl:
      return "control";
    case Mode::kSweep:
      return "sweep";
    case Mode::kCheck:
      return "check";
  }
  return "unknown";
}

std::string to_string(Family family) { return family == Family::kBcom ? "bcom" : "control"; }

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed field access on one JSON object. Remembers which keys were read so
// that unknown keys can be rejected afterwards.
class Fields {
 public:
  Fields(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
  }

  double number(const std::string& key, double fallback, const std::function<bool(double)>& ok,
                const std::string& rule) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw ConfigError(join(path_, key), "must be a number");
    const double x = v->get<double>();
    if (!ok(x)) throw ConfigError(join(path_, key), rule);
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) throw ConfigError(join(path_, key), "must be an integer");
    const std::int64_t x = v->get<std::int64_t>();
    if (x < min) throw ConfigError(join(path_, key), "must be >= " + std::to_string(min));
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError(join(path_, key), "must be a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  std::string string(const std::string& key, const std::string& fallback, const std::set<std::string>& allowed) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw ConfigError(join(path_, key), "must be a string");
    const std::string s = v->get<std::string>();
    if (!allowed.empty() && allowed.count(s) == 0) {
      std::string options;
      for (const std::string& a : allowed) options += (options.empty() ? "" : ", ") + a;
      throw ConfigError(join(path_, key), "must be one of {" + options + "}, got '" + s + "'");
    }
    return s;
  }

  const json* object(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_object()) throw ConfigError(join(path_, key), "must be an object");
    return v;
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_array()) throw ConfigError(join(path_, key), "must be an array");
    return v;
  }

  std::string child(const std::string& key) const { return join(path_, key); }

  void reject_unknown() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (seen_.count(it.key()) == 0) throw ConfigError(join(path_, it.key()), "unknown field");
    }
  }

 private:
  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

const auto positive = [](double x) { return x > 0.0; };
const auto non_negative = [](double x) { return x >= 0.0; };

const std::set<std::string> kScheduleKinds{"constant", "sinusoidal", "sign_alternating", "seeded_bounded"};
const std::set<std::string> kBaseKinds{"quadratic", "pseudo_huber"};

BaseKind base_kind(const std::string& s) { return s == "quadratic" ? BaseKind::kQuadratic : BaseKind::kPseudoHuber; }
std::string base_name(BaseKind k) { return k == BaseKind::kQuadratic ? "quadratic" : "pseudo_huber"; }

AdversarySchedule parse_schedule(const json* doc, const std::string& path, AdversarySchedule s) {
  if (doc == nullptr) return s;
  Fields f(*doc, path);
  s.kind = schedule_kind_from_string(f.string("kind", to_string(s.kind), kScheduleKinds));
  s.radius = f.number("radius", s.radius, non_negative, "must be >= 0");
  s.period = f.number("period", s.period, positive, "must be positive");
  f.reject_unknown();
  return s;
}

json schedule_json(const AdversarySchedule& s) {
  return json{{"kind", to_string(s.kind)}, {"radius", s.radius}, {"period", s.period}};
}

void parse_curvature(Fields& f, double& alpha, double& beta) {
  alpha = f.number("alpha", alpha, [](double x) { return x > 0.0 && x <= 1.0; }, "must lie in (0, 1]");
  beta = f.number("beta", beta, [](double x) { return x >= 1.0; }, "must be >= 1");
}

void parse_bcom(const json* doc, ExperimentConfig& c) {
  if (doc == nullptr) return;
  Fields f(*doc, "bcom");
  SyntheticBcomConfig& in = c.bcom.instance;
  in.d = static_cast<int>(f.integer("d", in.d, 1));
  in.m = static_cast<int>(f.integer("m", in.m, 1));
  parse_curvature(f, in.alpha, in.beta);
  in.r_h = f.number("r_h", in.r_h, [](double x) { return x >= 1.0; }, "must be >= 1");
  in.kind = base_kind(f.string("base", base_name(in.kind), kBaseKinds));
  in.adversary = parse_schedule(f.object("adversary"), f.child("adversary"), in.adversary);
  in.signal_jitter = f.number("signal_jitter", in.signal_jitter, non_negative, "must be >= 0");
  in.target_fraction = f.number("target_fraction", in.target_fraction, [](double x) { return x >= 0.0 && x <= 1.0; },
                                "must lie in [0, 1]");
  in.set_radius = f.number("set_radius", in.set_radius, positive, "must be positive");
  c.bcom.c_eta = f.number("c_eta", c.bcom.c_eta, positive, "must be positive");
  c.bcom.a_init_scale = f.number("a_init_scale", c.bcom.a_init_scale, positive, "must be positive");
  c.bcom.c_delta = f.number("c_delta", c.bcom.c_delta, positive, "must be positive");
  c.bcom.c_eta_spherical = f.number("c_eta_spherical", c.bcom.c_eta_spherical, positive, "must be positive");
  f.reject_unknown();
}

void parse_control(const json* doc, ExperimentConfig& c) {
  ControlExperimentConfig& ctl = c.control;
  if (doc != nullptr) {
    Fields f(*doc, "control");
    if (const json* sys = f.object("system")) {
      Fields s(*sys, "control.system");
      SystemConfig& sc = ctl.system;
      sc.dx = static_cast<int>(s.integer("dx", sc.dx, 1));
      sc.du = static_cast<int>(s.integer("du", sc.du, 1));
      sc.dy = static_cast<int>(s.integer("dy", sc.dy, 1));
      sc.kappa = s.number("kappa", sc.kappa, [](double x) { return x >= 1.0; }, "must be >= 1");
      sc.gamma = s.number("gamma", sc.gamma, [](double x) { return x > 0.0 && x <= 1.0; }, "must lie in (0, 1]");
      sc.kappa_sys = s.number("kappa_sys", sc.kappa_sys, positive, "must be positive");
      sc.seed = s.unsigned_integer("seed", sc.seed);
      s.reject_unknown();
    }
    if (const json* costs = f.object("costs")) {
      Fields s(*costs, "control.costs");
      ctl.costs.kind = base_kind(s.string("base", base_name(ctl.costs.kind), kBaseKinds));
      parse_curvature(s, ctl.costs.alpha, ctl.costs.beta);
      ctl.costs.modulation = parse_schedule(s.object("modulation"), s.child("modulation"), ctl.costs.modulation);
      s.reject_unknown();
    }
    if (const json* noise = f.object("noise")) {
      Fields s(*noise, "control.noise");
      ctl.noise.w = parse_schedule(s.object("w"), s.child("w"), ctl.noise.w);
      ctl.noise.e = parse_schedule(s.object("e"), s.child("e"), ctl.noise.e);
      s.reject_unknown();
    }
    ctl.m = static_cast<int>(f.integer("m", ctl.m, 0));
    ctl.r_m = f.number("r_m", ctl.r_m, positive, "must be positive");
    ctl.c_eta = f.number("c_eta", ctl.c_eta, positive, "must be positive");
    ctl.a_init_scale = f.number("a_init_scale", ctl.a_init_scale, non_negative, "must be >= 0 (0 selects m)");
    const std::string set = f.string("set", ctl.set_kind == DecisionSetKind::kOperatorL1 ? "operator_l1" : "euclidean_ball",
                                     {"operator_l1", "euclidean_ball"});
    ctl.set_kind = set == "operator_l1" ? DecisionSetKind::kOperatorL1 : DecisionSetKind::kEuclideanBall;
    ctl.kappa_probes = static_cast<int>(f.integer("kappa_probes", ctl.kappa_probes, 0));
    ctl.kappa_stride = static_cast<int>(f.integer("kappa_stride", ctl.kappa_stride, 1));
    f.reject_unknown();
  }
  ctl.costs.dim = ctl.system.dy + ctl.system.du;
}

json bcom_json(const ExperimentConfig& c) {
  const SyntheticBcomConfig& in = c.bcom.instance;
  return json{{"d", in.d},
              {"m", in.m},
              {"alpha", in.alpha},
              {"beta", in.beta},
              {"r_h", in.r_h},
              {"base", base_name(in.kind)},
              {"adversary", schedule_json(in.adversary)},
              {"signal_jitter", in.signal_jitter},
              {"target_fraction", in.target_fraction},
              {"set_radius", in.set_radius},
              {"c_eta", c.bcom.c_eta},
              {"a_init_scale", c.bcom.a_init_scale},
              {"c_delta", c.bcom.c_delta},
              {"c_eta_spherical", c.bcom.c_eta_spherical}};
}

json control_json(const ExperimentConfig& c) {
  const ControlExperimentConfig& ctl = c.control;
  const SystemConfig& sc = ctl.system;
  return json{
      {"system",
       {{"dx", sc.dx}, {"du", sc.du}, {"dy", sc.dy}, {"kappa", sc.kappa}, {"gamma", sc.gamma}, {"kappa_sys", sc.kappa_sys},
        {"seed", sc.seed}}},
      {"costs",
       {{"base", base_name(ctl.costs.kind)},
        {"alpha", ctl.costs.alpha},
        {"beta", ctl.costs.beta},
        {"modulation", schedule_json(ctl.costs.modulation)}}},
      {"noise", {{"w", schedule_json(ctl.noise.w)}, {"e", schedule_json(ctl.noise.e)}}},
      {"m", ctl.m},
      {"r_m", ctl.r_m},
      {"c_eta", ctl.c_eta},
      {"a_init_scale", ctl.a_init_scale},
      {"set", ctl.set_kind == DecisionSetKind::kOperatorL1 ? "operator_l1" : "euclidean_ball"},
      {"kappa_probes", ctl.kappa_probes},
      {"kappa_stride", ctl.kappa_stride}};
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  Fields f(doc, "");
  const std::int64_t version = f.integer("schema_version", -1, -1);
  if (version == -1) throw ConfigError("schema_version", "is required");
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                            std::to_string(kSchemaVersion) + ")");
  }
  ExperimentConfig c;
  const std::string mode = f.string("mode", "check", {"bcom", "control", "sweep", "check"});
  c.mode = mode == "bcom" ? Mode::kBcom : mode == "control" ? Mode::kControl : mode == "sweep" ? Mode::kSweep : Mode::kCheck;
  c.seed = f.unsigned_integer("seed", c.seed);
  c.horizon = f.integer("horizon", c.horizon, 1);
  if (const json* grid = f.array("horizons")) {
    c.horizons.clear();
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const json& v = (*grid)[i];
      const std::string path = "horizons[" + std::to_string(i) + "]";
      if (!v.is_number_integer() || v.get<std::int64_t>() < 2) throw ConfigError(path, "must be an integer >= 2");
      if (!c.horizons.empty() && v.get<std::int64_t>() <= c.horizons.back()) throw ConfigError(path, "must be increasing");
      c.horizons.push_back(v.get<std::int64_t>());
    }
    if (c.horizons.empty()) throw ConfigError("horizons", "must not be empty");
  }
  c.seeds = static_cast<int>(f.integer("seeds", c.seeds, 1));
  c.jobs = static_cast<int>(f.integer("jobs", c.jobs, 1));
  c.family = f.string("family", "bcom", {"bcom", "control"}) == "bcom" ? Family::kBcom : Family::kControl;
  if (const json* arms = f.array("arms")) {
    c.arms.clear();
    for (std::size_t i = 0; i < arms->size(); ++i) {
      const json& v = (*arms)[i];
      const std::string path = "arms[" + std::to_string(i) + "]";
      if (!v.is_string() || (v != "newton" && v != "spherical")) throw ConfigError(path, "must be 'newton' or 'spherical'");
      c.arms.push_back(arm_from_string(v.get<std::string>()));
    }
    if (c.arms.empty()) throw ConfigError("arms", "must not be empty");
  }
  if (const json* comp = f.object("comparator")) {
    Fields s(*comp, "comparator");
    const double tol = s.number("tol", c.bcom.comparator_tol, positive, "must be positive");
    const int probes = static_cast<int>(s.integer("probes", c.bcom.comparator_probes, 0));
    s.reject_unknown();
    c.bcom.comparator_tol = c.control.comparator_tol = tol;
    c.bcom.comparator_probes = c.control.comparator_probes = probes;
  }
  parse_bcom(f.object("bcom"), c);
  parse_control(f.object("control"), c);
  f.reject_unknown();
  if (c.bcom.instance.beta < c.bcom.instance.alpha) throw ConfigError("bcom.beta", "must be >= alpha");
  if (c.control.costs.beta < c.control.costs.alpha) throw ConfigError("control.costs.beta", "must be >= alpha");

  rehash(c);
  return c;
}

void rehash(ExperimentConfig& c) {
  c.canonical = to_json(c);
  json hashed = c.canonical;
  hashed.erase("jobs");
  c.hash = sha256_hex(hashed.dump());
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json arms = json::array();
  for (Arm a : c.arms) arms.push_back(to_string(a));
  return json{{"schema_version", kSchemaVersion},
              {"mode", to_string(c.mode)},
              {"seed", c.seed},
              {"horizon", c.horizon},
              {"horizons", c.horizons},
              {"seeds", c.seeds},
              {"jobs", c.jobs},
              {"family", to_string(c.family)},
              {"arms", arms},
              {"comparator", {{"tol", c.bcom.comparator_tol}, {"probes", c.bcom.comparator_probes}}},
              {"bcom", bcom_json(c)},
              {"control", control_json(c)}};
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

}  // namespace bcom::cli
