#pragma once

// Scenario documents, the calibration pipeline, run orchestration and
// cross-run comparison.
//
// Units are carried in key names: *_s seconds, *_km kilometres, *_nm
// nanometres, *_ps_per_nm picoseconds per nanometre. Unknown keys are errors.
// Every random stream is seeded with derive_seed(master_seed, <component path>).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fots/access.hpp"
#include "fots/calibration.hpp"
#include "fots/channel.hpp"
#include "fots/errors.hpp"
#include "fots/io.hpp"
#include "fots/protocol.hpp"
#include "fots/stability.hpp"
#include "fots/timebase.hpp"
#include "fots/version.hpp"

namespace fots {

struct CalibrationProcedure {
  std::size_t rounds = 100;
  HardwareDelaySign sign = HardwareDelaySign::consistent;
};

struct Scenario {
  std::string name;
  std::string description;
  double duration = 0.0;
  std::uint64_t master_seed = 1;
  std::optional<std::string> outputs;
  FrequencyReference reference;
  ClockModel server;
  ClockModel user;
  LinkModel link;
  HardwareDelays hw;
  TicModel tic_server;
  TicModel tic_user;
  ProtocolConfig protocol;
  std::optional<CalibrationSet> calibration;  // explicit values; otherwise measured
  CalibrationProcedure procedure;
  std::vector<AccessNode> access_nodes;
  std::uint64_t link_seed = 0;

  /// Re-derives every component seed from `master`.
  void reseed(std::uint64_t master) {
    master_seed = master;
    server.noise.rng_seed = derive_seed(master, "clocks.server.noise");
    user.noise.rng_seed = derive_seed(master, "clocks.user.noise");
    link_seed = derive_seed(master, "link.fluctuation");
    tic_server.rng_seed = derive_seed(master, "tics.server");
    tic_user.rng_seed = derive_seed(master, "tics.user");
    for (std::size_t i = 0; i < access_nodes.size(); ++i) {
      access_nodes[i].tic.rng_seed =
          derive_seed(master, "access_nodes[" + std::to_string(i) + "].tic");
    }
  }

  std::map<std::string, std::uint64_t> seeds() const {
    std::map<std::string, std::uint64_t> s{
        {"clocks.server.noise", server.noise.rng_seed},
        {"clocks.user.noise", user.noise.rng_seed},
        {"link.fluctuation", link_seed},
        {"tics.server", tic_server.rng_seed},
        {"tics.user", tic_user.rng_seed},
    };
    for (std::size_t i = 0; i < access_nodes.size(); ++i) {
      s["access_nodes[" + std::to_string(i) + "].tic"] = access_nodes[i].tic.rng_seed;
    }
    return s;
  }

  void validate() const {
    if (name.empty()) throw ValidationError("name", "must not be empty");
    if (!(duration > 0.0) || !std::isfinite(duration)) {
      throw ValidationError("duration_s", "must be > 0");
    }
    server.validate("clocks.server");
    user.validate("clocks.user");
    link.validate("link");
    hw.validate("hardware");
    tic_server.validate("tics.server");
    tic_user.validate("tics.user");
    ProtocolConfig p = protocol;
    p.apply_calibration = false;
    p.validate("protocol");
    if (calibration) {
      calibration->validate();
      if (calibration->C != protocol.C) {
        throw ValidationError("calibration.C_s", "must equal protocol.C_s");
      }
    }
    if (procedure.rounds < 1) throw ValidationError("calibration_procedure.rounds", "must be >= 1");
    for (std::size_t i = 0; i < access_nodes.size(); ++i) {
      access_nodes[i].validate(link.length_km, "access_nodes[" + std::to_string(i) + "]");
    }
  }
};

namespace detail {

using nlohmann::json;

// Strict view of one JSON object: typed getters plus an unknown-key check.
// A missing required key is only reported by finish(), after unknown keys, so
// a misspelling is named as such rather than as the key it was meant to be.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where(""), "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) return required(key, fallback);
    const json& v = j_.at(key);
    if (!v.is_number()) throw ValidationError(where(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ValidationError(where(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) missing_.push_back(key);
      return fallback.value_or(std::string());
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ValidationError(where(key), "expected a string");
    return v.get<std::string>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ValidationError(where(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError(where(key), "unknown key");
    }
    if (!missing_.empty()) throw ValidationError(where(missing_.front()), "missing required key");
  }

 private:
  double required(const std::string& key, std::optional<double> fallback) {
    if (!fallback) missing_.push_back(key);
    return fallback.value_or(std::nan(""));
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
  std::vector<std::string> missing_;
};

inline NoiseProfile parse_noise(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array of noise components");
  NoiseProfile p;
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j[i], path + "[" + std::to_string(i) + "]");
    NoiseComponent c;
    const std::string type = r.string("type");
    try {
      c.type = noise_type_from_string(type);
    } catch (const ValidationError&) {
      throw ValidationError(r.where("type"), "unknown noise type '" + type + "'");
    }
    c.amplitude = r.number("amplitude");
    r.finish();
    p.components.push_back(c);
  }
  return p;
}

inline ClockModel parse_clock(const json& j, const std::string& path,
                              const FrequencyReference& ref) {
  ObjectReader r(j, path);
  ClockModel c;
  c.initial_offset = r.number("initial_offset_s", 0.0);
  c.frac_frequency = r.number("frac_frequency", 0.0);
  c.drift = r.number("drift_per_s", 0.0);
  c.freq_ref_shared = r.boolean("freq_ref_shared", false);
  c.pulse_period = r.number("pulse_period_s", 10e-3);
  if (const json* n = r.child("noise")) c.noise = parse_noise(*n, r.where("noise"));
  r.finish();
  c.reference = ref;
  return c;
}

inline TicModel parse_tic(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  TicModel t;
  t.jitter_rms = r.number("jitter_rms_s", 0.0);
  t.resolution = r.number("resolution_s", 0.0);
  r.finish();
  return t;
}

inline LinkModel parse_link(const json& j) {
  ObjectReader r(j, "link");
  LinkModel l;
  l.length_km = r.number("length_km");
  l.group_delay_per_km = r.number("group_delay_s_per_km", 4.9e-6);
  if (const json* f = r.child("fluctuation")) {
    ObjectReader fr(*f, "link.fluctuation");
    l.fluctuation.amplitude = fr.number("amplitude_s", 0.0);
    l.fluctuation.timescale = fr.number("timescale_s", 1800.0);
    fr.finish();
  }
  l.dispersion_coeff = r.optional_number("dispersion_ps_per_nm_km");
  l.accumulated_dispersion = r.optional_number("accumulated_dispersion_ps_per_nm");
  l.sagnac_asym = r.number("sagnac_asym_s", 0.0);
  l.lambda_server_nm = r.number("lambda_server_nm", 1546.12);
  l.lambda_user_nm = r.number("lambda_user_nm", 1546.92);
  const std::string mode = r.string("evaluation", std::string("quasi_static"));
  if (mode == "quasi_static") {
    l.evaluation = LinkEvaluation::quasi_static;
  } else if (mode == "emit_time") {
    l.evaluation = LinkEvaluation::emit_time;
  } else {
    throw ValidationError("link.evaluation", "expected quasi_static or emit_time");
  }
  r.finish();
  return l;
}

inline HardwareDelays parse_hardware(const json& j) {
  ObjectReader r(j, "hardware");
  HardwareDelays h;
  h.tx_server = r.number("tx_server_s", 0.0);
  h.rx_server = r.number("rx_server_s", 0.0);
  h.tx_user = r.number("tx_user_s", 0.0);
  h.rx_user = r.number("rx_user_s", 0.0);
  h.delay_unit_dev_server = r.number("delay_unit_dev_server_s", 0.0);
  h.delay_unit_dev_user = r.number("delay_unit_dev_user_s", 0.0);
  h.biedfa_lambda1 = r.number("biedfa_lambda1_s", 0.0);
  h.biedfa_lambda2 = r.number("biedfa_lambda2_s", 0.0);
  r.finish();
  return h;
}

inline CalibrationSet parse_calibration(const json& j, double c) {
  ObjectReader r(j, "calibration");
  CalibrationSet cal;
  cal.tau_HD = r.number("tau_HD_s", 0.0);
  cal.tau_delay_u = r.number("tau_delay_u_s", 0.0);
  cal.tau_FPDA = r.number("tau_FPDA_s", 0.0);
  cal.tau_OAA = r.number("tau_OAA_s", 0.0);
  cal.C = r.number("C_s", c);
  if (const json* p = r.child("provenance")) {
    ObjectReader pr(*p, "calibration.provenance");
    for (const char* key : {"tau_HD", "tau_delay_u", "tau_FPDA", "tau_OAA"}) {
      if (pr.has(key)) cal.provenance[key] = pr.string(key);
    }
    pr.finish();
  }
  r.finish();
  return cal;
}

}  // namespace detail

/// Builds and validates a scenario from a JSON document.
inline Scenario parse_scenario(const nlohmann::json& doc) {
  using detail::ObjectReader;
  ObjectReader r(doc, "");
  Scenario s;
  s.name = r.string("name");
  s.description = r.string("description", std::string());
  s.duration = r.number("duration_s");
  const std::uint64_t master = r.unsigned_integer("master_seed", 1);
  if (r.has("outputs")) s.outputs = r.string("outputs");

  if (const auto* ref = r.child("frequency_reference")) {
    ObjectReader rr(*ref, "frequency_reference");
    s.reference.frac_frequency = rr.number("frac_frequency", 0.0);
    s.reference.drift = rr.number("drift_per_s", 0.0);
    rr.finish();
  }

  const auto* clocks = r.child("clocks");
  if (!clocks) throw ValidationError("clocks", "missing required key");
  {
    ObjectReader cr(*clocks, "clocks");
    const auto* srv = cr.child("server");
    const auto* usr = cr.child("user");
    if (!srv) throw ValidationError("clocks.server", "missing required key");
    if (!usr) throw ValidationError("clocks.user", "missing required key");
    s.server = detail::parse_clock(*srv, "clocks.server", s.reference);
    s.user = detail::parse_clock(*usr, "clocks.user", s.reference);
    cr.finish();
  }

  const auto* link = r.child("link");
  if (!link) throw ValidationError("link", "missing required key");
  s.link = detail::parse_link(*link);

  if (const auto* hw = r.child("hardware")) s.hw = detail::parse_hardware(*hw);

  if (const auto* tics = r.child("tics")) {
    ObjectReader tr(*tics, "tics");
    if (const auto* t = tr.child("server")) s.tic_server = detail::parse_tic(*t, "tics.server");
    if (const auto* t = tr.child("user")) s.tic_user = detail::parse_tic(*t, "tics.user");
    tr.finish();
  }

  if (const auto* p = r.child("protocol")) {
    ObjectReader pr(*p, "protocol");
    s.protocol.C = pr.number("C_s", 5e-3);
    s.protocol.compensation_period = pr.number("compensation_period_s", 1.0);
    s.protocol.apply_calibration = pr.boolean("apply_calibration", false);
    s.protocol.compensation = pr.boolean("compensation", true);
    s.protocol.textbook_mode = pr.boolean("textbook_mode", false);
    pr.finish();
  }

  if (const auto* c = r.child("calibration")) {
    s.calibration = detail::parse_calibration(*c, s.protocol.C);
  }

  if (const auto* cp = r.child("calibration_procedure")) {
    ObjectReader pr(*cp, "calibration_procedure");
    s.procedure.rounds = pr.unsigned_integer("rounds", 100);
    const std::string sign = pr.string("hardware_delay_sign", std::string("consistent"));
    if (sign == "consistent") {
      s.procedure.sign = HardwareDelaySign::consistent;
    } else if (sign == "as_printed") {
      s.procedure.sign = HardwareDelaySign::as_printed;
    } else {
      throw ValidationError("calibration_procedure.hardware_delay_sign",
                            "expected consistent or as_printed");
    }
    pr.finish();
  }

  if (const auto* nodes = r.child("access_nodes")) {
    if (!nodes->is_array()) throw ValidationError("access_nodes", "expected an array");
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const std::string path = "access_nodes[" + std::to_string(i) + "]";
      ObjectReader nr((*nodes)[i], path);
      AccessNode n;
      n.distance_from_server_km = nr.number("distance_km");
      n.coupler_delay = nr.number("coupler_delay_s", 0.0);
      if (const auto* t = nr.child("tic")) n.tic = detail::parse_tic(*t, path + ".tic");
      nr.finish();
      s.access_nodes.push_back(n);
    }
  }
  r.finish();

  s.reseed(master);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

/// Canonical JSON form of a scenario (used for the run manifest).
inline nlohmann::ordered_json to_json(const Scenario& s) {
  using oj = nlohmann::ordered_json;
  auto clock = [](const ClockModel& c) {
    oj noise = oj::array();
    for (const auto& n : c.noise.components) {
      noise.push_back(oj{{"type", std::string(to_string(n.type))}, {"amplitude", n.amplitude}});
    }
    return oj{{"initial_offset_s", c.initial_offset}, {"frac_frequency", c.frac_frequency},
              {"drift_per_s", c.drift},           {"freq_ref_shared", c.freq_ref_shared},
              {"pulse_period_s", c.pulse_period}, {"noise", noise}};
  };
  auto tic = [](const TicModel& t) {
    return oj{{"jitter_rms_s", t.jitter_rms}, {"resolution_s", t.resolution}};
  };
  oj link{{"length_km", s.link.length_km},
          {"group_delay_s_per_km", s.link.group_delay_per_km},
          {"fluctuation",
           {{"amplitude_s", s.link.fluctuation.amplitude},
            {"timescale_s", s.link.fluctuation.timescale}}}};
  if (s.link.dispersion_coeff) link["dispersion_ps_per_nm_km"] = *s.link.dispersion_coeff;
  if (s.link.accumulated_dispersion) {
    link["accumulated_dispersion_ps_per_nm"] = *s.link.accumulated_dispersion;
  }
  link["sagnac_asym_s"] = s.link.sagnac_asym;
  link["lambda_server_nm"] = s.link.lambda_server_nm;
  link["lambda_user_nm"] = s.link.lambda_user_nm;
  link["evaluation"] =
      s.link.evaluation == LinkEvaluation::quasi_static ? "quasi_static" : "emit_time";

  oj j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["duration_s"] = s.duration;
  j["master_seed"] = s.master_seed;
  j["frequency_reference"] = {{"frac_frequency", s.reference.frac_frequency},
                              {"drift_per_s", s.reference.drift}};
  j["clocks"] = {{"server", clock(s.server)}, {"user", clock(s.user)}};
  j["link"] = link;
  j["hardware"] = {{"tx_server_s", s.hw.tx_server},
                   {"rx_server_s", s.hw.rx_server},
                   {"tx_user_s", s.hw.tx_user},
                   {"rx_user_s", s.hw.rx_user},
                   {"delay_unit_dev_server_s", s.hw.delay_unit_dev_server},
                   {"delay_unit_dev_user_s", s.hw.delay_unit_dev_user},
                   {"biedfa_lambda1_s", s.hw.biedfa_lambda1},
                   {"biedfa_lambda2_s", s.hw.biedfa_lambda2}};
  j["tics"] = {{"server", tic(s.tic_server)}, {"user", tic(s.tic_user)}};
  j["protocol"] = {{"C_s", s.protocol.C},
                   {"compensation_period_s", s.protocol.compensation_period},
                   {"apply_calibration", s.protocol.apply_calibration},
                   {"compensation", s.protocol.compensation},
                   {"textbook_mode", s.protocol.textbook_mode}};
  j["calibration_procedure"] = {
      {"rounds", s.procedure.rounds},
      {"hardware_delay_sign",
       s.procedure.sign == HardwareDelaySign::consistent ? "consistent" : "as_printed"}};
  oj nodes = oj::array();
  for (const auto& n : s.access_nodes) {
    nodes.push_back(oj{{"distance_km", n.distance_from_server_km},
                       {"coupler_delay_s", n.coupler_delay},
                       {"tic", tic(n.tic)}});
  }
  j["access_nodes"] = nodes;
  return j;
}

inline nlohmann::ordered_json to_json(const CalibrationSet& c) {
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.provenance) prov[k] = v;
  return {{"tau_HD_s", c.tau_HD},   {"tau_delay_u_s", c.tau_delay_u}, {"tau_FPDA_s", c.tau_FPDA},
          {"tau_OAA_s", c.tau_OAA}, {"C_s", c.C},                     {"provenance", prov}};
}

/// Offline calibration against the scenario's own hardware:
///  - tau_HD from a direct connection (no fiber, no amplifier), averaged over
///    `procedure.rounds` rounds, with the true initial offset as the
///    independently measured T_offset_INIT;
///  - tau_delay_u from TIC readings across the user delay unit;
///  - tau_FPDA from the wavelengths and D_A, plus the configured Sagnac term;
///  - tau_OAA from the two Bi-EDFA path delays.
inline CalibrationSet calibrate(const Scenario& s) {
  const std::uint64_t m = s.master_seed;
  const HardwareDelays zero{};
  const HardwareDelays& hw = s.protocol.textbook_mode ? zero : s.hw;

  ClockModel server_model = s.server;
  ClockModel user_model = s.user;
  server_model.noise.rng_seed = derive_seed(m, "calibration.clocks.server.noise");
  user_model.noise.rng_seed = derive_seed(m, "calibration.clocks.user.noise");
  const Clock server(server_model);
  const Clock user(user_model);

  LinkModel direct;
  direct.length_km = 0.0;
  direct.dispersion_coeff = 0.0;
  const Link wire(direct, 0);
  HardwareDelays direct_hw = hw;
  direct_hw.biedfa_lambda1 = 0.0;
  direct_hw.biedfa_lambda2 = 0.0;

  TicModel ts = s.tic_server;
  TicModel tu = s.tic_user;
  ts.rng_seed = derive_seed(m, "calibration.tics.server");
  tu.rng_seed = derive_seed(m, "calibration.tics.user");
  TimeIntervalCounter tic_s(ts);
  TimeIntervalCounter tic_u(tu);

  ProtocolConfig cfg = s.protocol;
  cfg.apply_calibration = false;
  cfg.textbook_mode = false;

  long double hd_sum = 0.0L;
  for (std::size_t k = 0; k < s.procedure.rounds; ++k) {
    const double t = static_cast<double>(k) * s.protocol.compensation_period;
    const auto r = sync_round(server, user, wire, direct_hw, tic_s, tic_u, cfg, t);
    hd_sum += calibrate_hardware_delay(r.T2, r.true_offset, cfg.C, s.procedure.sign);
  }

  TicModel td = s.tic_user;
  td.rng_seed = derive_seed(m, "calibration.delay_unit");
  TimeIntervalCounter tic_d(td);
  const double programmed = 0.5 * s.protocol.C;
  std::vector<double> input, output;
  input.reserve(s.procedure.rounds);
  output.reserve(s.procedure.rounds);
  for (std::size_t k = 0; k < s.procedure.rounds; ++k) {
    const double t = static_cast<double>(k) * s.protocol.compensation_period;
    const double edge_in = -user.time_error(t);
    const double edge_out = edge_in + programmed + hw.delay_unit_dev_user;
    input.push_back(edge_in);
    output.push_back(edge_in + measure_interval(tic_d, edge_in, edge_out));
  }

  CalibrationSet cal;
  cal.C = s.protocol.C;
  cal.tau_HD = static_cast<double>(hd_sum / static_cast<long double>(s.procedure.rounds));
  cal.tau_delay_u = calibrate_delay_unit(input, output, programmed).deviation;
  cal.tau_FPDA = calibrate_dispersion_asymmetry(s.link.lambda_server_nm, s.link.lambda_user_nm,
                                                accumulated_dispersion(s.link)) +
                 s.link.sagnac_asym;
  cal.tau_OAA = biedfa_asymmetry(hw.biedfa_lambda1, hw.biedfa_lambda2);
  cal.provenance["tau_HD"] = "direct connection, mean of " + std::to_string(s.procedure.rounds) +
                             " rounds (" +
                             (s.procedure.sign == HardwareDelaySign::consistent ? "consistent"
                                                                                : "as_printed") +
                             " sign)";
  cal.provenance["tau_delay_u"] =
      "TIC across user delay unit, mean of " + std::to_string(s.procedure.rounds) + " edges";
  cal.provenance["tau_FPDA"] = "(lambda_user - lambda_server) * D_A plus configured Sagnac term";
  cal.provenance["tau_OAA"] = "Bi-EDFA path delays lambda1 - lambda2";
  return cal;
}

struct RunReport {
  std::string name;
  std::filesystem::path out_dir;
  std::vector<SyncRoundResult> rounds;
  std::vector<std::vector<NodeRoundResult>> nodes;
  StabilityCurve residual_tdev;
  StabilityCurve clock_tdev;  // raw t_server - t_user, no synchronization
  std::vector<StabilityCurve> node_tdev;
  std::optional<CalibrationSet> calibration;
  std::vector<std::string> files;
};

inline TimeErrorSeries series_of(const std::vector<double>& values, double tau0,
                                 std::string description, std::uint64_t seed) {
  TimeErrorSeries s;
  s.tau0 = tau0;
  s.values = values;
  s.description = std::move(description);
  s.seed = seed;
  return s;
}

inline StabilityCurve tdev_or_empty(const TimeErrorSeries& s) {
  if (s.values.size() < 4) return {};
  return tdev(s);
}

/// Simulates the scenario and writes the artifact tree into `out_dir`:
/// rounds.csv, residual_tdev.csv, clock_tdev.csv, node_<i>.csv,
/// node_<i>_tdev.csv and manifest.json. Identical inputs give identical bytes.
inline RunReport run(const Scenario& s, const std::filesystem::path& out_dir) {
  s.validate();
  RunReport rep;
  rep.name = s.name;
  rep.out_dir = out_dir;

  ProtocolConfig cfg = s.protocol;
  if (cfg.apply_calibration) {
    rep.calibration = s.calibration ? *s.calibration : calibrate(s);
    cfg.calibration = *rep.calibration;
  }

  const Clock server(s.server);
  const Clock user(s.user);
  const Link link(s.link, s.link_seed);
  TimeIntervalCounter tic_s(s.tic_server);
  TimeIntervalCounter tic_u(s.tic_user);
  rep.rounds = run_session({server, user, link, s.hw, tic_s, tic_u, cfg, s.duration});

  rep.nodes.resize(s.access_nodes.size());
  for (std::size_t i = 0; i < s.access_nodes.size(); ++i) {
    TimeIntervalCounter tic(s.access_nodes[i].tic);
    for (const auto& r : rep.rounds) {
      rep.nodes[i].push_back(access_round(s.access_nodes[i], tic, s.link, r, cfg.C));
    }
  }

  const double tau0 = cfg.compensation_period;
  std::vector<double> residual, clock;
  for (const auto& r : rep.rounds) {
    residual.push_back(r.residual);
    clock.push_back(r.true_offset);
  }
  rep.residual_tdev = tdev_or_empty(series_of(residual, tau0, "residual", s.master_seed));
  rep.clock_tdev = tdev_or_empty(series_of(clock, tau0, "clock offset", s.master_seed));
  for (const auto& node : rep.nodes) {
    std::vector<double> v;
    for (const auto& r : node) v.push_back(r.residual);
    rep.node_tdev.push_back(tdev_or_empty(series_of(v, tau0, "node residual", s.master_seed)));
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  auto emit = [&](const std::string& file) {
    rep.files.push_back(file);
    return out_dir / file;
  };
  io::write_rounds_csv(emit("rounds.csv"), rep.rounds);
  io::write_tdev_csv(emit("residual_tdev.csv"), rep.residual_tdev);
  io::write_tdev_csv(emit("clock_tdev.csv"), rep.clock_tdev);
  for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
    io::write_node_csv(emit("node_" + std::to_string(i) + ".csv"), rep.nodes[i]);
    io::write_tdev_csv(emit("node_" + std::to_string(i) + "_tdev.csv"), rep.node_tdev[i]);
  }

  nlohmann::ordered_json manifest;
  manifest["name"] = s.name;
  manifest["code_version"] = kVersion;
  manifest["master_seed"] = s.master_seed;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.seeds()) seeds[k] = v;
  manifest["seeds"] = seeds;
  manifest["rounds"] = rep.rounds.size();
  manifest["tau0_s"] = tau0;
  manifest["calibration"] = rep.calibration ? to_json(*rep.calibration) : nlohmann::ordered_json();
  manifest["outputs"] = rep.files;
  manifest["scenario"] = to_json(s);
  {
    const auto path = out_dir / "manifest.json";
    auto out = io::open_for_write(path);
    out << manifest.dump(2) << '\n';
    io::finish(out, path);
  }
  return rep;
}

struct Comparison {
  std::vector<std::string> names;
  std::vector<double> taus;                 // grid common to every run
  std::vector<std::vector<double>> values;  // [run][tau]
  std::vector<std::vector<double>> ratios;  // [run][tau], relative to run 0
  std::vector<double> ordering_violations;  // taus where values increase along the run order

  bool ordered() const noexcept { return ordering_violations.empty(); }
};

/// Tabulates TDEV curves on their common tau grid. Runs are expected in
/// order of decreasing TDEV; taus where that fails are flagged.
inline Comparison compare(const std::vector<std::string>& names,
                          const std::vector<StabilityCurve>& curves) {
  if (curves.size() < 2) throw ValidationError("reports", "need at least two runs to compare");
  Comparison c;
  c.names = names;
  for (const auto& p : curves.front().points) {
    const bool everywhere = std::all_of(curves.begin() + 1, curves.end(),
                                        [&](const StabilityCurve& k) { return k.at(p.tau); });
    if (everywhere) c.taus.push_back(p.tau);
  }
  if (c.taus.empty()) throw ValidationError("reports", "tau grids do not overlap");
  for (const auto& curve : curves) {
    std::vector<double> v;
    for (double tau : c.taus) v.push_back(curve.at(tau)->value);
    c.values.push_back(std::move(v));
  }
  for (const auto& v : c.values) {
    std::vector<double> r;
    for (std::size_t i = 0; i < v.size(); ++i) r.push_back(v[i] / c.values.front()[i]);
    c.ratios.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    for (std::size_t k = 1; k < c.values.size(); ++k) {
      if (c.values[k][i] > c.values[k - 1][i]) {
        c.ordering_violations.push_back(c.taus[i]);
        break;
      }
    }
  }
  return c;
}

/// Loads residual TDEV curves from run directories (or TDEV CSV files).
inline Comparison compare(const std::vector<std::filesystem::path>& reports) {
  std::vector<std::string> names;
  std::vector<StabilityCurve> curves;
  for (const auto& p : reports) {
    const bool dir = std::filesystem::is_directory(p);
    curves.push_back(io::read_tdev_csv(dir ? p / "residual_tdev.csv" : p));
    std::string name = dir ? p.filename().string() : p.stem().string();
    if (dir && std::filesystem::exists(p / "manifest.json")) {
      std::ifstream in(p / "manifest.json");
      try {
        name = nlohmann::json::parse(in).at("name").get<std::string>();
      } catch (const std::exception&) {
        throw ParseError((p / "manifest.json").string() + ": unreadable manifest");
      }
    }
    if (name.empty()) name = p.string();
    names.push_back(name);
  }
  return compare(names, curves);
}

inline std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  char buf[64];
  out << "tau_s";
  for (const auto& n : c.names) out << "  " << n;
  for (std::size_t k = 1; k < c.names.size(); ++k) out << "  ratio(" << c.names[k] << ")";
  out << '\n';
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-8g", c.taus[i]);
    out << buf;
    for (const auto& v : c.values) {
      std::snprintf(buf, sizeof buf, "  %.4e", v[i]);
      out << buf;
    }
    for (std::size_t k = 1; k < c.ratios.size(); ++k) {
      std::snprintf(buf, sizeof buf, "  %.4f", c.ratios[k][i]);
      out << buf;
    }
    out << '\n';
  }
  if (c.ordered()) {
    out << "ordering: ok\n";
  } else {
    out << "ordering violated at tau_s:";
    for (double t : c.ordering_violations) out << ' ' << t;
    out << '\n';
  }
  return out.str();
}

}  // namespace fots
