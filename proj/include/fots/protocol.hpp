#pragma once

// Two-step time-reversal exchange.
//
//   Sync_Req:  the user pulse crosses the link; the server TIC reads
//              T1 = t_rx,server - t_server.
//   reversal:  the server delays its own pulse by C - T1 and launches it back.
//   Sync_Resp: the user TIC reads T2 = t_rx,user - t_user = C + 2*T_offset
//              (+ whatever asymmetry the path carries).
//
// All event instants of a round are kept relative to the nominal round time
// t_round, so picosecond bookkeeping never has to share a double with
// kilosecond session time.

#include <cmath>
#include <cstdint>
#include <vector>

#include "fots/calibration.hpp"
#include "fots/channel.hpp"
#include "fots/errors.hpp"
#include "fots/random.hpp"
#include "fots/timebase.hpp"

namespace fots {

struct TicModel {
  double jitter_rms = 0.0;  // s, Gaussian, independent per reading
  double resolution = 0.0;  // s, 0 = no quantization
  std::uint64_t rng_seed = 0;

  void validate(const std::string& where = "tic") const {
    if (!(jitter_rms >= 0.0) || !std::isfinite(jitter_rms)) {
      throw ValidationError(where + ".jitter_rms_s", "must be >= 0");
    }
    if (!(resolution >= 0.0) || !std::isfinite(resolution)) {
      throw ValidationError(where + ".resolution_s", "must be >= 0");
    }
  }
};

// Stateful counter instrument: reading k always uses draw k of its stream.
class TimeIntervalCounter {
 public:
  explicit TimeIntervalCounter(TicModel model) : model_(model), rng_(model.rng_seed) {
    model_.validate();
  }

  double measure(double t_start, double t_stop) {
    ++readings_;
    double interval = (t_stop - t_start) + model_.jitter_rms * rng_.next();
    if (model_.resolution > 0.0) {
      interval = model_.resolution * std::nearbyint(interval / model_.resolution);
    }
    return interval;
  }

  const TicModel& model() const noexcept { return model_; }
  std::uint64_t readings() const noexcept { return readings_; }

 private:
  TicModel model_;
  GaussianStream rng_;
  std::uint64_t readings_ = 0;
};

inline double measure_interval(TimeIntervalCounter& tic, double t_start, double t_stop) {
  if (!std::isfinite(t_start) || !std::isfinite(t_stop)) {
    throw ValidationError("measure_interval", "timestamps must be finite");
  }
  return tic.measure(t_start, t_stop);
}

struct ProtocolConfig {
  double C = 5e-3;
  double compensation_period = 1.0;
  bool apply_calibration = false;
  CalibrationSet calibration;
  // false: the estimate of round 0 is applied once and then held.
  bool compensation = true;
  // true: zero every hardware term, leaving only clocks and fiber.
  bool textbook_mode = false;

  void validate(const std::string& where = "protocol") const {
    if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError(where + ".C_s", "must be > 0");
    if (!(compensation_period > 0.0) || !std::isfinite(compensation_period)) {
      throw ValidationError(where + ".compensation_period_s", "must be > 0");
    }
    if (apply_calibration) {
      calibration.validate();
      if (calibration.C != C) {
        throw ValidationError("calibration.C_s", "must equal the protocol reversal constant");
      }
    }
  }
};

inline double compute_reversal_delay(double c, double t1) {
  if (!(t1 < c)) throw ReversalOverflow(c, t1);
  return c - t1;
}

// Event instants of one round, relative to t_round.
struct RoundEvents {
  double server_pulse = 0.0;   // CLK-S edge
  double user_pulse = 0.0;     // CLK-U edge
  double user_launch = 0.0;    // user signal enters the span
  double server_rx = 0.0;      // user signal at TIC-S
  double reversal_out = 0.0;   // server delay-unit output
  double server_launch = 0.0;  // reversed signal enters the span
  double user_rx = 0.0;        // reversed signal at TIC-U
  double fiber_us = 0.0;       // span delay used for each leg
  double fiber_su = 0.0;
};

struct SyncRoundResult {
  double t_round = 0.0;
  double T1 = 0.0;
  double T2 = 0.0;
  double reversal_delay_applied = 0.0;  // programmed C - T1
  double offset_estimate = 0.0;
  double true_offset = 0.0;  // t_server - t_user
  // Recovered user time minus (t_server + C/2).
  double residual = 0.0;
  RoundEvents events;
};

namespace detail {

inline const HardwareDelays& effective_hardware(const HardwareDelays& hw,
                                                const ProtocolConfig& cfg) {
  static const HardwareDelays zero{};
  return cfg.textbook_mode ? zero : hw;
}

inline void require_causal(double cause, double effect, const char* what) {
  if (effect < cause) throw NonCausal(std::string("non-causal event: ") + what);
}

// User delay-unit error left on the recovered output.
inline double output_error(const HardwareDelays& hw, const ProtocolConfig& cfg) {
  return hw.delay_unit_dev_user - (cfg.apply_calibration ? cfg.calibration.tau_delay_u : 0.0);
}

}  // namespace detail

inline SyncRoundResult sync_round(const Clock& server, const Clock& user, const Link& link,
                                  const HardwareDelays& hw_in, TimeIntervalCounter& tic_s,
                                  TimeIntervalCounter& tic_u, const ProtocolConfig& cfg,
                                  double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("t", "must be >= 0");
  const HardwareDelays& hw = detail::effective_hardware(hw_in, cfg);
  const bool at_emit = link.model().evaluation == LinkEvaluation::emit_time;

  SyncRoundResult r;
  RoundEvents& e = r.events;
  r.t_round = t;
  e.server_pulse = -server.time_error(t);
  e.user_pulse = -user.time_error(t);

  // Sync_Req
  e.user_launch = e.user_pulse + hw.tx_user + hw.biedfa_lambda2;
  e.fiber_us = link.fiber_delay(Direction::user_to_server,
                                at_emit ? std::max(t + e.user_launch, 0.0) : t);
  e.server_rx = e.user_launch + e.fiber_us + hw.rx_server;
  detail::require_causal(e.user_pulse, e.server_rx, "server reception precedes user emission");
  r.T1 = measure_interval(tic_s, e.server_pulse, e.server_rx);

  // Reversal
  r.reversal_delay_applied = compute_reversal_delay(cfg.C, r.T1);
  e.reversal_out = e.server_pulse + r.reversal_delay_applied + hw.delay_unit_dev_server;
  detail::require_causal(e.server_pulse, e.reversal_out, "reversed pulse precedes server pulse");

  // Sync_Resp
  e.server_launch = e.reversal_out + hw.tx_server;
  e.fiber_su = link.fiber_delay(Direction::server_to_user,
                                at_emit ? std::max(t + e.server_launch, 0.0) : t);
  e.user_rx = e.server_launch + e.fiber_su + hw.biedfa_lambda1 + hw.rx_user;
  detail::require_causal(e.reversal_out, e.user_rx, "user reception precedes reversed emission");
  r.T2 = measure_interval(tic_u, e.user_pulse, e.user_rx);

  r.offset_estimate = cfg.apply_calibration ? corrected_offset(r.T2, cfg.calibration)
                                            : 0.5 * (r.T2 - cfg.C);
  r.true_offset = e.server_pulse - e.user_pulse;
  r.residual = r.offset_estimate - r.true_offset + detail::output_error(hw, cfg);
  return r;
}

/// Everything one session needs; the realizations are owned by the caller.
struct SessionSetup {
  const Clock& server;
  const Clock& user;
  const Link& link;
  const HardwareDelays& hw;
  TimeIntervalCounter& tic_s;
  TimeIntervalCounter& tic_u;
  const ProtocolConfig& cfg;
  double duration = 0.0;
};

inline std::size_t session_round_count(double duration, double period) {
  return static_cast<std::size_t>(std::floor(duration / period + 1e-9));
}

/// Repeats sync_round every compensation period. The user's recovered output
/// is step-corrected to the latest estimate; with compensation off, round 0's
/// estimate is held for the whole session.
inline std::vector<SyncRoundResult> run_session(const SessionSetup& s) {
  s.cfg.validate();
  const std::size_t rounds = session_round_count(s.duration, s.cfg.compensation_period);
  const double out_err = detail::output_error(detail::effective_hardware(s.hw, s.cfg), s.cfg);
  std::vector<SyncRoundResult> out;
  out.reserve(rounds);
  double steering = 0.0;
  for (std::size_t k = 0; k < rounds; ++k) {
    const double t = static_cast<double>(k) * s.cfg.compensation_period;
    SyncRoundResult r = sync_round(s.server, s.user, s.link, s.hw, s.tic_s, s.tic_u, s.cfg, t);
    if (k == 0 || s.cfg.compensation) steering = r.offset_estimate;
    r.residual = steering - r.true_offset + out_err;
    out.push_back(r);
  }
  return out;
}

/// Classic two-way estimator from the forward (u->s) and reverse (s->u) readings.
inline double twtt_baseline_offset(double t_fwd, double t_rev) { return 0.5 * (t_rev - t_fwd); }

struct TwoWayRound {
  double T_fwd = 0.0;
  double T_rev = 0.0;
  double offset_estimate = 0.0;
};

/// Conventional exchange over the same realizations: both sites launch their
/// own pulse and the readings are combined through a data channel. The server
/// pulse passes its delay unit at zero programmed delay.
inline TwoWayRound classic_two_way_round(const Clock& server, const Clock& user, const Link& link,
                                         const HardwareDelays& hw_in, TimeIntervalCounter& tic_s,
                                         TimeIntervalCounter& tic_u, const ProtocolConfig& cfg,
                                         double t) {
  const HardwareDelays& hw = detail::effective_hardware(hw_in, cfg);
  const bool at_emit = link.model().evaluation == LinkEvaluation::emit_time;
  const double server_pulse = -server.time_error(t);
  const double user_pulse = -user.time_error(t);

  const double user_launch = user_pulse + hw.tx_user + hw.biedfa_lambda2;
  const double fiber_us = link.fiber_delay(Direction::user_to_server,
                                           at_emit ? std::max(t + user_launch, 0.0) : t);
  const double server_rx = user_launch + fiber_us + hw.rx_server;

  const double server_launch = server_pulse + hw.delay_unit_dev_server + hw.tx_server;
  const double fiber_su = link.fiber_delay(Direction::server_to_user,
                                           at_emit ? std::max(t + server_launch, 0.0) : t);
  const double user_rx = server_launch + fiber_su + hw.biedfa_lambda1 + hw.rx_user;

  TwoWayRound r;
  r.T_fwd = measure_interval(tic_s, server_pulse, server_rx);
  r.T_rev = measure_interval(tic_u, user_pulse, user_rx);
  r.offset_estimate = twtt_baseline_offset(r.T_fwd, r.T_rev);
  return r;
}

struct TdmSchedule {
  bool admitted = false;
  std::vector<double> slot_starts;  // offsets within the period, s
};

/// Time-division admission of `n_users` sites, one `slot` each per `period`.
/// `max_period` is the longest compensation period the clocks tolerate.
inline TdmSchedule tdm_admission(std::size_t n_users, double period, double slot,
                                 double max_period = 60.0) {
  if (!(slot > 0.0)) throw ValidationError("slot", "must be > 0");
  if (!(period > 0.0)) throw ValidationError("period", "must be > 0");
  TdmSchedule s;
  s.admitted = static_cast<double>(n_users) * slot <= period && period <= max_period;
  if (s.admitted) {
    s.slot_starts.reserve(n_users);
    for (std::size_t k = 0; k < n_users; ++k) s.slot_starts.push_back(static_cast<double>(k) * slot);
  }
  return s;
}

}  // namespace fots
