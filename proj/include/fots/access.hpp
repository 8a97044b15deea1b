#pragma once

// Passive access node: a coupler on the span taps both counter-propagating
// signals of a round. T3 = t_S-AN - t_U-AN, and delaying t_U-AN by T3/2
// reproduces t_server + C/2 wherever the tap sits. The span is taken as
// uniform, so the delay to the tap scales with distance.

#include <cmath>
#include <string>

#include "fots/channel.hpp"
#include "fots/errors.hpp"
#include "fots/protocol.hpp"

namespace fots {

struct AccessNode {
  double distance_from_server_km = 0.0;
  double coupler_delay = 0.0;  // s, added to both taps
  TicModel tic;

  void validate(double link_length_km, const std::string& where = "access_node") const {
    if (!(distance_from_server_km >= 0.0) || distance_from_server_km > link_length_km) {
      throw ValidationError(where + ".distance_km", "must lie within [0, link length]");
    }
    if (!std::isfinite(coupler_delay)) throw ValidationError(where + ".coupler_delay_s", "must be finite");
    tic.validate(where + ".tic");
  }
};

struct TapTimes {
  double t_u_an = 0.0;    // user signal at the node (round-relative)
  double t_s_an = 0.0;    // reversed server signal at the node
  double tau_u_an = 0.0;  // span delay user -> node
  double tau_s_an = 0.0;  // span delay server -> node
};

inline double span_fraction_from_server(const AccessNode& node, const LinkModel& link) {
  return link.length_km > 0.0 ? node.distance_from_server_km / link.length_km : 0.0;
}

inline TapTimes tap_times(const AccessNode& node, const LinkModel& link, const RoundEvents& ev) {
  const double f = span_fraction_from_server(node, link);
  TapTimes tap;
  tap.tau_u_an = (1.0 - f) * ev.fiber_us;
  tap.tau_s_an = f * ev.fiber_su;
  tap.t_u_an = ev.user_launch + tap.tau_u_an + node.coupler_delay;
  tap.t_s_an = ev.server_launch + tap.tau_s_an + node.coupler_delay;
  return tap;
}

struct Recovery {
  double T3 = 0.0;
  double recovered = 0.0;  // t_U-AN + T3/2, round-relative
};

inline Recovery recover_time(TimeIntervalCounter& node_tic, double t_u_an, double t_s_an) {
  Recovery r;
  r.T3 = measure_interval(node_tic, t_u_an, t_s_an);
  if (r.T3 < 0.0) {
    throw NegativeT3("negative T3 at access node: C too small or tap mis-wired");
  }
  r.recovered = t_u_an + 0.5 * r.T3;
  return r;
}

struct NodeRoundResult {
  double t_round = 0.0;
  double T1 = 0.0;
  double T3 = 0.0;
  double offset_estimate = 0.0;  // (T3 - C)/2
  double true_offset = 0.0;      // t_server - t_U-AN
  double residual = 0.0;         // recovered - (t_server + C/2)
  double position_km = 0.0;
};

inline NodeRoundResult access_round(const AccessNode& node, TimeIntervalCounter& node_tic,
                                    const LinkModel& link, const SyncRoundResult& round,
                                    double c) {
  const TapTimes tap = tap_times(node, link, round.events);
  const Recovery rec = recover_time(node_tic, tap.t_u_an, tap.t_s_an);
  NodeRoundResult out;
  out.t_round = round.t_round;
  out.T1 = round.T1;
  out.T3 = rec.T3;
  out.offset_estimate = 0.5 * (rec.T3 - c);
  out.true_offset = round.events.server_pulse - tap.t_u_an;
  out.residual = rec.recovered - (round.events.server_pulse + 0.5 * c);
  out.position_km = node.distance_from_server_km;
  return out;
}

}  // namespace fots
