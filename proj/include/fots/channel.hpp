#pragma once

// Bidirectional fiber link and per-site hardware chains.
//
// Path composition (seconds):
//   user -> server:  tx_user + biedfa(lambda_user)   + fiber_us + rx_server
//   server -> user:  tx_server + fiber_su + biedfa(lambda_server) + rx_user
//   fiber_us = L*g + f(t) - A/2,   fiber_su = L*g + f(t) + A/2
// where f(t) is the reciprocal fluctuation and A = (l_user - l_server)*D_A + sagnac
// is the fiber asymmetry s->u minus u->s. The Bi-EDFA sits at the user site:
// the user's signal passes it before entering the span, the server's signal
// after leaving it.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fots/errors.hpp"
#include "fots/random.hpp"

namespace fots {

inline constexpr double kPicosecond = 1e-12;

enum class Direction { user_to_server, server_to_user };

// Which instant the fiber delay of each leg is evaluated at.
enum class LinkEvaluation {
  quasi_static,  // both legs at the round start
  emit_time,     // each leg at its own emission instant
};

struct Fluctuation {
  double amplitude = 0.0;   // stationary std, s
  double timescale = 1800;  // correlation time, s
};

struct LinkModel {
  double length_km = 0.0;
  double group_delay_per_km = 4.9e-6;  // s/km (group index ~1.468)
  Fluctuation fluctuation;
  std::optional<double> dispersion_coeff;        // D, ps/(nm km)
  std::optional<double> accumulated_dispersion;  // D_A, ps/nm
  double sagnac_asym = 0.0;                      // s, s->u minus u->s
  double lambda_server_nm = 1546.12;             // lambda1, carried s->u
  double lambda_user_nm = 1546.92;               // lambda2, carried u->s
  LinkEvaluation evaluation = LinkEvaluation::quasi_static;

  void validate(const std::string& where = "link") const {
    if (!(length_km >= 0.0) || !std::isfinite(length_km)) {
      throw ValidationError(where + ".length_km", "must be >= 0");
    }
    if (!(group_delay_per_km >= 0.0) || !std::isfinite(group_delay_per_km)) {
      throw ValidationError(where + ".group_delay_s_per_km", "must be >= 0");
    }
    if (!(fluctuation.amplitude >= 0.0) || !std::isfinite(fluctuation.amplitude)) {
      throw ValidationError(where + ".fluctuation.amplitude_s", "must be >= 0");
    }
    if (fluctuation.amplitude > 0.0 && !(fluctuation.timescale > 0.0)) {
      throw ValidationError(where + ".fluctuation.timescale_s", "must be > 0");
    }
    if (dispersion_coeff.has_value() == accumulated_dispersion.has_value()) {
      throw ValidationError(where + ".dispersion",
                            "set exactly one of dispersion_ps_per_nm_km and "
                            "accumulated_dispersion_ps_per_nm");
    }
    for (double v : {sagnac_asym, lambda_server_nm, lambda_user_nm}) {
      if (!std::isfinite(v)) throw ValidationError(where, "values must be finite");
    }
  }
};

struct HardwareDelays {
  double tx_server = 0.0;
  double rx_server = 0.0;
  double tx_user = 0.0;
  double rx_user = 0.0;
  double delay_unit_dev_server = 0.0;
  double delay_unit_dev_user = 0.0;
  double biedfa_lambda1 = 0.0;  // server wavelength, s->u
  double biedfa_lambda2 = 0.0;  // user wavelength, u->s

  void validate(const std::string& where = "hardware") const {
    for (double v : {tx_server, rx_server, tx_user, rx_user, delay_unit_dev_server,
                     delay_unit_dev_user, biedfa_lambda1, biedfa_lambda2}) {
      if (!std::isfinite(v)) throw ValidationError(where, "delays must be finite");
    }
  }
};

/// Accumulated dispersion D_A in ps/nm: D*L, or the measured value as given.
inline double accumulated_dispersion(const LinkModel& link) {
  if (link.dispersion_coeff.has_value() == link.accumulated_dispersion.has_value()) {
    throw ValidationError("link.dispersion", "exactly one dispersion source must be set");
  }
  if (link.accumulated_dispersion) return *link.accumulated_dispersion;
  return *link.dispersion_coeff * link.length_km;
}

/// Dispersion-induced delay difference s->u minus u->s, in seconds.
inline double dispersion_asymmetry(double lambda_server_nm, double lambda_user_nm,
                                   double accumulated_ps_per_nm) {
  return (lambda_user_nm - lambda_server_nm) * accumulated_ps_per_nm * kPicosecond;
}

/// Fiber-only asymmetry: dispersion plus Sagnac.
inline double fiber_asymmetry(const LinkModel& link) {
  return dispersion_asymmetry(link.lambda_server_nm, link.lambda_user_nm,
                              accumulated_dispersion(link)) +
         link.sagnac_asym;
}

/// Whole-path asymmetry s->u minus u->s: fiber, Bi-EDFA and TX/RX chains.
/// Fluctuation is reciprocal and never contributes.
inline double asymmetry(const LinkModel& link, const HardwareDelays& hw) {
  const double hardware = (hw.tx_server + hw.rx_user) - (hw.tx_user + hw.rx_server);
  const double amplifier = hw.biedfa_lambda1 - hw.biedfa_lambda2;
  return fiber_asymmetry(link) + amplifier + hardware;
}

/// A realized link: the model plus one path of the fluctuation process. The
/// process is Ornstein-Uhlenbeck on a grid, linearly interpolated, extended
/// lazily and cached, so both directions read the same realization.
class Link {
 public:
  Link(LinkModel model, std::uint64_t seed) : model_(std::move(model)), rng_(seed) {
    model_.validate();
    asym_ = fiber_asymmetry(model_);
    if (model_.fluctuation.amplitude > 0.0) {
      step_ = std::min(model_.fluctuation.timescale / 20.0, 1.0);
      rho_ = std::exp(-step_ / model_.fluctuation.timescale);
      path_.push_back(model_.fluctuation.amplitude * rng_.next());
    }
  }

  const LinkModel& model() const noexcept { return model_; }

  double nominal_delay() const noexcept {
    return model_.length_km * model_.group_delay_per_km;
  }

  double fluctuation(double t) const {
    if (path_.empty()) return 0.0;
    const double u = std::max(t, 0.0) / step_;
    const auto i = static_cast<std::size_t>(std::floor(u));
    extend(i + 1);
    const double frac = u - static_cast<double>(i);
    return path_[i] + frac * (path_[i + 1] - path_[i]);
  }

  /// Fiber span only, evaluated at `t`.
  double fiber_delay(Direction dir, double t) const {
    const double common = nominal_delay() + fluctuation(t);
    return dir == Direction::user_to_server ? common - 0.5 * asym_ : common + 0.5 * asym_;
  }

 private:
  void extend(std::size_t last) const {
    const double innovation = model_.fluctuation.amplitude * std::sqrt(1.0 - rho_ * rho_);
    while (path_.size() <= last) path_.push_back(rho_ * path_.back() + innovation * rng_.next());
  }

  LinkModel model_;
  double asym_ = 0.0;
  double step_ = 1.0;
  double rho_ = 0.0;
  mutable GaussianStream rng_;
  mutable std::vector<double> path_;
};

/// End-to-end one-way delay including TX/RX chains and the Bi-EDFA leg.
inline double one_way_delay(const Link& link, const HardwareDelays& hw, Direction dir,
                            double t_emit) {
  if (!(t_emit >= 0.0)) throw ValidationError("t_emit", "must be >= 0");
  const double fiber = link.fiber_delay(dir, t_emit);
  if (dir == Direction::user_to_server) {
    return hw.tx_user + hw.biedfa_lambda2 + fiber + hw.rx_server;
  }
  return hw.tx_server + fiber + hw.biedfa_lambda1 + hw.rx_user;
}

}  // namespace fots
