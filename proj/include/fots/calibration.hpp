#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>

#include "fots/channel.hpp"
#include "fots/errors.hpp"

namespace fots {

// Constant correction terms measured once per installation.
struct CalibrationSet {
  double tau_HD = 0.0;       // TX/RX chains plus server delay-unit deviation
  double tau_delay_u = 0.0;  // user delay-unit deviation (applied to steering)
  double tau_FPDA = 0.0;     // fiber asymmetry s->u minus u->s
  double tau_OAA = 0.0;      // Bi-EDFA asymmetry
  double C = 5e-3;
  std::map<std::string, std::string> provenance;  // field name -> method note

  void validate() const {
    const std::pair<const char*, double> fields[] = {
        {"tau_HD", tau_HD}, {"tau_delay_u", tau_delay_u}, {"tau_FPDA", tau_FPDA},
        {"tau_OAA", tau_OAA}, {"C", C}};
    for (const auto& [name, value] : fields) {
      if (!std::isfinite(value)) throw ValidationError(std::string("calibration.") + name, "must be finite");
      if (value != 0.0 && std::string(name) != "C") {
        auto it = provenance.find(name);
        if (it == provenance.end() || it->second.empty()) {
          throw ValidationError(std::string("calibration.") + name,
                                "non-zero term needs a provenance note");
        }
      }
    }
  }
};

// Sign convention for the initial offset in the direct-connection formula.
enum class HardwareDelaySign {
  consistent,  // tau_HD = T2_init - 2*T_offset_init - C (matches the T2 model)
  as_printed,  // tau_HD = T2_init + 2*T_offset_init - C
};

/// Hardware delay from a direct-connection run, where every fiber term is zero.
inline double calibrate_hardware_delay(double t2_init, double t_offset_init, double c,
                                       HardwareDelaySign sign = HardwareDelaySign::consistent) {
  const double offset_term = sign == HardwareDelaySign::consistent ? -2.0 * t_offset_init
                                                                   : 2.0 * t_offset_init;
  return t2_init + offset_term - c;
}

/// (lambda2 - lambda1) * D_A; wavelengths in nm, D_A in ps/nm, result in s.
inline double calibrate_dispersion_asymmetry(double lambda1_nm, double lambda2_nm,
                                             double accumulated_ps_per_nm) {
  return dispersion_asymmetry(lambda1_nm, lambda2_nm, accumulated_ps_per_nm);
}

struct DelayUnitCalibration {
  double deviation = 0.0;  // mean of output - input - programmed
  double stddev = 0.0;     // sample std of the same differences
  std::size_t samples = 0;
};

/// Delay-unit deviation from paired input/output edge times.
inline DelayUnitCalibration calibrate_delay_unit(std::span<const double> input,
                                                 std::span<const double> output,
                                                 double programmed_delay = 0.0) {
  if (input.empty()) throw ValidationError("input_series", "must not be empty");
  if (input.size() != output.size()) {
    throw ValidationError("output_series", "must pair one-to-one with input_series");
  }
  const std::size_t n = input.size();
  long double sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) sum += output[i] - input[i] - programmed_delay;
  const double mean = static_cast<double>(sum / static_cast<long double>(n));
  long double ss = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = output[i] - input[i] - programmed_delay - mean;
    ss += static_cast<long double>(d) * d;
  }
  const double stddev =
      n > 1 ? std::sqrt(static_cast<double>(ss / static_cast<long double>(n - 1))) : 0.0;
  return {mean, stddev, n};
}

inline double biedfa_asymmetry(double tau_lambda1, double tau_lambda2) {
  return tau_lambda1 - tau_lambda2;
}

/// Clock offset from T2 with every calibrated term removed; slope 0.5 in T2.
inline double corrected_offset(double t2, const CalibrationSet& cal) {
  return 0.5 * (t2 - cal.C - cal.tau_HD - cal.tau_FPDA - cal.tau_OAA);
}

}  // namespace fots
