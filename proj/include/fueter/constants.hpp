#pragma once

namespace fueter {

/// Frozen defaults for the constants left open by the theory. `fueterlab calibrate` recomputes
/// them on the built-in families; configs may override each under [thresholds].
struct Constants {
  double epsilon0;            // energy threshold of the blow-up locus and of epsilon-regularity
  double mean_value;          // f(x) <= C (r^-n int_B f + r^2 sup |Delta f|)
  double heinz_c;             // constant of the Heinz hypotheses
  double heinz_constant;      // constant of the Heinz sup bound
  double epsilon_regularity;  // sup_{B_r/4} |du|^2 <= C (r^-2 eps + 1)
};

inline constexpr Constants kDefaultConstants{11.0, 0.49, 0.67, 0.59, 0.46};

}  // namespace fueter
