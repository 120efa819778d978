#pragma once

#include <string>
#include <string_view>

namespace seadet {

/// Class label; the numeric value is the SVM label y.
enum class Label : int { Target = +1, Clutter = -1 };

inline constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }
inline constexpr double to_double(Label l) noexcept { return static_cast<double>(to_int(l)); }

/// Accepts +1 / 1 / -1.
Label label_from_int(int v);

enum class Polarization { HH, VV, HV, VH };

std::string_view to_string(Polarization p);
Polarization parse_polarization(std::string_view s);

}  // namespace seadet
