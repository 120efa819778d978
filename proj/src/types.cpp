#include "seadet/types.hpp"

#include "seadet/error.hpp"

namespace seadet {

Label label_from_int(int v) {
  if (v == 1) return Label::Target;
  if (v == -1) return Label::Clutter;
  throw Error(ErrorCode::InvalidParameter, "label must be +1 or -1, got " + std::to_string(v));
}

std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::HH: return "HH";
    case Polarization::VV: return "VV";
    case Polarization::HV: return "HV";
    case Polarization::VH: return "VH";
  }
  return "??";
}

Polarization parse_polarization(std::string_view s) {
  if (s == "HH" || s == "hh") return Polarization::HH;
  if (s == "VV" || s == "vv") return Polarization::VV;
  if (s == "HV" || s == "hv") return Polarization::HV;
  if (s == "VH" || s == "vh") return Polarization::VH;
  throw Error(ErrorCode::InvalidParameter, "unknown polarization '" + std::string(s) + "'");
}

}  // namespace seadet
