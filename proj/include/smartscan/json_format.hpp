#pragma once

#include <json.hpp>

namespace smartscan::jsonfmt {

/// Rounds to `digits` significant decimal digits (round-half-even as printf does).
double round_sig(double v, int digits = 9);

/// Integral values (|v| < 1e15) become JSON integers; everything else is a
/// double rounded to 9 significant digits. Keeps re-serialization stable.
nlohmann::json number(double v);

/// The value `number(v)` reads back as.
double canonical(double v);

/// Two-space indented dump with a trailing newline; object keys are sorted
/// by nlohmann::json's std::map storage.
std::string dump(const nlohmann::json& j);

}  // namespace smartscan::jsonfmt
