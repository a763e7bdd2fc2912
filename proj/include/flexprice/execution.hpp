#pragma once

namespace flexprice {

/// Selects between the OpenMP kernel and the serial reference path.
/// Both produce bit-identical results; serial exists for testing and
/// benchmarking.
enum class Execution { serial, parallel };

}  // namespace flexprice
