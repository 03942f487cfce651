#pragma once

namespace wifiseg {

/// Selects between the OpenMP kernel and the serial reference loop. Both
/// produce bit-identical results.
enum class Execution { Serial, Parallel };

/// Sets the OpenMP worker count; values < 1 leave the runtime default.
void set_worker_count(int jobs);

}  // namespace wifiseg
