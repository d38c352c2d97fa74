#pragma once

namespace homesh {

/// Kernels with an OpenMP path also run serially; both give identical results.
enum class Execution { Serial, Parallel };

}  // namespace homesh
