#pragma once

namespace efs {

/// Worker count used by the OpenMP kernels (1 when built without OpenMP).
int max_threads();

/// Caps the worker pool; 0 restores the runtime default.
void set_thread_cap(int threads);

/// Applies the EFS_THREADS environment variable, if set. Returns the cap applied (0 = auto).
int apply_thread_env();

}  // namespace efs
