#pragma once

namespace rpmdp {

// Execution policy for the table-building kernels.  Every kernel body writes
// independent cells and runs its inner sums in index order, so the serial
// reference loop and the OpenMP loop produce bit-identical tables; tests
// assert that, and the bench target compares their wall time.
enum class Exec { serial, parallel };

template <class F>
void for_each_index(long long n, Exec exec, F&& fn) {
    if (exec == Exec::serial) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) fn(i);
}

} // namespace rpmdp
