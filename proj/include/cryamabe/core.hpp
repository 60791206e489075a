#pragma once

#include <array>
#include <complex>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cryamabe {

using cplx = std::complex<double>;

// Largest supported CR dimension N (H^N, S^{2N+1} in C^{N+1}).
inline constexpr int kMaxN = 3;

//------------------------------------------------------------------------------
// Error types. Everything derives from std::runtime_error / std::invalid_argument
// so callers can catch broadly.

struct SingularChartError : std::domain_error {
  using std::domain_error::domain_error;
};

struct SingularPointError : std::domain_error {
  using std::domain_error::domain_error;
};

struct BasisConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonIntegrableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyMaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string &msg) {
  if (!ok)
    throw std::invalid_argument(msg);
}

inline void check_dimension(int N) {
  require(N >= 1 && N <= kMaxN,
          "dimension N must lie in [1, " + std::to_string(kMaxN) + "]");
}

// Homogeneous dimension of H^N.
constexpr int homogeneous_dimension(int N) { return 2 * N + 2; }

//------------------------------------------------------------------------------
// Thread cap from CRYAMABE_THREADS; 0 / unset means the OpenMP default.
inline int thread_cap() {
  if (const char *s = std::getenv("CRYAMABE_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0)
      return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Each index is written by exactly one thread, so
// results are independent of the thread count as long as bodies do not reduce.
template <class Body> void parallel_for(long n, Body &&body) {
#ifdef _OPENMP
  const int nt = thread_cap();
  // exceptions may not cross the parallel region: keep the first, rethrow after
  std::exception_ptr err;
#pragma omp parallel for schedule(static) num_threads(nt)
  for (long i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical(cryamabe_parallel_for_error)
      if (!err)
        err = std::current_exception();
    }
  }
  if (err)
    std::rethrow_exception(err);
#else
  for (long i = 0; i < n; ++i)
    body(i);
#endif
}

// Quintic smoothstep on [0,1], clamped outside. C^2 with vanishing first and
// second derivatives at both ends.
constexpr double smoothstep5(double x) {
  if (x <= 0.0)
    return 0.0;
  if (x >= 1.0)
    return 1.0;
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

} // namespace cryamabe
