#pragma once

#include <limits>

#ifdef __SSE2__
#include <emmintrin.h>
#endif

namespace forge::detail {

struct RowScan {
  double max_excess = -std::numeric_limits<double>::infinity();
  long long count = 0;
};

// Max and positivity count of hx[z] - hy[z] - hxy over z < n. This is the
// innermost lap of the O(n^3) triangle scans; the compiler will not vectorize
// the twin conditional reductions on its own.
inline void scan_row(const double* hx, const double* hy, double hxy, int n,
                     RowScan& acc) {
  int z = 0;
#ifdef __SSE2__
  if (n >= 4) {
    const __m128d vhxy = _mm_set1_pd(hxy);
    const __m128d vzero = _mm_setzero_pd();
    __m128d vmx = _mm_set1_pd(acc.max_excess);
    __m128i vcnt = _mm_setzero_si128();
    for (; z + 2 <= n; z += 2) {
      const __m128d e = _mm_sub_pd(
          _mm_sub_pd(_mm_loadu_pd(hx + z), _mm_loadu_pd(hy + z)), vhxy);
      vmx = _mm_max_pd(vmx, e);
      // greater-than mask is all-ones per lane; subtracting it counts
      vcnt = _mm_sub_epi64(vcnt, _mm_castpd_si128(_mm_cmpgt_pd(e, vzero)));
    }
    alignas(16) double mx2[2];
    alignas(16) long long c2[2];
    _mm_store_pd(mx2, vmx);
    _mm_store_si128(reinterpret_cast<__m128i*>(c2), vcnt);
    acc.max_excess = mx2[0] > mx2[1] ? mx2[0] : mx2[1];
    acc.count += c2[0] + c2[1];
  }
#endif
  for (; z < n; ++z) {
    const double e = hx[z] - hy[z] - hxy;
    if (e > acc.max_excess) acc.max_excess = e;
    acc.count += e > 0;
  }
}

}  // namespace forge::detail
