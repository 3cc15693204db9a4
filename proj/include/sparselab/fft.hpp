#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace sparselab {

/// Unnormalized n-dimensional DFT of an N^n row-major array.
/// forward: X_k = Σ x_j e^{-2πi k·j/N}; backward uses e^{+2πi k·j/N}.
/// Plans are cached and shared; execution is thread safe.
void dft(std::vector<std::complex<double>>& data, int n, std::int64_t N, bool forward);

/// Signed frequency index of k in [0, N): k for k < N/2, else k - N.
inline std::int64_t signed_index(std::int64_t k, std::int64_t N) { return k < N / 2 ? k : k - N; }

}  // namespace sparselab
