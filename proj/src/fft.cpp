#include "sparselab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "sparselab/error.hpp"

namespace sparselab {

namespace {

std::mutex plan_mutex;
std::map<std::tuple<int, std::int64_t, bool>, fftw_plan> plans;

fftw_plan get_plan(int n, std::int64_t N, bool forward) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    const auto key = std::make_tuple(n, N, forward);
    const auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::size_t total = 1;
    std::vector<int> dims(static_cast<std::size_t>(n), static_cast<int>(N));
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(N);
    fftw_complex* buf = fftw_alloc_complex(total);
    const fftw_plan p = fftw_plan_dft(n, dims.data(), buf, buf, forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!p) throw Error("fft planning failed");
    plans.emplace(key, p);
    return p;
}

}  // namespace

void dft(std::vector<std::complex<double>>& data, int n, std::int64_t N, bool forward) {
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(N);
    if (data.size() != total) throw Error("dft size mismatch");
    const fftw_plan p = get_plan(n, N, forward);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
}

}  // namespace sparselab
