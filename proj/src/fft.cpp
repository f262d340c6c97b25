#include "mnmimo/fft.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include <fftw3.h>

namespace mnmimo::fft {
namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// Planning is not thread-safe in FFTW; execution with new arrays is.
// FFTW_UNALIGNED keeps the chosen codelets independent of buffer alignment,
// so results are bit-identical whatever memory the caller passes.
fftw_plan plan_for(int n, int sign) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, Plan> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, sign}];
    if (!slot) {
        auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
        auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
        slot.reset(fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED));
        fftw_free(in);
        fftw_free(out);
    }
    return slot.get();
}

CVector run(const CVector& x, int sign) {
    const auto n = static_cast<int>(x.size());
    CVector in = x; // FFTW may scribble on the input for some plans
    CVector out(x.size());
    if (n == 0) return out;
    fftw_execute_dft(plan_for(n, sign), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

} // namespace

CVector forward(const CVector& x) { return run(x, FFTW_FORWARD); }
CVector inverse(const CVector& X) { return run(X, FFTW_BACKWARD); }

} // namespace mnmimo::fft
