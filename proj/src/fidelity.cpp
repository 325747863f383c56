// Copyright 2026 The vibromix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vibromix/fidelity.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <sstream>

#include "vibromix/channel.hpp"
#include "vibromix/error.hpp"

namespace vibromix::fidelity {
namespace {

// Direct evaluation below this many multiply-adds; FFT above.
constexpr double kDirectWorkLimit = 2e7;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> centered(const std::vector<double>& v, double& energy) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  std::vector<double> out(v.size());
  energy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = v[i] - mean;
    energy += out[i] * out[i];
  }
  return out;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// c[L] = sum_i a[i] * b[i + L] for L in [-max_lag, max_lag].
std::vector<double> raw_xcorr_fft(const std::vector<double>& a, const std::vector<double>& b,
                                  std::int64_t max_lag) {
  std::size_t n = 1;
  while (n < a.size() + b.size()) n <<= 1;
  const std::size_t bins = n / 2 + 1;
  std::unique_ptr<double, FftwFree> ta(fftw_alloc_real(n));
  std::unique_ptr<double, FftwFree> tb(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwFree> fa(fftw_alloc_complex(bins));
  std::unique_ptr<fftw_complex, FftwFree> fb(fftw_alloc_complex(bins));
  fftw_plan pa, pb, pinv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(n), ta.get(), fa.get(), FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(n), tb.get(), fb.get(), FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(n), fa.get(), ta.get(), FFTW_ESTIMATE);
  }
  std::fill(ta.get(), ta.get() + n, 0.0);
  std::fill(tb.get(), tb.get() + n, 0.0);
  std::copy(a.begin(), a.end(), ta.get());
  std::copy(b.begin(), b.end(), tb.get());
  fftw_execute(pa);
  fftw_execute(pb);
  for (std::size_t k = 0; k < bins; ++k) {
    const std::complex<double> za(fa.get()[k][0], fa.get()[k][1]);
    const std::complex<double> zb(fb.get()[k][0], fb.get()[k][1]);
    const std::complex<double> c = std::conj(za) * zb;
    fa.get()[k][0] = c.real();
    fa.get()[k][1] = c.imag();
  }
  fftw_execute(pinv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pinv);
  }
  std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1));
  const auto nn = static_cast<std::int64_t>(n);
  for (std::int64_t lag = -max_lag; lag <= max_lag; ++lag) {
    const std::int64_t idx = lag >= 0 ? lag : nn + lag;
    out[static_cast<std::size_t>(lag + max_lag)] = ta.get()[idx] / static_cast<double>(n);
  }
  return out;
}

std::vector<double> raw_xcorr_direct(const std::vector<double>& a, const std::vector<double>& b,
                                     std::int64_t max_lag) {
  std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1));
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  for (std::int64_t lag = -max_lag; lag <= max_lag; ++lag) {
    const std::int64_t lo = std::max<std::int64_t>(0, -lag);
    const std::int64_t hi = std::min<std::int64_t>(na, nb - lag);
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += a[i] * b[i + lag];
    out[static_cast<std::size_t>(lag + max_lag)] = acc;
  }
  return out;
}

}  // namespace

std::vector<double> xcorr_normalized(const SampleBlock& a, const SampleBlock& b,
                                     std::int64_t max_lag) {
  if (a.rate != b.rate) throw ContractError("cross-correlation requires equal sample rates");
  if (a.empty() || b.empty()) throw AnalysisError("cross-correlation of an empty signal");
  if (max_lag < 0 || max_lag >= static_cast<std::int64_t>(std::min(a.size(), b.size()))) {
    throw ContractError("maximum lag must be shorter than both signals");
  }
  double ea = 0.0, eb = 0.0;
  const auto ca = centered(a.samples, ea);
  const auto cb = centered(b.samples, eb);
  if (!(ea > 0.0) || !(eb > 0.0)) {
    throw AnalysisError("cross-correlation of a constant (zero-variance) signal");
  }
  const double work = static_cast<double>(std::min(a.size(), b.size())) *
                      static_cast<double>(2 * max_lag + 1);
  std::vector<double> c = work < kDirectWorkLimit ? raw_xcorr_direct(ca, cb, max_lag)
                                                  : raw_xcorr_fft(ca, cb, max_lag);
  const double norm = std::sqrt(ea * eb);
  for (double& v : c) v /= norm;
  return c;
}

std::int64_t xcorr_lag(const SampleBlock& a, const SampleBlock& b, double max_lag_s) {
  if (!(max_lag_s >= 0.0)) throw ContractError("max_lag_s must be >= 0");
  if (!(max_lag_s < std::min(a.duration(), b.duration()))) {
    throw ContractError("max_lag_s must be shorter than both signals");
  }
  const auto max_lag = static_cast<std::int64_t>(std::floor(max_lag_s * a.rate));
  const auto c = xcorr_normalized(a, b, max_lag);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (c[i] > c[best]) best = i;
  }
  return static_cast<std::int64_t>(best) - max_lag;
}

double aligned_r(const SampleBlock& a, const SampleBlock& b, std::int64_t lag) {
  const auto na = static_cast<std::int64_t>(a.size());
  const auto nb = static_cast<std::int64_t>(b.size());
  const std::int64_t lo = std::max<std::int64_t>(0, -lag);
  const std::int64_t hi = std::min<std::int64_t>(na, nb - lag);
  const std::int64_t n = hi - lo;
  if (n < 2) throw AnalysisError("aligned overlap shorter than 2 samples");
  double ma = 0.0, mb = 0.0;
  for (std::int64_t i = lo; i < hi; ++i) {
    ma += a.samples[i];
    mb += b.samples[i + lag];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::int64_t i = lo; i < hi; ++i) {
    const double da = a.samples[i] - ma;
    const double db = b.samples[i + lag] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw AnalysisError("zero variance after alignment");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

FidelityReport fidelity_report(const SampleBlock& tool, const SampleBlock& handle,
                               const FidelityOptions& options) {
  if (tool.rate != handle.rate) throw ContractError("tool and handle recordings differ in rate");
  const double window = std::min({options.max_lag_s, tool.duration() - 1.0 / tool.rate,
                                  handle.duration() - 1.0 / handle.rate});
  FidelityReport r;
  r.channel = options.channel;
  r.lag_samples = xcorr_lag(tool, handle, std::max(window, 0.0));
  r.r = aligned_r(tool, handle, r.lag_samples);
  r.delay_s = static_cast<double>(r.lag_samples) / tool.rate;
  return r;
}

FidelityReport fidelity_report(const TriAxisSeries& tool, const TriAxisSeries& handle,
                               const FidelityOptions& options) {
  return fidelity_report(axis_combine(tool, CombineMode::F3), axis_combine(handle, CombineMode::F3),
                         options);
}

FidelityReport fidelity_report(const TriAxisSeries& tool, const SampleBlock& handle,
                               const FidelityOptions& options) {
  return fidelity_report(axis_combine(tool, CombineMode::F3), handle, options);
}

std::string reports_csv(const std::vector<FidelityReport>& reports) {
  std::ostringstream os;
  os.precision(10);
  os << "channel,r,lag_samples,delay_s\n";
  for (const auto& r : reports) {
    os << r.channel << ',' << r.r << ',' << r.lag_samples << ',' << r.delay_s << '\n';
  }
  return os.str();
}

std::string reports_text(const std::vector<FidelityReport>& reports) {
  std::ostringstream os;
  os.precision(4);
  os << "Signal reproduction (tool vs handle)\n";
  for (const auto& r : reports) {
    os << "  " << r.channel << ": r = " << r.r << ", delay = " << r.delay_s * 1000.0 << " ms ("
       << r.lag_samples << " samples)\n";
  }
  return os.str();
}

}  // namespace vibromix::fidelity
