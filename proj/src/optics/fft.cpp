#include "optics/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace lcnf::optics {
namespace {

// The FFTW planner is not re-entrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : ptr(fftw_malloc(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

struct Plan {
  Plan(std::size_t bytes) : buf(bytes) {}
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftwBuffer buf;
  fftw_plan plan = nullptr;
};

enum class Kind { Forward, Backward, Dct2, Dct3 };

Plan& plan_for(std::size_t rows, std::size_t cols, Kind kind) {
  thread_local std::map<std::tuple<std::size_t, std::size_t, Kind>, std::unique_ptr<Plan>> cache;
  auto key = std::make_tuple(rows, cols, kind);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;

  const bool complex_kind = kind == Kind::Forward || kind == Kind::Backward;
  auto p = std::make_unique<Plan>(rows * cols * (complex_kind ? sizeof(fftw_complex) : sizeof(double)));
  {
    std::lock_guard lock(planner_mutex());
    const int r = static_cast<int>(rows), c = static_cast<int>(cols);
    switch (kind) {
      case Kind::Forward:
      case Kind::Backward: {
        auto* b = static_cast<fftw_complex*>(p->buf.ptr);
        p->plan = fftw_plan_dft_2d(r, c, b, b, kind == Kind::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE);
        break;
      }
      case Kind::Dct2:
      case Kind::Dct3: {
        auto* b = static_cast<double*>(p->buf.ptr);
        const auto k = kind == Kind::Dct2 ? FFTW_REDFT10 : FFTW_REDFT01;
        p->plan = fftw_plan_r2r_2d(r, c, b, b, k, k, FFTW_ESTIMATE);
        break;
      }
    }
  }
  if (!p->plan) throw NumericError("FFTW failed to create a plan");
  return *cache.emplace(key, std::move(p)).first->second;
}

ComplexGrid run_complex(const ComplexGrid& x, Kind kind) {
  if (x.empty()) throw ShapeError("fft of empty grid");
  Plan& p = plan_for(x.rows(), x.cols(), kind);
  std::memcpy(p.buf.ptr, x.data(), x.size() * sizeof(cdouble));
  fftw_execute(p.plan);
  ComplexGrid out(x.rows(), x.cols());
  std::memcpy(out.data(), p.buf.ptr, x.size() * sizeof(cdouble));
  return out;
}

RealGrid run_real(const RealGrid& x, Kind kind) {
  if (x.empty()) throw ShapeError("dct of empty grid");
  Plan& p = plan_for(x.rows(), x.cols(), kind);
  std::memcpy(p.buf.ptr, x.data(), x.size() * sizeof(double));
  fftw_execute(p.plan);
  RealGrid out(x.rows(), x.cols());
  std::memcpy(out.data(), p.buf.ptr, x.size() * sizeof(double));
  return out;
}

ComplexGrid shifted(const ComplexGrid& x, std::size_t dr, std::size_t dc) {
  ComplexGrid out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::size_t rr = (r + dr) % x.rows();
    for (std::size_t c = 0; c < x.cols(); ++c) out(rr, (c + dc) % x.cols()) = x(r, c);
  }
  return out;
}

}  // namespace

ComplexGrid fft2(const ComplexGrid& x) { return run_complex(x, Kind::Forward); }

ComplexGrid ifft2(const ComplexGrid& x) {
  ComplexGrid out = run_complex(x, Kind::Backward);
  const double inv = 1.0 / static_cast<double>(x.size());
  for (auto& v : out.vec()) v *= inv;
  return out;
}

ComplexGrid fftshift(const ComplexGrid& x) { return shifted(x, x.rows() / 2, x.cols() / 2); }

ComplexGrid ifftshift(const ComplexGrid& x) {
  return shifted(x, (x.rows() + 1) / 2, (x.cols() + 1) / 2);
}

ComplexGrid spectrum(const ComplexGrid& field) { return fftshift(fft2(field)); }
ComplexGrid spectrum(const RealGrid& field) { return spectrum(to_complex(field)); }
ComplexGrid inverse_spectrum(const ComplexGrid& centered) { return ifft2(ifftshift(centered)); }

RealGrid dct2(const RealGrid& x) { return run_real(x, Kind::Dct2); }
RealGrid dct3(const RealGrid& x) { return run_real(x, Kind::Dct3); }

}  // namespace lcnf::optics
