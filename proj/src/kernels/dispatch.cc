#include <atomic>
#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gramsel/kernels.h"

namespace gramsel::kernels {

namespace {

struct Table {
  void (*accumulate)(double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
};

constexpr Table kScalarTable{scalar::accumulate, scalar::axpy, scalar::scale, scalar::dot,
                             scalar::sum_squares};
#if defined(GRAMSEL_HAVE_AVX2)
constexpr Table kAvx2Table{avx2::accumulate, avx2::axpy, avx2::scale, avx2::dot, avx2::sum_squares};
#endif
#if defined(GRAMSEL_HAVE_NEON)
constexpr Table kNeonTable{neon::accumulate, neon::axpy, neon::scale, neon::dot, neon::sum_squares};
#endif

const Table& table_for(Backend b) {
  switch (b) {
#if defined(GRAMSEL_HAVE_AVX2)
    case Backend::kAvx2:
      return kAvx2Table;
#endif
#if defined(GRAMSEL_HAVE_NEON)
    case Backend::kNeon:
      return kNeonTable;
#endif
    default:
      return kScalarTable;
  }
}

Backend initial_backend() {
  if (const char* env = std::getenv("GRAMSEL_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return Backend::kScalar;
  }
  return detect_backend();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{&table_for(initial_backend())};
  return table;
}

std::atomic<Backend>& current_backend() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

const Table& active() { return *current().load(std::memory_order_relaxed); }

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(GRAMSEL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::kNeon:
#if defined(GRAMSEL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect_backend() {
  if (backend_available(Backend::kAvx2)) return Backend::kAvx2;
  if (backend_available(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

Backend active_backend() { return current_backend().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument("kernel backend '" + std::string(backend_name(b)) + "' is not available");
  }
  current().store(&table_for(b), std::memory_order_relaxed);
  current_backend().store(b, std::memory_order_relaxed);
}

void accumulate(std::span<double> y, std::span<const double> x) {
  assert(y.size() == x.size());
  active().accumulate(y.data(), x.data(), y.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(y.size() == x.size());
  active().axpy(a, x.data(), y.data(), y.size());
}

void scale(double a, std::span<double> y) { active().scale(a, y.data(), y.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  assert(y.size() == x.size());
  return active().dot(x.data(), y.data(), x.size());
}

double sum_squares(std::span<const double> x) { return active().sum_squares(x.data(), x.size()); }

}  // namespace gramsel::kernels
