#pragma once

// Truncated multivariate Taylor numbers ("jets") of order 1..3.
//
// A Jet<Order> over `nvars` seed directions stores the Taylor coefficients
// of a function up to total degree Order. Coefficients are kept in the
// monomial basis, so multiplication is a truncated polynomial product and
// elementary functions are applied by composing with their own Taylor
// series. A mixed partial with multi-index alpha is coefficient * alpha!.

#include <algorithm>
#include <array>
#include <cassert>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "nullift/errors.hpp"

namespace nullift {

namespace detail {

struct JetLayout {
  int nvars = 0;
  int order = 0;
  int size = 0;
  // Monomials as sorted index triples padded with -1.
  std::vector<std::array<int, 3>> monomials;
  std::vector<int> degree;
  // (lhs, rhs, result) for every monomial pair whose product survives
  // truncation. Only used for Order >= 2.
  std::vector<std::array<int, 3>> products;
  // Dense lookup keyed by (i+1, j+1, k+1) in base nvars+1.
  std::vector<int> lookup;

  int index_of(std::array<int, 3> idx) const {
    std::sort(idx.begin(), idx.end(), [](int a, int b) {
      // -1 sorts last
      if (a < 0) return false;
      if (b < 0) return true;
      return a < b;
    });
    const int base = nvars + 1;
    const int key = (idx[0] + 1) * base * base + (idx[1] + 1) * base + (idx[2] + 1);
    return lookup[static_cast<std::size_t>(key)];
  }
};

inline std::unique_ptr<JetLayout> build_jet_layout(int nvars, int order) {
  auto layout = std::make_unique<JetLayout>();
  layout->nvars = nvars;
  layout->order = order;
  layout->monomials.push_back({-1, -1, -1});
  layout->degree.push_back(0);
  if (order >= 1) {
    for (int i = 0; i < nvars; ++i) {
      layout->monomials.push_back({i, -1, -1});
      layout->degree.push_back(1);
    }
  }
  if (order >= 2) {
    for (int i = 0; i < nvars; ++i)
      for (int j = i; j < nvars; ++j) {
        layout->monomials.push_back({i, j, -1});
        layout->degree.push_back(2);
      }
  }
  if (order >= 3) {
    for (int i = 0; i < nvars; ++i)
      for (int j = i; j < nvars; ++j)
        for (int k = j; k < nvars; ++k) {
          layout->monomials.push_back({i, j, k});
          layout->degree.push_back(3);
        }
  }
  layout->size = static_cast<int>(layout->monomials.size());
  const int base = nvars + 1;
  layout->lookup.assign(static_cast<std::size_t>(base * base * base), -1);
  for (int m = 0; m < layout->size; ++m) {
    const auto& idx = layout->monomials[static_cast<std::size_t>(m)];
    const int key = (idx[0] + 1) * base * base + (idx[1] + 1) * base + (idx[2] + 1);
    layout->lookup[static_cast<std::size_t>(key)] = m;
  }
  if (order >= 2) {
    for (int a = 0; a < layout->size; ++a) {
      for (int b = 0; b < layout->size; ++b) {
        const int da = layout->degree[static_cast<std::size_t>(a)];
        const int db = layout->degree[static_cast<std::size_t>(b)];
        if (da + db > order) continue;
        std::array<int, 3> merged{-1, -1, -1};
        int n = 0;
        for (int t = 0; t < da; ++t) merged[static_cast<std::size_t>(n++)] = layout->monomials[static_cast<std::size_t>(a)][static_cast<std::size_t>(t)];
        for (int t = 0; t < db; ++t) merged[static_cast<std::size_t>(n++)] = layout->monomials[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)];
        layout->products.push_back({a, b, layout->index_of(merged)});
      }
    }
  }
  return layout;
}

inline const JetLayout* jet_layout(int nvars, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot = build_jet_layout(nvars, order);
  return slot.get();
}

constexpr int jet_capacity(int order) {
  return order == 1 ? 33 : order == 2 ? 45 : 56;
}

}  // namespace detail

template <int Order>
class Jet {
  static_assert(Order >= 1 && Order <= 3, "jets are supported up to order 3");

 public:
  static constexpr int kOrder = Order;
  static constexpr int kCapacity = detail::jet_capacity(Order);

  Jet() = default;

  /// Layout for `nvars` seed directions. Throws if the jet would not fit.
  static const detail::JetLayout* layout_for(int nvars) {
    const auto* layout = detail::jet_layout(nvars, Order);
    if (layout->size > kCapacity) {
      throw PreconditionError("jet of order " + std::to_string(Order) + " over " +
                              std::to_string(nvars) + " variables exceeds capacity");
    }
    return layout;
  }

  /// A constant with no seed layout; adopts the layout of the first jet it
  /// is combined with.
  static Jet scalar(double value) {
    Jet j;
    j.c_[0] = value;
    return j;
  }

  static Jet constant(const detail::JetLayout* layout, double value) {
    Jet j;
    j.layout_ = layout;
    std::fill_n(j.c_.begin(), layout->size, 0.0);
    j.c_[0] = value;
    return j;
  }

  /// The coordinate function seeded in direction k with the given value.
  static Jet variable(const detail::JetLayout* layout, int k, double value) {
    Jet j = constant(layout, value);
    j.c_[static_cast<std::size_t>(1 + k)] = 1.0;
    return j;
  }

  const detail::JetLayout* layout() const { return layout_; }
  int size() const { return layout_ ? layout_->size : 1; }
  double value() const { return c_[0]; }
  double coefficient(int m) const { return c_[static_cast<std::size_t>(m)]; }

  /// Mixed partial derivative along seed directions `idx` (length <= Order).
  double derivative(std::span<const int> idx) const {
    if (idx.empty()) return c_[0];
    if (!layout_) return 0.0;
    assert(static_cast<int>(idx.size()) <= Order);
    std::array<int, 3> key{-1, -1, -1};
    for (std::size_t t = 0; t < idx.size(); ++t) key[t] = idx[t];
    const int m = layout_->index_of(key);
    // multiplicity factorial
    std::array<int, 3> sorted = key;
    std::sort(sorted.begin(), sorted.begin() + static_cast<long>(idx.size()));
    double factor = 1.0;
    int run = 1;
    for (std::size_t t = 1; t < idx.size(); ++t) {
      if (sorted[t] == sorted[t - 1]) {
        ++run;
        factor *= run;
      } else {
        run = 1;
      }
    }
    return c_[static_cast<std::size_t>(m)] * factor;
  }
  double derivative(std::initializer_list<int> idx) const {
    return derivative(std::span<const int>(idx.begin(), idx.size()));
  }

  /// First derivative along seed direction k.
  double d(int k) const { return c_[static_cast<std::size_t>(1 + k)]; }

  Jet& operator+=(const Jet& o) {
    adopt(o);
    for (int m = 0; m < size(); ++m) c_[static_cast<std::size_t>(m)] += o.coef_or_zero(m);
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    adopt(o);
    for (int m = 0; m < size(); ++m) c_[static_cast<std::size_t>(m)] -= o.coef_or_zero(m);
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (int m = 0; m < size(); ++m) c_[static_cast<std::size_t>(m)] *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) {
    Jet r = -a;
    r.c_[0] += s;
    return r;
  }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) {
    for (int m = 0; m < a.size(); ++m) a.c_[static_cast<std::size_t>(m)] = -a.c_[static_cast<std::size_t>(m)];
    return a;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const detail::JetLayout* layout = a.layout_ ? a.layout_ : b.layout_;
    if (!a.layout_) return b * a.c_[0];
    if (!b.layout_) return a * b.c_[0];
    Jet r;
    r.layout_ = layout;
    const int n = layout->size;
    if constexpr (Order == 1) {
      const double a0 = a.c_[0];
      const double b0 = b.c_[0];
      r.c_[0] = a0 * b0;
      for (int m = 1; m < n; ++m) {
        r.c_[static_cast<std::size_t>(m)] =
            a0 * b.c_[static_cast<std::size_t>(m)] + b0 * a.c_[static_cast<std::size_t>(m)];
      }
    } else {
      std::fill_n(r.c_.begin(), n, 0.0);
      for (const auto& t : layout->products) {
        r.c_[static_cast<std::size_t>(t[2])] +=
            a.c_[static_cast<std::size_t>(t[0])] * b.c_[static_cast<std::size_t>(t[1])];
      }
    }
    return r;
  }

  /// f(x) given f and its first three derivatives at x.value().
  friend Jet compose_series(const Jet& x, const std::array<double, 4>& f) {
    Jet r = x;
    r.c_[0] = 0.0;  // r is now delta = x - x0
    if constexpr (Order == 1) {
      r *= f[1];
      r.c_[0] = f[0];
      return r;
    } else {
      const Jet delta = r;
      const Jet delta2 = delta * delta;
      Jet out = delta * f[1];
      out += delta2 * (0.5 * f[2]);
      if constexpr (Order == 3) {
        out += (delta2 * delta) * (f[3] / 6.0);
      }
      out.c_[0] = f[0];
      return out;
    }
  }

 private:
  double coef_or_zero(int m) const { return m < size() ? c_[static_cast<std::size_t>(m)] : 0.0; }

  void adopt(const Jet& o) {
    if (!layout_ && o.layout_) {
      const double v = c_[0];
      layout_ = o.layout_;
      std::fill_n(c_.begin(), layout_->size, 0.0);
      c_[0] = v;
    }
  }

  const detail::JetLayout* layout_ = nullptr;
  std::array<double, kCapacity> c_{};
};

}  // namespace nullift
