#include "opsyslab/korovkin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "opsyslab/errors.hpp"

namespace opsyslab {

TestFunction builtin_test_function(const std::string& name) {
  if (name == "1") return {name, [](double) { return 1.0; }};
  if (name == "x") return {name, [](double x) { return x; }};
  if (name == "x^2") return {name, [](double x) { return x * x; }};
  if (name == "x^3") return {name, [](double x) { return x * x * x; }};
  if (name == "exp") return {name, [](double x) { return std::exp(x); }};
  if (name == "sin") return {name, [](double x) { return std::sin(2 * std::numbers::pi * x); }};
  if (name == "abs") return {name, [](double x) { return std::abs(x - 0.5); }};
  if (name == "sqrt") return {name, [](double x) { return std::sqrt(x); }};
  throw InputError("unknown test function '" + name + "'");
}

std::vector<std::string> builtin_test_function_names() {
  return {"1", "x", "x^2", "x^3", "exp", "sin", "abs", "sqrt"};
}

double bernstein(const std::function<double(double)>& f, int n, double x) {
  if (n < 1) throw InputError("bernstein: degree must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("bernstein: x outside [0, 1]");
  if (x == 0.0) return f(0.0);
  if (x == 1.0) return f(1.0);
  // Binomial weights in log space; large n overflows C(n,k) otherwise.
  const double lx = std::log(x), l1x = std::log1p(-x);
  const double lgn = std::lgamma(n + 1.0);
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double lw = lgn - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * lx + (n - k) * l1x;
    sum += std::exp(lw) * f(double(k) / n);
  }
  return sum;
}

KorovkinTable korovkin_demo(int n, int grid_size, const std::vector<TestFunction>& tests) {
  if (n < 1) throw InputError("korovkin_demo: n must be at least 1");
  if (grid_size < 2) throw InputError("korovkin_demo: grid_size must be at least 2");
  KorovkinTable out;
  out.n = n;
  out.grid_size = grid_size;
  std::vector<TestFunction> all;
  for (const char* g : {"1", "x", "x^2"}) all.push_back(builtin_test_function(g));
  all.insert(all.end(), tests.begin(), tests.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& tf = all[i];
    if (!tf.f) throw InputError("korovkin_demo: test function '" + tf.name + "' is empty");
    double dev = 0.0;
    for (int j = 0; j < grid_size; ++j) {
      const double x = double(j) / (grid_size - 1);
      dev = std::max(dev, std::abs(bernstein(tf.f, n, x) - tf.f(x)));
    }
    out.rows.push_back({tf.name, dev, i < 3});
  }
  return out;
}

}  // namespace opsyslab
