#pragma once

// Bernstein operators as positive unital maps on C[0,1], sampled on a grid.

#include <functional>
#include <string>
#include <vector>

namespace opsyslab {

struct TestFunction {
  std::string name;
  std::function<double(double)> f;
};

/// Named functions: "1", "x", "x^2", "x^3", "exp", "sin" (sin 2πx), "abs"
/// (|x − ½|), "sqrt". Throws InputError for other names.
TestFunction builtin_test_function(const std::string& name);
std::vector<std::string> builtin_test_function_names();

/// Bₙf(x) = Σₖ f(k/n) C(n,k) xᵏ(1 − x)ⁿ⁻ᵏ.
double bernstein(const std::function<double(double)>& f, int n, double x);

struct KorovkinRow {
  std::string name;
  double deviation = 0.0;  // max over the grid of |Bₙf − f|
  bool generator = false;  // one of 1, x, x²
};

struct KorovkinTable {
  int n = 0;
  int grid_size = 0;
  std::vector<KorovkinRow> rows;
};

/// Rows for 1, x, x² followed by the test functions, on grid_size uniform
/// points of [0, 1]. Throws InputError unless n ≥ 1 and grid_size ≥ 2.
KorovkinTable korovkin_demo(int n, int grid_size, const std::vector<TestFunction>& tests);

}  // namespace opsyslab
