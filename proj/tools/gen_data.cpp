// Generates the binary-classification CSV datasets shipped under data/.
//
// The five files mirror the row/column shapes of the usual small UCI-style
// benchmarks (sonar, ionosphere, heart disease, heart attack, loan) so the
// regression experiments run fully offline.  Features come from a random
// factor model (so columns are correlated) and labels from a logistic
// ground truth; everything is keyed to fixed seeds so regeneration is
// byte-identical.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dais/autodiff.hpp"
#include "dais/rng.hpp"

namespace {

struct Shape {
  std::string name;
  int rows;
  int features;
};

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(out_dir);

  const std::vector<Shape> shapes = {
      {"sonar", 208, 60},      {"ionosphere", 351, 34}, {"heart_disease", 303, 15},
      {"heart_attack", 303, 13}, {"loan", 614, 11},
  };

  for (const auto& shape : shapes) {
    std::uint64_t seed = 0x5eedull;
    for (char c : shape.name) seed = seed * 131 + static_cast<unsigned char>(c);
    dais::Rng rng(seed, 0);

    const int n = shape.rows, p = shape.features;
    const int rank = std::max(2, p / 3);

    // factor loadings and per-column scales/offsets
    std::vector<double> loading(static_cast<std::size_t>(p) * rank);
    for (auto& a : loading) a = rng.normal() * 0.8;
    std::vector<double> col_scale(static_cast<std::size_t>(p)), col_offset(static_cast<std::size_t>(p));
    for (auto& s : col_scale) s = 0.5 + 2.0 * rng.uniform();
    for (auto& o : col_offset) o = 2.0 * rng.normal();

    // logistic ground truth on the standardized latent features
    std::vector<double> w_true(static_cast<std::size_t>(p));
    for (auto& w : w_true) w = rng.normal() * (2.5 / std::sqrt(static_cast<double>(p)));
    const double b_true = 0.3 * rng.normal();

    std::vector<double> u(static_cast<std::size_t>(rank));
    std::vector<double> x(static_cast<std::size_t>(p));
    std::ofstream out(std::filesystem::path(out_dir) / (shape.name + ".csv"));
    for (int j = 0; j < p; ++j) out << "f" << j << ",";
    out << "label\n";
    char buf[32];
    for (int i = 0; i < n; ++i) {
      for (auto& v : u) v = rng.normal();
      double a = b_true;
      for (int j = 0; j < p; ++j) {
        double latent = 0.6 * rng.normal();
        for (int r = 0; r < rank; ++r) latent += loading[static_cast<std::size_t>(j) * rank + r] * u[static_cast<std::size_t>(r)];
        x[static_cast<std::size_t>(j)] = col_offset[static_cast<std::size_t>(j)] + col_scale[static_cast<std::size_t>(j)] * latent;
        a += w_true[static_cast<std::size_t>(j)] * latent;
      }
      const int label = rng.uniform() < dais::sigmoid(a) ? 1 : 0;
      for (int j = 0; j < p; ++j) {
        std::snprintf(buf, sizeof(buf), "%.6f", x[static_cast<std::size_t>(j)]);
        out << buf << ",";
      }
      out << label << "\n";
    }
    std::cout << shape.name << ".csv: " << n << " rows, " << p << " features (d = " << p + 1 << ")\n";
  }
  return 0;
}
