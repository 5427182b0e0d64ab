#include "postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include "log.hpp"

namespace outpaint {
namespace {

constexpr int kNeighbors[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

int region_width(const Mask& region) {
  int widest = 0;
  for (int y = 0; y < region.height(); ++y) {
    int run = 0;
    for (int x = 0; x < region.width(); ++x) {
      run = region(y, x) ? run + 1 : 0;
      widest = std::max(widest, run);
    }
  }
  return widest;
}

}  // namespace

Mask blend_region(const Mask& mask) {
  Mask region(mask.height(), mask.width());
  for (int y = 1; y + 1 < mask.height(); ++y) {
    for (int x = 1; x + 1 < mask.width(); ++x) {
      bool inside = true;
      for (int dy = -1; dy <= 1 && inside; ++dy)
        for (int dx = -1; dx <= 1 && inside; ++dx) inside = mask(y + dy, x + dx) == 0;
      region.set(y, x, inside);
    }
  }
  return region;
}

PixelImage seamless_blend(const PixelImage& source, const PixelImage& destination,
                          const Mask& mask, BlendStats* stats) {
  require(source.shape() == destination.shape(), "blend source and destination shapes differ");
  require(source.channels() == 3, "blend expects RGB images");
  require(mask.height() == source.height() && mask.width() == source.width(),
          "blend mask shape mismatch");
  BlendStats local;
  BlendStats& st = stats ? *stats : local;
  st = BlendStats{};

  const Mask region = blend_region(mask);
  const int h = source.height();
  const int w = source.width();

  Mask complement(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) complement.set(y, x, mask(y, x) == 0);

  if (region_width(complement) < 3 || region.support_size() == 0) {
    log_warning("blend region narrower than 3 px; copying source directly");
    st.fallback = true;
    PixelImage out = destination;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (complement(y, x))
          for (int c = 0; c < 3; ++c) out(y, x, c) = source(y, x, c);
    return out;
  }

  std::vector<int> index(static_cast<std::size_t>(h) * w, -1);
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (region(y, x)) {
        index[static_cast<std::size_t>(y) * w + x] = static_cast<int>(pixels.size());
        pixels.emplace_back(y, x);
      }
  const int n = static_cast<int>(pixels.size());
  st.region_pixels = pixels.size();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 5);
  for (int i = 0; i < n; ++i) {
    const auto [y, x] = pixels[i];
    triplets.emplace_back(i, i, 4.0);
    for (const auto& d : kNeighbors) {
      const int j = index[static_cast<std::size_t>(y + d[0]) * w + (x + d[1])];
      if (j >= 0) triplets.emplace_back(i, j, -1.0);
    }
  }
  Eigen::SparseMatrix<double> laplacian(n, n);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> solver;
  solver.compute(laplacian);
  solver.setMaxIterations(std::max(1000, 10 * n));

  PixelImage out = destination;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd rhs(n);
    Eigen::VectorXd guess(n);
    for (int i = 0; i < n; ++i) {
      const auto [y, x] = pixels[i];
      const double g = source(y, x, c);
      double b = 0.0;
      for (const auto& d : kNeighbors) {
        const int qy = y + d[0];
        const int qx = x + d[1];
        b += g - source(qy, qx, c);
        if (index[static_cast<std::size_t>(qy) * w + qx] < 0) b += destination(qy, qx, c);
      }
      rhs[i] = b;
      guess[i] = g;
    }
    const double norm = rhs.norm();
    solver.setTolerance(norm > 0.0 ? std::min(1e-6, kBlendTolerance / norm) : 1e-6);
    Eigen::VectorXd solution = solver.solveWithGuess(rhs, guess);
    const double residual = (laplacian * solution - rhs).norm();
    st.max_iterations = std::max(st.max_iterations, static_cast<int>(solver.iterations()));
    st.max_residual = std::max(st.max_residual, residual);
    if (residual >= kBlendTolerance)
      log_warning("Poisson solve residual " + std::to_string(residual) + " above tolerance");
    for (int i = 0; i < n; ++i) {
      const auto [y, x] = pixels[i];
      out(y, x, c) =
          static_cast<std::uint8_t>(std::clamp(std::floor(solution[i] + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace outpaint
