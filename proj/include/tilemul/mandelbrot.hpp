#pragma once
// Fixed-point Mandelbrot escape-time rendering driven by the tiled multiplier.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tilemul/bigint.hpp"
#include "tilemul/mulengine.hpp"

namespace tilemul {

/// value = raw / 2^frac_bits
struct FixedPoint {
  BigInt raw;
  std::size_t frac_bits = 0;

  double to_double() const;
  friend bool operator==(const FixedPoint&, const FixedPoint&) = default;
};

/// Signed decimal with optional fraction and exponent ("-0.75", "1.5e-19").
/// Truncates toward zero, so the error is below 2^-frac_bits.
FixedPoint fp_from_decimal(std::string_view text, std::size_t frac_bits);

/// Re-expresses `x` with `frac_bits` fractional bits, truncating toward zero.
FixedPoint fp_rescale(const FixedPoint& x, std::size_t frac_bits);

/// Product truncated toward zero. Magnitudes go through the engine as
/// `width`-bit operands.
FixedPoint fp_mul(const FixedPoint& x, const FixedPoint& y, std::size_t width, const Multiplier& mul);

inline constexpr std::size_t kDefaultIntegerBits = 4;

struct EscapeResult {
  std::uint32_t count = 0;       // reported iteration index
  std::uint32_t iterations = 0;  // loop bodies executed (three multiplications each)
};

/// z starts at c. Each iteration multiplies re*re, im*im and re*im, returns
/// the iteration index once re^2 + im^2 > 4, then updates z. A component
/// reaching 2^integer_bits counts as escaping on the next iteration.
EscapeResult divergence_test(const FixedPoint& c_re, const FixedPoint& c_im, std::uint32_t max_iter,
                             const Multiplier& mul, std::size_t integer_bits = kDefaultIntegerBits);

struct ViewPort {
  FixedPoint center_re;
  FixedPoint center_im;
  FixedPoint scale;  // half the view width
  std::size_t width = 1;
  std::size_t height = 1;
};

/// Pixel (x, y) samples re = center_re + (2x + 1 - w) * scale / w and
/// im = center_im - (2y + 1 - h) * scale / w, row 0 at the top.
FixedPoint pixel_re(const ViewPort& vp, std::size_t x, std::size_t frac_bits);
FixedPoint pixel_im(const ViewPort& vp, std::size_t y, std::size_t frac_bits);

struct IterationMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t max_iter = 0;
  std::vector<std::uint32_t> counts;  // row-major
  std::uint64_t iterations = 0;      // sum of executed iterations

  std::uint32_t at(std::size_t x, std::size_t y) const { return counts[y * width + x]; }
  friend bool operator==(const IterationMap& a, const IterationMap& b) {
    return a.width == b.width && a.height == b.height && a.max_iter == b.max_iter && a.counts == b.counts;
  }
};

/// Pixels are handed out from a shared queue to `scheduler_width` workers.
IterationMap render(const ViewPort& vp, std::size_t frac_bits, std::uint32_t max_iter, unsigned scheduler_width,
                    const Multiplier& mul, std::size_t integer_bits = kDefaultIntegerBits);

/// Binary P5 with gray = floor(255 * count / max_iter).
void write_pgm(const IterationMap& map, const std::filesystem::path& path);

}  // namespace tilemul
