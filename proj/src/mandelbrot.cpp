#include "tilemul/mandelbrot.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include "tilemul/errors.hpp"

namespace tilemul {

namespace {

BigInt pow10(std::size_t n) {
  BigInt r = 1;
  for (std::size_t i = 0; i < n; ++i) r *= 10;
  return r;
}

// Quotient truncated toward zero for either sign.
BigInt div_trunc(const BigInt& num, const BigInt& den) { return num / den; }

}  // namespace

double FixedPoint::to_double() const {
  return std::ldexp(raw.convert_to<double>(), -static_cast<int>(frac_bits));
}

FixedPoint fp_from_decimal(std::string_view text, std::size_t frac_bits) {
  const std::string original(text);
  auto fail = [&] { throw ParseError("not a decimal number: '" + original + "'"); };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';

  BigInt digits = 0;
  std::size_t frac_digits = 0;
  bool any = false, dot = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits = digits * 10 + (ch - '0');
      any = true;
      if (dot) ++frac_digits;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) fail();

  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) exp_negative = text[i++] == '-';
    if (i == text.size()) fail();
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i])) || exponent > 100000) fail();
      exponent = exponent * 10 + (text[i] - '0');
    }
    if (exp_negative) exponent = -exponent;
  }
  if (i != text.size()) fail();

  // value = digits * 10^(exponent - frac_digits)
  const long shift10 = exponent - static_cast<long>(frac_digits);
  BigInt raw = digits << frac_bits;
  if (shift10 >= 0) raw *= pow10(static_cast<std::size_t>(shift10));
  else raw = div_trunc(raw, pow10(static_cast<std::size_t>(-shift10)));
  return {negative ? BigInt(-raw) : raw, frac_bits};
}

FixedPoint fp_rescale(const FixedPoint& x, std::size_t frac_bits) {
  if (frac_bits >= x.frac_bits) return {x.raw << (frac_bits - x.frac_bits), frac_bits};
  const std::size_t drop = x.frac_bits - frac_bits;
  BigInt mag = abs(x.raw) >> drop;
  return {x.raw < 0 ? BigInt(-mag) : mag, frac_bits};
}

FixedPoint fp_mul(const FixedPoint& x, const FixedPoint& y, std::size_t width, const Multiplier& mul) {
  if (x.frac_bits != y.frac_bits) throw ArgumentError("fp_mul: operands differ in precision");
  const BigInt mag = mul(abs(x.raw), abs(y.raw), width) >> x.frac_bits;
  const bool negative = (x.raw < 0) != (y.raw < 0);
  return {negative ? BigInt(-mag) : mag, x.frac_bits};
}

EscapeResult divergence_test(const FixedPoint& c_re, const FixedPoint& c_im, std::uint32_t max_iter,
                             const Multiplier& mul, std::size_t integer_bits) {
  if (max_iter < 1) throw ArgumentError("divergence_test: max_iter must be >= 1");
  if (c_re.frac_bits != c_im.frac_bits) throw ArgumentError("divergence_test: mixed precision");
  const std::size_t frac = c_re.frac_bits;
  const std::size_t width = frac + integer_bits;
  const BigInt limit = BigInt(1) << width;
  const BigInt four = BigInt(4) << frac;

  auto out_of_range = [&](const BigInt& v) { return abs(v) >= limit; };
  if (out_of_range(c_re.raw) || out_of_range(c_im.raw)) return {0, 0};

  FixedPoint re = c_re, im = c_im;
  for (std::uint32_t i = 0; i < max_iter; ++i) {
    const FixedPoint re2 = fp_mul(re, re, width, mul);
    const FixedPoint im2 = fp_mul(im, im, width, mul);
    const FixedPoint reim = fp_mul(re, im, width, mul);
    if (re2.raw + im2.raw > four) return {i, i + 1};
    re.raw = re2.raw - im2.raw + c_re.raw;
    im.raw = 2 * reim.raw + c_im.raw;
    if (out_of_range(re.raw) || out_of_range(im.raw)) return {std::min(i + 1, max_iter), i + 1};
  }
  return {max_iter, max_iter};
}

FixedPoint pixel_re(const ViewPort& vp, std::size_t x, std::size_t frac_bits) {
  const auto center = fp_rescale(vp.center_re, frac_bits);
  const auto scale = fp_rescale(vp.scale, frac_bits);
  const BigInt step = BigInt(2 * static_cast<long long>(x) + 1 - static_cast<long long>(vp.width)) * scale.raw;
  return {center.raw + div_trunc(step, BigInt(vp.width)), frac_bits};
}

FixedPoint pixel_im(const ViewPort& vp, std::size_t y, std::size_t frac_bits) {
  const auto center = fp_rescale(vp.center_im, frac_bits);
  const auto scale = fp_rescale(vp.scale, frac_bits);
  const BigInt step = BigInt(2 * static_cast<long long>(y) + 1 - static_cast<long long>(vp.height)) * scale.raw;
  return {center.raw - div_trunc(step, BigInt(vp.width)), frac_bits};
}

IterationMap render(const ViewPort& vp, std::size_t frac_bits, std::uint32_t max_iter, unsigned scheduler_width,
                    const Multiplier& mul, std::size_t integer_bits) {
  if (vp.width == 0 || vp.height == 0) throw ArgumentError("render: empty viewport");
  if (vp.scale.raw <= 0) throw ArgumentError("render: scale must be positive");
  if (max_iter < 1) throw ArgumentError("render: max_iter must be >= 1");

  IterationMap map;
  map.width = vp.width;
  map.height = vp.height;
  map.max_iter = max_iter;
  map.counts.assign(vp.width * vp.height, 0);

  std::vector<FixedPoint> re(vp.width), im(vp.height);
  for (std::size_t x = 0; x < vp.width; ++x) re[x] = pixel_re(vp, x, frac_bits);
  for (std::size_t y = 0; y < vp.height; ++y) im[y] = pixel_im(vp, y, frac_bits);

  std::atomic<std::size_t> next{0};
  std::atomic<std::uint64_t> iterations{0};
  auto slot = [&] {
    std::uint64_t local = 0;
    for (std::size_t p; (p = next.fetch_add(1, std::memory_order_relaxed)) < map.counts.size();) {
      const auto r = divergence_test(re[p % vp.width], im[p / vp.width], max_iter, mul, integer_bits);
      map.counts[p] = r.count;
      local += r.iterations;
    }
    iterations += local;
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < std::max(1u, scheduler_width); ++i) pool.emplace_back(slot);
    slot();
  }
  map.iterations = iterations.load();
  return map;
}

void write_pgm(const IterationMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  std::vector<unsigned char> pixels(map.counts.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
    pixels[i] = static_cast<unsigned char>(255ull * map.counts[i] / map.max_iter);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace tilemul
