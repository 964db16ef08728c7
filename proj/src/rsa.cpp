#include "tilemul/rsa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <thread>

#include <boost/multiprecision/miller_rabin.hpp>

#include "tilemul/errors.hpp"

namespace tilemul {

MontgomeryContext mont_setup(const BigInt& modulus, std::size_t k) {
  if (modulus < 3) throw ArgumentError("mont_setup: modulus must be at least 3");
  if (!bit_test(modulus, 0)) throw ArgumentError("mont_setup: modulus must be odd");
  if (k < bit_length(modulus)) throw ArgumentError("mont_setup: radix 2^k must exceed the modulus");

  MontgomeryContext ctx;
  ctx.modulus = modulus;
  ctx.k = k;

  // Newton iteration for M^-1 mod 2^k; each step doubles the correct low bits.
  const BigInt m_low = low_bits(modulus, k);
  BigInt inv = 1;
  for (std::size_t good = 1; good < k; good *= 2) inv = low_bits(inv * (2 - m_low * inv), k);
  inv = low_bits(inv, k);
  const BigInt radix = BigInt(1) << k;
  ctx.n_prime = inv == 0 ? BigInt(0) : radix - inv;
  ctx.r_mod = radix % modulus;
  ctx.r2_mod = (ctx.r_mod * ctx.r_mod) % modulus;

  if (low_bits(modulus * ctx.n_prime, k) != radix - 1)
    throw InvariantViolation("mont_setup: reduction constant check failed");
  return ctx;
}

MontgomeryContext mont_setup(const BigInt& modulus) { return mont_setup(modulus, bit_length(modulus)); }

BigInt mont_mul(const BigInt& am, const BigInt& bm, const MontgomeryContext& ctx, const Multiplier& mul) {
  if (am < 0 || am >= ctx.modulus || bm < 0 || bm >= ctx.modulus)
    throw RangeError("mont_mul: operands must be reduced modulo M");
  const std::size_t k = ctx.k;
  const BigInt d = mul(am, bm, k);
  const BigInt c = mul(ctx.n_prime, low_bits(d, k), k);
  const BigInt f = mul(low_bits(c, k), ctx.modulus, k);
  BigInt g = (f + d) >> k;
  if (g >= ctx.modulus) g -= ctx.modulus;
  return g;
}

BigInt to_mont(const BigInt& a, const MontgomeryContext& ctx, const Multiplier& mul) {
  return mont_mul(a, ctx.r2_mod, ctx, mul);
}

BigInt from_mont(const BigInt& am, const MontgomeryContext& ctx, const Multiplier& mul) {
  return mont_mul(am, 1, ctx, mul);
}

BigInt mont_exp(const BigInt& base_m, const BigInt& exponent, const MontgomeryContext& ctx,
                const Multiplier& mul) {
  if (exponent < 0) throw RangeError("mont_exp: negative exponent");
  BigInt result = ctx.r_mod;
  BigInt power = base_m;
  const std::size_t bits = bit_length(exponent);
  for (std::size_t i = 0; i < bits; ++i) {
    BigInt squared = mont_mul(power, power, ctx, mul);     // M0
    BigInt product = mont_mul(result, power, ctx, mul);    // M1
    if (bit_test(exponent, static_cast<unsigned>(i))) result = std::move(product);
    power = std::move(squared);
  }
  return result;
}

BigInt mod_exp_const_time(const BigInt& base, const BigInt& exponent, const MontgomeryContext& ctx,
                          const Multiplier& mul) {
  if (base < 0 || base >= ctx.modulus) throw RangeError("mod_exp_const_time: base must be below M");
  return from_mont(mont_exp(to_mont(base, ctx, mul), exponent, ctx, mul), ctx, mul);
}

BigInt mod_inverse(const BigInt& e, const BigInt& m) {
  if (m <= 1) throw ArgumentError("mod_inverse: modulus must exceed 1");
  BigInt old_r = e % m, r = m;
  if (old_r < 0) old_r += m;
  BigInt old_s = 1, s = 0;
  while (r != 0) {
    const BigInt q = old_r / r;
    BigInt next_r = old_r - q * r;
    BigInt next_s = old_s - q * s;
    old_r = std::exchange(r, std::move(next_r));
    old_s = std::exchange(s, std::move(next_s));
  }
  if (old_r != 1) throw ArgumentError("mod_inverse: value is not invertible");
  old_s %= m;
  if (old_s < 0) old_s += m;
  return old_s;
}

RsaKeySet RsaKeySet::from_parts(const BigInt& p, const BigInt& q, const BigInt& e_pub, const BigInt& e_prv) {
  RsaKeySet key{p, q, p * q, (p - 1) * (q - 1), e_pub, e_prv};
  return key;
}

RsaKeySet RsaKeySet::load(const std::filesystem::path& path) {
  const auto v = read_hex_lines(path);
  if (v.size() != 4) throw ParseError(path.string() + ": key file needs p, q, e_pub, e_prv");
  return from_parts(v[0], v[1], v[2], v[3]);
}

std::string describe(KeyCondition c) {
  switch (c) {
    case KeyCondition::PrimeP: return "p is prime";
    case KeyCondition::PrimeQ: return "q is prime";
    case KeyCondition::DistinctPrimes: return "p != q";
    case KeyCondition::PrivateRange: return "1 < e_prv < phi";
    case KeyCondition::Coprime: return "gcd(e_prv, phi) = 1";
    case KeyCondition::PublicRange: return "1 < e_pub < e_prv";
    case KeyCondition::Inverse: return "e_pub * e_prv = 1 mod phi";
  }
  return "?";
}

KeyVerdict keygen_check(const BigInt& p, const BigInt& q, const BigInt& e_pub, const BigInt& e_prv) {
  std::mt19937_64 rng(0x5eed);
  auto fail = [](KeyCondition c) { return KeyVerdict{c}; };
  if (p < 2 || !boost::multiprecision::miller_rabin_test(p, 32, rng)) return fail(KeyCondition::PrimeP);
  if (q < 2 || !boost::multiprecision::miller_rabin_test(q, 32, rng)) return fail(KeyCondition::PrimeQ);
  if (p == q) return fail(KeyCondition::DistinctPrimes);
  const BigInt phi = (p - 1) * (q - 1);
  if (!(e_prv > 1 && e_prv < phi)) return fail(KeyCondition::PrivateRange);
  if (gcd(e_prv, phi) != 1) return fail(KeyCondition::Coprime);
  if (!(e_pub > 1 && e_pub < e_prv)) return fail(KeyCondition::PublicRange);
  if ((e_pub * e_prv) % phi != 1) return fail(KeyCondition::Inverse);
  return {};
}

BigInt rsa_encrypt(const BigInt& message, const RsaKeySet& key, const Multiplier& mul) {
  return mod_exp_const_time(message, key.e_pub, mont_setup(key.modulus), mul);
}

BigInt rsa_decrypt(const BigInt& cipher, const RsaKeySet& key, const Multiplier& mul) {
  return mod_exp_const_time(cipher, key.e_prv, mont_setup(key.modulus), mul);
}

void PipelineTrace::write_csv(std::ostream& out) const {
  out << "kernel,task,phase,iteration,m,s,start,end\n";
  for (const auto& e : events)
    out << e.kernel << ',' << e.task << ',' << e.phase << ',' << e.iteration << ',' << e.m << ',' << e.s << ','
        << e.start * slot_cycles << ',' << e.end * slot_cycles << '\n';
}

namespace {

struct StepLabel {
  const char* phase;
  std::size_t iteration;
  int m;
  int s;
};

StepLabel label_step(std::size_t step, std::size_t exponent_bits) {
  const std::size_t product = step / 3;
  const int s = static_cast<int>(step % 3);
  if (product == 0) return {"entry", 0, 0, s};
  if (product == montmul_count(exponent_bits) - 1) return {"exit", 0, 0, s};
  return {"loop", (product - 1) / 2, static_cast<int>((product - 1) % 2), s};
}

struct TaskState {
  std::size_t next_step = 0;
  std::uint64_t ready_at = 0;
  bool in_flight = false;
  bool done = false;
};

struct Prepared {
  std::size_t task;
  std::size_t step;
  std::uint64_t available_at;
};

PipelineTrace schedule(std::size_t tasks, std::size_t exponent_bits) {
  PipelineTrace trace;
  const std::size_t steps = 3 * montmul_count(exponent_bits);
  std::vector<TaskState> state(tasks);
  std::deque<Prepared> fifo;
  std::optional<Prepared> computing;
  std::size_t finished = 0;
  std::uint64_t computes = 0;

  auto emit = [&](int kernel, std::size_t task, std::size_t step, std::uint64_t t) {
    const auto l = label_step(step, exponent_bits);
    trace.events.push_back({kernel, task, l.phase, l.iteration, l.m, l.s, t, t + 1});
  };

  std::uint64_t t = 0;
  for (; finished < tasks; ++t) {
    if (computing) {
      const auto [task, step, avail] = *computing;
      (void)avail;
      emit(4, task, step, t);
      auto& st = state[task];
      st.in_flight = false;
      st.next_step = step + 1;
      st.ready_at = t;
      if (st.next_step == steps) {
        emit(5, task, step, t);
        st.done = true;
        ++finished;
      }
      computing.reset();
    }

    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < tasks; ++i) {
      const auto& st = state[i];
      if (st.done || st.in_flight || st.ready_at > t) continue;
      if (!pick || st.ready_at < state[*pick].ready_at) pick = i;
    }
    if (pick) {
      auto& st = state[*pick];
      if (st.next_step == 0) emit(1, *pick, 0, t);
      emit(2, *pick, st.next_step, t);
      st.in_flight = true;
      fifo.push_back({*pick, st.next_step, t + 1});
    }

    if (!fifo.empty() && fifo.front().available_at <= t) {
      computing = fifo.front();
      fifo.pop_front();
      emit(3, computing->task, computing->step, t);
      ++computes;
    }
  }
  trace.span = t;
  trace.multiplier_busy = t == 0 ? 0.0 : static_cast<double>(computes) / static_cast<double>(t);
  std::stable_sort(trace.events.begin(), trace.events.end(), [](const PipelineEvent& a, const PipelineEvent& b) {
    return std::tie(a.start, a.kernel, a.task) < std::tie(b.start, b.kernel, b.task);
  });
  return trace;
}

}  // namespace

PipelineResult rsa_pipeline_sim(const TaskBatch& batch, const ArrayConfig& cfg, const ProfileData& prof,
                                const Multiplier& mul, unsigned threads) {
  if (batch.messages.empty()) throw ArgumentError("rsa_pipeline_sim: batch must hold at least one task");
  const auto ctx = mont_setup(batch.modulus);

  PipelineResult result;
  result.outputs.resize(batch.messages.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < batch.messages.size();)
      result.outputs[i] = mod_exp_const_time(batch.messages[i], batch.exponent, ctx, mul);
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < std::max(1u, threads); ++i) pool.emplace_back(worker);
    worker();
  }

  result.trace = schedule(batch.messages.size(), bit_length(batch.exponent));
  if (auto est = estimate_throughput(ctx.k, cfg, prof)) {
    const double per_task = std::max({est->sender_seconds, est->carry_seconds, est->aie_seconds});
    result.trace.slot_cycles = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(per_task * prof.aie_freq_hz)));
  }
  return result;
}

}  // namespace tilemul
