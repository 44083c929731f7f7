#pragma once

// Loss generators and instance files.
//
// The centerpiece is a dyadic random-walk instance: a Gaussian process G
// indexed by rounds, where G(t) extends the value at t's dyadic parent
// rho(t) = t - 2^delta(t) by one step. One arm is planted eps below the
// rest, per-arm Gaussian noise is added, and everything is clipped to
// [0, 1]. The pre-clip values are kept so tests can reach the unclipped
// structure.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swob/core.hpp"
#include "swob/csv.hpp"
#include "swob/error.hpp"
#include "swob/rng.hpp"

namespace swob {

// Stream ids for counter-based draws, one per random object.
inline constexpr std::uint64_t kStreamWalk = 1;   // walk increments xi(t)
inline constexpr std::uint64_t kStreamArm = 2;    // per-arm noise gamma_k(t)
inline constexpr std::uint64_t kStreamBest = 3;   // planted arm draw
inline constexpr std::uint64_t kStreamBern = 4;   // Bernoulli losses

// delta(t): exponent of the largest power of two dividing t. t >= 1.
inline std::size_t delta_exponent(std::size_t t) {
  if (t == 0) throw DomainError("delta_exponent: t must be >= 1");
  return static_cast<std::size_t>(std::countr_zero(t));
}

// rho(t) = t - 2^delta(t), the dyadic parent of t. Strictly less than t.
inline std::size_t dyadic_parent(std::size_t t) {
  return t - (std::size_t{1} << delta_exponent(t));
}

// Number of parent steps from t down to 0. Each step clears the lowest set
// bit, so the depth is simply the popcount; kept as the documented identity.
inline std::size_t dyadic_depth(std::size_t t) {
  return static_cast<std::size_t>(std::popcount(t));
}

struct HardInstanceParams {
  std::size_t T = 0;
  std::size_t K = 0;
  double epsilon = 0.0;  // planted gap on the best arm, pre-clip
  double sigma = 0.0;    // scale of both walk increments and per-arm noise
  std::optional<std::size_t> optimal_action;  // fixed arm; sampled if absent
  std::uint64_t seed = 0;
};

inline void validate(const HardInstanceParams& p) {
  if (p.K < 2) throw DomainError("hard instance: need K >= 2");
  if (p.T < p.K) throw DomainError("hard instance: need T >= K");
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) {
    throw DomainError("hard instance: epsilon must be positive and finite");
  }
  if (p.sigma < 0.0 || !std::isfinite(p.sigma)) {
    throw DomainError("hard instance: sigma must be nonnegative and finite");
  }
  if (p.optimal_action && *p.optimal_action >= p.K) {
    throw DomainError("hard instance: optimal_action out of range");
  }
}

// Builds the dyadic-walk instance. Deterministic in (params, seed): every
// random quantity is a pure function of the seed and its coordinate.
inline LossMatrix generate_hard_instance(const HardInstanceParams& p) {
  validate(p);

  std::size_t best;
  if (p.optimal_action) {
    best = *p.optimal_action;
  } else {
    const unsigned __int128 wide =
        static_cast<unsigned __int128>(stream_u64(p.seed, kStreamBest, 0)) *
        p.K;
    best = static_cast<std::size_t>(wide >> 64);
  }

  // Walk over rounds 1..T; G[0] = 0 and rho(t) < t allows a single pass.
  std::vector<double> walk(p.T + 1, 0.0);
  for (std::size_t t = 1; t <= p.T; ++t) {
    walk[t] = walk[dyadic_parent(t)] +
              p.sigma * stream_gauss(p.seed, kStreamWalk, t);
  }

  std::vector<double> raw(p.T * p.K);
  std::vector<double> values(p.T * p.K);
  for (std::size_t t = 1; t <= p.T; ++t) {
    const std::size_t row = (t - 1) * p.K;
    for (std::size_t k = 0; k < p.K; ++k) {
      double v = walk[t] + p.sigma * stream_gauss(p.seed, kStreamArm, row + k);
      if (k == best) v -= p.epsilon;
      raw[row + k] = v;
      values[row + k] = clip_unit(v);
    }
  }

  return make_loss_matrix(p.T, p.K, std::move(values), std::move(raw), best);
}

// Noise scale that keeps the clipped instance faithful to the unclipped
// one at horizon T.
inline double default_noise_sigma(std::size_t T) {
  if (T < 2) throw DomainError("default_noise_sigma: need T >= 2");
  return 1.0 / (9.0 * std::log2(static_cast<double>(T)));
}

// Planted-gap size for the extra-budget lower-bound construction. Two
// regimes split on sqrt(B_ex) vs c1 * K^{1/6} * T^{1/3}; with c2 = c3 and
// c1 = 1 the formulas agree at the boundary.
inline double regime_epsilon(std::size_t T, std::size_t K, std::size_t B_ex,
                             double c1 = 0.1, double c2 = 0.1,
                             double c3 = 0.1) {
  if (T < 2) throw DomainError("regime_epsilon: need T >= 2");
  if (K < 2) throw DomainError("regime_epsilon: need K >= 2");
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0)) {
    throw DomainError("regime_epsilon: constants must be positive");
  }
  const double dT = static_cast<double>(T);
  const double dK = static_cast<double>(K);
  const double log_factor = std::pow(std::log2(dT), 1.5);
  const double boundary = c1 * std::pow(dK, 1.0 / 6.0) * std::cbrt(dT);
  double eps;
  if (std::sqrt(static_cast<double>(B_ex)) <= boundary) {
    eps = c2 * std::cbrt(dK) / (std::cbrt(dT) * log_factor);
  } else {
    eps = c3 * std::sqrt(dK) /
          (log_factor * std::sqrt(static_cast<double>(B_ex)));
  }
  if (eps > 1.0 / 6.0) {
    throw DomainError(
        "regime_epsilon: gap " + format_double(eps) +
        " exceeds 1/6; increase T or shrink the constants");
  }
  return eps;
}

struct StochasticGapParams {
  std::size_t T = 0;
  std::size_t K = 0;
  double gap = 0.0;   // extra mean loss on every arm except the best
  double base = 0.0;  // mean loss of the best arm
  std::size_t optimal_action = 0;
  std::uint64_t seed = 0;
};

inline void validate(const StochasticGapParams& p) {
  if (p.K < 2) throw DomainError("gap instance: need K >= 2");
  if (p.T < p.K) throw DomainError("gap instance: need T >= K");
  if (!(p.gap > 0.0) || !std::isfinite(p.gap)) {
    throw DomainError("gap instance: gap must be positive");
  }
  if (p.base < 0.0 || p.base + p.gap > 1.0) {
    throw DomainError("gap instance: need 0 <= base and base + gap <= 1");
  }
  if (p.optimal_action >= p.K) {
    throw DomainError("gap instance: optimal_action out of range");
  }
}

// Bernoulli losses: the planted arm has mean `base`, all others
// `base + gap`. Independent across rounds and arms.
inline LossMatrix generate_stochastic_gap(const StochasticGapParams& p) {
  validate(p);
  std::vector<double> values(p.T * p.K);
  for (std::size_t t = 0; t < p.T; ++t) {
    for (std::size_t k = 0; k < p.K; ++k) {
      const std::size_t i = t * p.K + k;
      const double mean = (k == p.optimal_action) ? p.base : p.base + p.gap;
      values[i] = (u64_to_unit(stream_u64(p.seed, kStreamBern, i)) < mean)
                      ? 1.0
                      : 0.0;
    }
  }
  return make_loss_matrix(p.T, p.K, std::move(values), {}, p.optimal_action);
}

// ---- instance files ---------------------------------------------------
//
// Data file: header `t,k,loss` (plus `raw_loss` when pre-clip values are
// kept), rows ordered by round then arm, rounds numbered 1..T, arms 0..K-1.
// Sidecar `<path>.meta`: `key = value` lines carrying T, K, the planted
// arm, and whatever generator parameters the caller passes, enough to
// regenerate the instance bit for bit.

inline std::string meta_path_for(const std::string& csv_path) {
  return csv_path + ".meta";
}

inline void save_instance(
    const LossMatrix& m, const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& meta = {}) {
  validate(m);
  std::vector<std::string> header{"t", "k", "loss"};
  if (m.has_raw()) header.push_back("raw_loss");
  CsvWriter writer(path, header);
  for (std::size_t t = 0; t < m.T; ++t) {
    for (std::size_t k = 0; k < m.K; ++k) {
      std::vector<std::string> row{std::to_string(t + 1), std::to_string(k),
                                   format_double(m.at(t, k))};
      if (m.has_raw()) row.push_back(format_double(m.raw_at(t, k)));
      writer.write_row(row);
    }
  }

  std::ofstream side(meta_path_for(path));
  if (!side) throw Error("cannot write " + meta_path_for(path));
  side << "T = " << m.T << "\n";
  side << "K = " << m.K << "\n";
  if (m.optimal_action) side << "optimal_action = " << *m.optimal_action << "\n";
  for (const auto& [key, value] : meta) side << key << " = " << value << "\n";
}

struct LoadedInstance {
  LossMatrix matrix;
  std::vector<std::pair<std::string, std::string>> meta;
};

inline LoadedInstance load_instance(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.rows.empty()) {
    throw ParseError(path + ": no rounds");
  }
  const bool has_raw = table.header.size() == 4 && table.header[3] == "raw_loss";
  const bool header_ok =
      table.header.size() >= 3 && table.header[0] == "t" &&
      table.header[1] == "k" && table.header[2] == "loss" &&
      (table.header.size() == 3 || has_raw);
  if (!header_ok) throw ParseError(path + ": expected header t,k,loss[,raw_loss]");

  // Infer K from the first round's run of rows, then demand a full,
  // ordered T x K table.
  std::size_t K = 0;
  while (K < table.rows.size() &&
         parse_u64(table.rows[K][0], K + 2) == 1) {
    ++K;
  }
  if (K == 0) throw ParseError(path + ": first data row must have t=1");
  if (table.rows.size() % K != 0) {
    throw ParseError(path + ": row count is not a multiple of K=" +
                     std::to_string(K));
  }
  const std::size_t T = table.rows.size() / K;

  std::vector<double> values(T * K);
  std::vector<double> raw;
  if (has_raw) raw.resize(T * K);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::size_t file_row = i + 2;  // 1-based, after the header
    const auto& cells = table.rows[i];
    if (cells.size() != table.header.size()) {
      throw ParseError(path + ": row " + std::to_string(file_row) +
                       ": expected " + std::to_string(table.header.size()) +
                       " cells");
    }
    const std::uint64_t t = parse_u64(cells[0], file_row);
    const std::uint64_t k = parse_u64(cells[1], file_row);
    if (t != i / K + 1 || k != i % K) {
      throw ParseError(path + ": row " + std::to_string(file_row) +
                       ": expected t=" + std::to_string(i / K + 1) +
                       ", k=" + std::to_string(i % K));
    }
    const double loss = parse_double(cells[2], file_row);
    if (!(loss >= 0.0 && loss <= 1.0)) {
      throw ParseError(path + ": row " + std::to_string(file_row) +
                       ": loss " + cells[2] + " outside [0,1]");
    }
    values[i] = loss;
    if (has_raw) raw[i] = parse_double(cells[3], file_row);
  }

  LoadedInstance out;
  out.matrix.T = T;
  out.matrix.K = K;
  out.matrix.values = std::move(values);
  out.matrix.raw = std::move(raw);

  const std::string side = meta_path_for(path);
  if (std::filesystem::exists(side)) {
    std::ifstream in(side);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) continue;
      out.meta.emplace_back(key, value);
      if (key == "optimal_action") {
        out.matrix.optimal_action = parse_u64(value, 0);
      }
    }
  }

  try {
    validate(out.matrix);
  } catch (const DomainError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return out;
}

}  // namespace swob
