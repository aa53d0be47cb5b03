#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "blade/rng.hpp"
#include "blade/types.hpp"

namespace blade {

// TCP flag bitmask bits used by the generator.
namespace tcpflag {
inline constexpr int kFin = 0x01, kSyn = 0x02, kPsh = 0x08, kAck = 0x10;
}

// One web operation's traffic profile. Packet counts are uniform on
// [count_lo, count_hi], sizes are log-normal clamped to [40, 1514] bytes,
// inter-arrivals are exponential, and flags follow a handshake/teardown
// template with a per-operation PSH probability.
struct OperationProfile {
  int op_id = 0;
  int count_lo = 4, count_hi = 8;
  double size_log_mean = 300.0;  // median of the log-normal, bytes
  double size_sigma = 0.2;
  double iat_mean = 0.05;  // seconds
  double psh_prob = 0.4;

  static constexpr double kMinSize = 40.0, kMaxSize = 1514.0;
};

struct ScenarioConfig {
  int num_operations = 6;
  int users = 10;
  int flows_per_user = 400;
  // Fraction of total attack flows per vector; total attack flow count is
  // round(attack_flow_ratio * benign flow count).
  std::map<std::string, double> attack_mix = {
      {"dos", 1.0 / 7}, {"scan", 1.0 / 7},        {"injection", 1.0 / 7},      {"brute_force", 1.0 / 7},
      {"harvesting", 1.0 / 7}, {"active_session", 1.0 / 7}, {"bulk_bot", 1.0 / 7}};
  double attack_flow_ratio = 0.2;  // ~5:1 benign:malicious
  int flows_per_attacker = 200;
  std::uint64_t seed = 1;
  // Row-stochastic transition matrix over operations; empty -> default ring
  // structure (i -> i+1 w.p. 0.5, i -> i+2 w.p. 0.3, i -> i w.p. 0.2).
  std::vector<std::vector<double>> session_transition;

  void validate() const {
    if (num_operations < 1) throw DataError("num_operations must be >= 1");
    if (users < 1 || flows_per_user < 1) throw DataError("users and flows_per_user must be >= 1");
    for (const auto& [name, frac] : attack_mix)
      if (frac < 0.0 || frac > 1.0) throw DataError("attack fraction out of [0,1] for '" + name + "'");
    if (!session_transition.empty()) {
      if (static_cast<int>(session_transition.size()) != num_operations)
        throw DataError("transition matrix must have num_operations rows");
      for (const auto& row : session_transition) {
        if (static_cast<int>(row.size()) != num_operations)
          throw DataError("transition matrix must be square");
        double sum = 0.0;
        for (double p : row) {
          if (p < 0.0) throw DataError("transition probabilities must be >= 0");
          sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw DataError("transition rows must sum to 1");
      }
    }
  }
};

namespace detail {

// Deterministic profile table; operation separation comes from size scale,
// packet count, inter-arrival scale and flag mix. The next-to-last operation
// is deliberately bursty (wide count range, heavy size spread) and the last
// one regularly exceeds L=50 packets so truncation occurs in benign data.
inline std::vector<OperationProfile> make_profiles(int num_operations) {
  std::vector<OperationProfile> profiles(num_operations);
  for (int i = 0; i < num_operations; ++i) {
    OperationProfile& p = profiles[i];
    p.op_id = i;
    double t = num_operations > 1 ? static_cast<double>(i) / (num_operations - 1) : 0.0;
    p.size_log_mean = 120.0 * std::pow(1400.0 / 120.0, t);
    p.size_sigma = 0.14 + 0.05 * (i % 3);
    p.count_lo = 4 + 3 * i;
    p.count_hi = 8 + 5 * i;
    p.iat_mean = 0.01 * std::pow(3.0, i % 4);
    p.psh_prob = 0.15 + 0.7 * std::fmod(0.618033988749895 * (i + 1), 1.0);
  }
  if (num_operations >= 2) {
    OperationProfile& bursty = profiles[num_operations - 2];
    bursty.size_sigma = 0.5;
    bursty.count_lo = 8;
    bursty.count_hi = 40;
    OperationProfile& longest = profiles[num_operations - 1];
    longest.count_lo = 30;
    longest.count_hi = 70;
  }
  return profiles;
}

inline std::vector<std::vector<double>> default_transition(int k) {
  std::vector<std::vector<double>> m(k, std::vector<double>(k, 0.0));
  for (int i = 0; i < k; ++i) {
    if (k == 1) {
      m[i][0] = 1.0;
    } else if (k == 2) {
      m[i][(i + 1) % k] = 0.8;
      m[i][i] = 0.2;
    } else {
      m[i][(i + 1) % k] = 0.5;
      m[i][(i + 2) % k] = 0.3;
      m[i][i] = 0.2;
    }
  }
  return m;
}

inline int sample_categorical(const std::vector<double>& probs, Rng& rng) {
  double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

inline double clamp_size(double s) {
  return std::min(OperationProfile::kMaxSize, std::max(OperationProfile::kMinSize, s));
}

inline FlowRecord draw_flow(const OperationProfile& p, const std::string& user, double t, Rng& rng) {
  FlowRecord f;
  f.user_key = user;
  f.first_seen = t;
  int count = static_cast<int>(rng.uniform_int(p.count_lo, p.count_hi));
  f.packet_sizes.reserve(count);
  f.inter_arrival.reserve(count);
  f.tcp_flags.reserve(count);
  for (int j = 0; j < count; ++j) {
    f.packet_sizes.push_back(clamp_size(rng.lognormal(p.size_log_mean, p.size_sigma)));
    f.inter_arrival.push_back(j == 0 ? 0.0 : rng.exponential(p.iat_mean));
    int flags;
    if (j == 0)
      flags = tcpflag::kSyn;
    else if (j == 1)
      flags = tcpflag::kAck;
    else if (j == count - 1)
      flags = tcpflag::kFin | tcpflag::kAck;
    else
      flags = rng.bernoulli(p.psh_prob) ? (tcpflag::kPsh | tcpflag::kAck) : tcpflag::kAck;
    f.tcp_flags.push_back(flags);
  }
  return f;
}

// Session pacing between consecutive flows of one user.
inline double benign_gap(Rng& rng) { return 0.2 + rng.exponential(2.0); }

struct OpTrace {
  std::vector<FlowRecord> flows;
  std::vector<int> op_ids;  // generator ground truth, aligned with flows
};

inline void emit_markov_user(const std::string& user, double t0, int n_flows,
                             const std::vector<OperationProfile>& profiles,
                             const std::vector<std::vector<double>>& transition, Rng& rng,
                             OpTrace& out) {
  int op = 0;
  double t = t0;
  for (int i = 0; i < n_flows; ++i) {
    out.flows.push_back(draw_flow(profiles[op], user, t, rng));
    out.op_ids.push_back(op);
    t += benign_gap(rng);
    op = sample_categorical(transition[op], rng);
  }
}

}  // namespace detail

// Generator output plus the latent ground truth (per-flow operation ids for
// benign flows) used by clustering-recovery tests.
struct SynthResult {
  std::vector<FlowRecord> records;
  std::vector<int> benign_op_ids;  // aligned with the benign prefix of records
  std::size_t benign_count = 0;
};

inline SynthResult generate_benign(const ScenarioConfig& config) {
  config.validate();
  auto profiles = detail::make_profiles(config.num_operations);
  auto transition = config.session_transition.empty() ? detail::default_transition(config.num_operations)
                                                      : config.session_transition;
  SynthResult result;
  for (int u = 0; u < config.users; ++u) {
    Rng rng(derive_seed(config.seed, 0x100 + static_cast<std::uint64_t>(u)));
    detail::OpTrace trace;
    detail::emit_markov_user("10.0.0." + std::to_string(u + 1), 37.3 * u, config.flows_per_user,
                             profiles, transition, rng, trace);
    for (auto& f : trace.flows) result.records.push_back(std::move(f));
    result.benign_op_ids.insert(result.benign_op_ids.end(), trace.op_ids.begin(), trace.op_ids.end());
  }
  result.benign_count = result.records.size();
  return result;
}

namespace detail {

inline void emit_scan(const std::string& user, double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  double t = t0;
  for (int i = 0; i < n; ++i) {
    FlowRecord f;
    f.user_key = user;
    f.first_seen = t;
    f.label = Label::attack("scan");
    int count = static_cast<int>(rng.uniform_int(1, 2));
    for (int j = 0; j < count; ++j) {
      f.packet_sizes.push_back(rng.uniform(40.0, 60.0));
      f.inter_arrival.push_back(j == 0 ? 0.0 : rng.exponential(0.3));
      f.tcp_flags.push_back(tcpflag::kSyn);  // SYN-only probing
    }
    out.push_back(std::move(f));
    t += 0.01 + rng.exponential(0.05);
  }
}

inline void emit_dos(const std::string& user, double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  double t = t0;
  for (int i = 0; i < n; ++i) {
    FlowRecord f;
    f.user_key = user;
    f.first_seen = t;
    f.label = Label::attack("dos");
    int count = static_cast<int>(rng.uniform_int(40, 70));
    for (int j = 0; j < count; ++j) {
      f.packet_sizes.push_back(rng.uniform(1200.0, 1500.0));
      // flood-rate inter-arrivals, orders of magnitude under any benign IAT
      f.inter_arrival.push_back(j == 0 ? 0.0 : rng.exponential(1e-6));
      f.tcp_flags.push_back(j == 0 ? tcpflag::kSyn : (tcpflag::kPsh | tcpflag::kAck));
    }
    out.push_back(std::move(f));
    t += 0.001 + rng.exponential(0.02);
  }
}

inline void emit_injection(const std::vector<OperationProfile>& profiles, const std::string& user,
                           double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  // Carried by an otherwise ordinary mid-range operation; 1-3 oversized
  // payload packets land strictly outside the clamped benign size support.
  const OperationProfile& base = profiles[std::min<std::size_t>(1, profiles.size() - 1)];
  double t = t0;
  for (int i = 0; i < n; ++i) {
    FlowRecord f = draw_flow(base, user, t, rng);
    f.label = Label::attack("injection");
    int outliers = static_cast<int>(rng.uniform_int(1, 3));
    for (int k = 0; k < outliers; ++k) {
      auto pos = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(f.packet_sizes.size()) - 1));
      f.packet_sizes[pos] = rng.uniform(2500.0, 6500.0);
    }
    out.push_back(std::move(f));
    t += benign_gap(rng);
  }
}

inline void emit_brute_force(const std::vector<OperationProfile>& profiles, const std::string& user,
                             double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  // Rapid repeats of the login profile (op 0) with perturbed sizes: packet
  // sizes alternate around the profile median in a pattern benign flows never
  // show, and inter-arrivals are compressed.
  const OperationProfile& login = profiles[0];
  double t = t0;
  for (int i = 0; i < n; ++i) {
    FlowRecord f;
    f.user_key = user;
    f.first_seen = t;
    f.label = Label::attack("brute_force");
    int count = static_cast<int>(rng.uniform_int(login.count_lo, login.count_hi));
    for (int j = 0; j < count; ++j) {
      double scale = (j % 2 == 0) ? 0.55 : 1.75;
      f.packet_sizes.push_back(clamp_size(login.size_log_mean * scale * rng.uniform(0.92, 1.08)));
      f.inter_arrival.push_back(j == 0 ? 0.0 : rng.exponential(login.iat_mean * 0.3));
      int flags;
      if (j == 0)
        flags = tcpflag::kSyn;
      else if (j == count - 1)
        flags = tcpflag::kFin | tcpflag::kAck;
      else
        flags = rng.bernoulli(login.psh_prob) ? (tcpflag::kPsh | tcpflag::kAck) : tcpflag::kAck;
      f.tcp_flags.push_back(flags);
    }
    out.push_back(std::move(f));
    t += 0.05 + rng.exponential(1.0);
  }
}

inline void emit_harvesting(const std::vector<OperationProfile>& profiles, const std::string& user,
                            double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  // Long runs of one read-heavy operation at uniform short gaps; each flow is
  // a verbatim draw from a legitimate profile.
  int read_op = std::min<int>(3, static_cast<int>(profiles.size()) - 1);
  double t = t0;
  for (int i = 0; i < n; ++i) {
    // 4 off-pattern flows per 50, so every window keeps >= 46 read flows
    int op = (i % 12 == 7) ? (read_op + 1) % static_cast<int>(profiles.size()) : read_op;
    FlowRecord f = draw_flow(profiles[op], user, t, rng);
    f.label = Label::attack("harvesting");
    out.push_back(std::move(f));
    t += rng.uniform(0.4, 0.9);
  }
}

inline void emit_bulk_bot(const std::vector<OperationProfile>& profiles,
                          const std::vector<std::vector<double>>& transition, const std::string& user,
                          double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  // Operation sequence follows the benign chain, but gaps have near-zero
  // variance (scripted pacing).
  int op = 0;
  double t = t0;
  for (int i = 0; i < n; ++i) {
    FlowRecord f = draw_flow(profiles[op], user, t, rng);
    f.label = Label::attack("bulk_bot");
    out.push_back(std::move(f));
    t += 0.45 + rng.normal(0.0, 0.003);
    op = sample_categorical(transition[op], rng);
  }
}

inline void emit_active_session(const std::vector<OperationProfile>& profiles, const std::string& user,
                                double t0, int n, Rng& rng, std::vector<FlowRecord>& out) {
  // Alternates two operations three apart in the ring, so both directions are
  // zero-probability transitions under the benign chain; flows themselves are
  // legitimate profile draws at benign pacing.
  int k = static_cast<int>(profiles.size());
  int a = 1 % k;
  int b = (a + 3) % k;
  double t = t0;
  for (int i = 0; i < n; ++i) {
    int op = (i % 2 == 0) ? a : b;
    FlowRecord f = draw_flow(profiles[op], user, t, rng);
    f.label = Label::attack("active_session");
    out.push_back(std::move(f));
    t += benign_gap(rng);
  }
}

}  // namespace detail

inline std::vector<std::string> known_attack_names() {
  return {"dos", "scan", "injection", "brute_force", "harvesting", "active_session", "bulk_bot"};
}

inline bool is_behavior_level(const std::string& attack) {
  return attack == "harvesting" || attack == "active_session" || attack == "bulk_bot";
}

// Emits all configured attack traffic. Each attacker gets its own user key
// and emits flows_per_attacker flows (last attacker takes the remainder).
inline std::vector<FlowRecord> generate_attacks(const ScenarioConfig& config, std::size_t benign_count) {
  config.validate();
  auto profiles = detail::make_profiles(config.num_operations);
  auto transition = config.session_transition.empty() ? detail::default_transition(config.num_operations)
                                                      : config.session_transition;
  const auto known = known_attack_names();
  for (const auto& [name, frac] : config.attack_mix) {
    (void)frac;
    if (std::find(known.begin(), known.end(), name) == known.end())
      throw DataError("unknown attack name '" + name + "'");
  }

  std::vector<FlowRecord> out;
  const double total_attack = config.attack_flow_ratio * static_cast<double>(benign_count);
  int attacker_id = 0;
  std::uint64_t stream = 0x9000;
  for (const auto& name : known) {  // fixed iteration order for determinism
    auto it = config.attack_mix.find(name);
    if (it == config.attack_mix.end() || it->second <= 0.0) continue;
    int flows = static_cast<int>(std::llround(total_attack * it->second));
    while (flows > 0) {
      int batch = std::min(flows, config.flows_per_attacker);
      flows -= batch;
      std::string user = "203.0.113." + std::to_string(++attacker_id);
      double t0 = 500.0 + 53.1 * attacker_id;
      Rng rng(derive_seed(config.seed, stream++));
      if (name == "scan")
        detail::emit_scan(user, t0, batch, rng, out);
      else if (name == "dos")
        detail::emit_dos(user, t0, batch, rng, out);
      else if (name == "injection")
        detail::emit_injection(profiles, user, t0, batch, rng, out);
      else if (name == "brute_force")
        detail::emit_brute_force(profiles, user, t0, batch, rng, out);
      else if (name == "harvesting")
        detail::emit_harvesting(profiles, user, t0, batch, rng, out);
      else if (name == "bulk_bot")
        detail::emit_bulk_bot(profiles, transition, user, t0, batch, rng, out);
      else if (name == "active_session")
        detail::emit_active_session(profiles, user, t0, batch, rng, out);
    }
  }
  return out;
}

// Full scenario: benign + attacks, deterministic in config.seed.
inline SynthResult generate_scenario(const ScenarioConfig& config) {
  SynthResult result = generate_benign(config);
  auto attacks = generate_attacks(config, result.benign_count);
  for (auto& f : attacks) result.records.push_back(std::move(f));
  return result;
}

}  // namespace blade
