#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blade/rng.hpp"
#include "blade/types.hpp"

namespace blade {

// Flow-record file: CSV with a fixed header
//   user_key,first_seen,packet_sizes,inter_arrival,tcp_flags,label
// List columns are semicolon-joined scalars. The parser is strict: a wrong
// header is a fatal schema error, a malformed row reports its 1-based row
// index.
struct IngestConfig {
  int feature_length = 50;  // L
  int window_size = 50;     // W
  // "ip": strip a ":port" suffix from user_key; "ip_port": use the key as-is.
  std::string grouping = "ip_port";
  double split_ratio = 0.7;
  bool split_enabled = true;
};

namespace detail {

inline double parse_real(std::string_view s, const char* what, std::size_t row) {
  double v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("row " + std::to_string(row) + ": non-numeric " + what + " '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_list(std::string_view s, const char* what, std::size_t row,
                                      bool integral, double lo, double hi) {
  std::vector<double> out;
  if (s.empty())
    throw DataError("row " + std::to_string(row) + ": empty " + what + " list");
  std::size_t start = 0;
  while (true) {
    std::size_t semi = s.find(';', start);
    std::string_view tok = s.substr(start, semi == std::string_view::npos ? semi : semi - start);
    double v = parse_real(tok, what, row);
    if (integral && v != std::floor(v))
      throw DataError("row " + std::to_string(row) + ": " + what + " must be integral");
    if (v < lo || v > hi)
      throw DataError("row " + std::to_string(row) + ": " + what + " out of range");
    out.push_back(v);
    if (semi == std::string_view::npos) break;
    start = semi + 1;
  }
  return out;
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline const char* flow_file_header() {
  return "user_key,first_seen,packet_sizes,inter_arrival,tcp_flags,label";
}

inline std::vector<FlowRecord> parse_flow_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("flow file: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != flow_file_header())
    throw DataError("flow file: schema error, expected header '" + std::string(flow_file_header()) + "'");

  std::vector<FlowRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (fields.size() != 6)
      throw DataError("row " + std::to_string(row) + ": expected 6 columns, got " + std::to_string(fields.size()));
    FlowRecord rec;
    rec.user_key = fields[0];
    if (rec.user_key.empty()) throw DataError("row " + std::to_string(row) + ": empty user_key");
    rec.first_seen = detail::parse_real(fields[1], "first_seen", row);
    rec.packet_sizes = detail::parse_list(fields[2], "packet_sizes", row, true, 0, 1e9);
    rec.inter_arrival = detail::parse_list(fields[3], "inter_arrival", row, false, 0, 1e12);
    rec.tcp_flags = detail::parse_list(fields[4], "tcp_flags", row, true, 0, 255);
    rec.label = Label::parse(fields[5]);
    try {
      rec.validate();
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<FlowRecord> parse_flow_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open flow file '" + path + "'");
  return parse_flow_records(in);
}

inline void write_flow_records(std::ostream& out, const std::vector<FlowRecord>& records) {
  out << flow_file_header() << '\n';
  auto join = [&](const std::vector<double>& v, bool integral) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) ss << ';';
      if (integral)
        ss << static_cast<long long>(v[i]);
      else
        ss << std::setprecision(17) << v[i];
    }
    return ss.str();
  };
  for (const auto& r : records) {
    out << r.user_key << ',' << std::setprecision(17) << r.first_seen << ','
        << join(r.packet_sizes, true) << ',' << join(r.inter_arrival, false) << ','
        << join(r.tcp_flags, true) << ',' << r.label.text << '\n';
  }
}

inline void write_flow_records(const std::string& path, const std::vector<FlowRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write flow file '" + path + "'");
  write_flow_records(out, records);
}

// Eq. 1: channel order is fixed as (sizes, inter-arrival, flags); the first L
// packets are kept, shorter flows are zero-padded.
inline FeatureSequence build_feature_sequence(const FlowRecord& flow, int L, int N = 3) {
  if (L < 1) throw DataError("feature length L must be >= 1");
  if (N != 3) throw DataError("unsupported channel count " + std::to_string(N) + " (channels are sizes, inter_arrival, flags)");
  flow.validate();
  FeatureSequence fs;
  fs.matrix = Matrix::Zero(N, L);
  fs.timestamp = flow.first_seen;
  fs.user_key = flow.user_key;
  fs.label = flow.label;
  const std::size_t n = std::min<std::size_t>(flow.packet_count(), static_cast<std::size_t>(L));
  for (std::size_t j = 0; j < n; ++j) {
    fs.matrix(0, j) = flow.packet_sizes[j];
    fs.matrix(1, j) = flow.inter_arrival[j];
    fs.matrix(2, j) = flow.tcp_flags[j];
  }
  return fs;
}

inline std::string grouping_key(const std::string& user_key, const std::string& mode) {
  if (mode == "ip_port") return user_key;
  if (mode == "ip") {
    auto pos = user_key.rfind(':');
    return pos == std::string::npos ? user_key : user_key.substr(0, pos);
  }
  throw DataError("unknown grouping mode '" + mode + "'");
}

// Eq. 2: per user, flows are sorted by timestamp and chopped into
// non-overlapping windows of W; the trailing remainder is dropped. Windows
// may span arbitrary idle gaps (count-based windowing only).
inline std::vector<MultiFlowSample> extract_multiflow_samples(std::vector<FeatureSequence> flows,
                                                              int W,
                                                              const std::string& grouping = "ip_port") {
  if (W < 1) throw DataError("window size W must be >= 1");
  std::map<std::string, std::vector<FeatureSequence>> by_user;
  for (auto& f : flows) by_user[grouping_key(f.user_key, grouping)].push_back(std::move(f));

  std::vector<MultiFlowSample> samples;
  for (auto& [user, fl] : by_user) {
    std::stable_sort(fl.begin(), fl.end(),
                     [](const FeatureSequence& a, const FeatureSequence& b) { return a.timestamp < b.timestamp; });
    const std::size_t count = fl.size() / static_cast<std::size_t>(W);
    for (std::size_t w = 0; w < count; ++w) {
      MultiFlowSample s;
      s.user_key = user;
      s.flows.assign(fl.begin() + w * W, fl.begin() + (w + 1) * W);
      s.timestamps.reserve(W);
      for (const auto& f : s.flows) s.timestamps.push_back(f.timestamp);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

struct SplitResult {
  TrainingDataset train;
  std::vector<MultiFlowSample> test;
};

// 7:3 protocol (ratio configurable): benign samples are split with a seeded
// shuffle, floor(ratio * n_benign) to train; every malicious sample goes to
// the test set.
inline SplitResult split_train_test(std::vector<MultiFlowSample> samples, double ratio,
                                    std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("split ratio must be in (0, 1)");
  std::vector<MultiFlowSample> benign, test;
  for (auto& s : samples) {
    if (s.is_benign())
      benign.push_back(std::move(s));
    else
      test.push_back(std::move(s));
  }
  if (benign.empty()) throw DataError("no benign samples to train on");
  std::vector<std::size_t> order(benign.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, /*stream=*/0xb1adeu));
  rng.shuffle(order);
  const std::size_t n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(benign.size())));
  std::vector<MultiFlowSample> train;
  train.reserve(n_train);
  for (std::size_t i = 0; i < benign.size(); ++i) {
    if (i < n_train)
      train.push_back(std::move(benign[order[i]]));
    else
      test.push_back(std::move(benign[order[i]]));
  }
  if (train.empty()) throw DataError("split produced an empty training set; not enough benign samples");
  return SplitResult{TrainingDataset::from(std::move(train)), std::move(test)};
}

}  // namespace blade
