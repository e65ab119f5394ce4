#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "matchq/simulator.hpp"

namespace matchq {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

namespace {

std::string b_name(std::size_t m, std::size_t n, std::size_t M, std::size_t N) {
  if (M < 10 && N < 10) return "b_" + std::to_string(m + 1) + std::to_string(n + 1);
  return "b_" + std::to_string(m + 1) + "_" + std::to_string(n + 1);
}

void append_double(std::string& line, double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  line.append(buf.data(), ec == std::errc() ? ptr : buf.data());
}

}  // namespace

std::string trace_csv_header(std::size_t N, std::size_t M) {
  std::string h = "t,k";
  auto group = [&](const char* name, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) h += std::string(",") + name + "_" + std::to_string(i + 1);
  };
  group("gamma", N);
  group("R", N);
  group("h", M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) h += "," + b_name(m, n, M, N);
  group("mu", N);
  group("kappa", N);
  h += ",cost";
  group("Q", N);
  group("H", M);
  group("d", N);
  h += ",drop";
  return h;
}

void write_trace_csv(const SimTrace& tr, std::ostream& out) {
  const std::size_t N = tr.n_tasks();
  const std::size_t M = tr.m_resources();
  out << trace_csv_header(N, M) << "\r\n";
  std::string line;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    line.clear();
    line += std::to_string(tr.t(i));
    line += ',';
    line += std::to_string(tr.k(i));
    auto put = [&](std::span<const double> v) {
      for (double x : v) {
        line += ',';
        append_double(line, x);
      }
    };
    put(tr.gamma(i));
    put(tr.R(i));
    put(tr.h(i));
    put(tr.b(i));
    put(tr.mu(i));
    put(tr.kappa(i));
    line += ',';
    append_double(line, tr.cost(i));
    put(tr.Q(i));
    put(tr.H(i));
    put(tr.d(i));
    line += tr.dropped(i) ? ",1\r\n" : ",0\r\n";
    out << line;
  }
}

SimTrace read_trace_csv(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("trace: empty input");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::size_t N = 0, M = 0;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.starts_with("gamma_")) ++N;
      if (col.starts_with("h_")) ++M;
    }
  }
  if (N == 0 || M == 0 || header != trace_csv_header(N, M)) throw std::runtime_error("trace: unrecognized header");
  SimTrace tr(N, M);
  const std::size_t block = 6 * N + 2 * M + M * N + 1;
  std::vector<double> vals(block);
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto next_field = [&]() {
      const char* q = p;
      while (q < end && *q != ',') ++q;
      std::string_view f(p, static_cast<std::size_t>(q - p));
      p = q < end ? q + 1 : end;
      return f;
    };
    auto bad = [&]() { return std::runtime_error("trace: malformed row at line " + std::to_string(lineno)); };
    std::size_t t = 0, k = 0;
    auto f = next_field();
    if (std::from_chars(f.data(), f.data() + f.size(), t).ec != std::errc()) throw bad();
    f = next_field();
    if (std::from_chars(f.data(), f.data() + f.size(), k).ec != std::errc()) throw bad();
    for (double& v : vals) {
      f = next_field();
      if (std::from_chars(f.data(), f.data() + f.size(), v).ec != std::errc()) throw bad();
    }
    f = next_field();
    if (f != "0" && f != "1") throw bad();
    tr.append_raw(t, k, vals, f == "1");
  }
  return tr;
}

}  // namespace matchq
