#pragma once

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sos_sparse/error.hpp"
#include "sos_sparse/sos/sdp_problem.hpp"

namespace sos_sparse {

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Sparse SDPA text: constraint count, block count, block sizes, right-hand
// sides, then "matno block i j value" lines with one-based indices, i <= j,
// and matno 0 for the objective.
inline std::string export_sdpa(const SdpProblem& p, const std::string& comment = {}) {
  p.validate();
  std::ostringstream os;
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) os << '"' << line << '\n';
  }
  os << p.constraints.size() << '\n' << p.block_sizes.size() << '\n';
  for (std::size_t b = 0; b < p.block_sizes.size(); ++b) {
    os << (b ? " " : "") << p.block_sizes[b];
  }
  os << '\n';
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    os << (r ? " " : "") << format_double(p.constraints[r].rhs);
  }
  os << '\n';
  auto write = [&](std::size_t matno, const SdpEntry& e) {
    os << matno << ' ' << e.block + 1 << ' ' << e.i + 1 << ' ' << e.j + 1 << ' '
       << format_double(e.value) << '\n';
  };
  for (const auto& e : p.objective) write(0, e);
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    for (const auto& e : p.constraints[r].entries) write(r + 1, e);
  }
  return os.str();
}

namespace detail {

inline std::vector<std::string> sdpa_tokens(const std::string& line) {
  std::string cleaned = line;
  for (char& c : cleaned) {
    if (c == '{' || c == '}' || c == ',' || c == '(' || c == ')') c = ' ';
  }
  std::istringstream is(cleaned);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline long parse_int(const std::string& tok, std::size_t line) {
  long v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError(line, "expected an integer, got '" + tok + "'");
  }
  return v;
}

}  // namespace detail

inline SdpProblem parse_sdpa(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  SdpProblem p;
  long m = -1;
  long nblocks = -1;
  std::size_t rhs_read = 0;
  enum class Stage { Count, Blocks, Sizes, Rhs, Entries } stage = Stage::Count;

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '"' || line[first] == '*') continue;
    auto toks = detail::sdpa_tokens(line);
    if (toks.empty()) continue;
    switch (stage) {
      case Stage::Count:
        m = detail::parse_int(toks[0], lineno);
        if (m < 0) throw ParseError(lineno, "negative constraint count");
        p.constraints.resize(static_cast<std::size_t>(m));
        stage = Stage::Blocks;
        break;
      case Stage::Blocks:
        nblocks = detail::parse_int(toks[0], lineno);
        if (nblocks <= 0) throw ParseError(lineno, "block count must be positive");
        stage = Stage::Sizes;
        break;
      case Stage::Sizes:
        for (const auto& t : toks) {
          if (static_cast<long>(p.block_sizes.size()) == nblocks) break;
          long s = detail::parse_int(t, lineno);
          if (s == 0) throw ParseError(lineno, "zero block size");
          p.block_sizes.push_back(static_cast<int>(s));
        }
        if (static_cast<long>(p.block_sizes.size()) == nblocks) {
          stage = m == 0 ? Stage::Entries : Stage::Rhs;
        }
        break;
      case Stage::Rhs:
        for (const auto& t : toks) {
          if (rhs_read == static_cast<std::size_t>(m)) break;
          double v = 0.0;
          if (!parse_double(t, v)) throw ParseError(lineno, "malformed right-hand side '" + t + "'");
          p.constraints[rhs_read++].rhs = v;
        }
        if (rhs_read == static_cast<std::size_t>(m)) stage = Stage::Entries;
        break;
      case Stage::Entries: {
        if (toks.size() != 5) throw ParseError(lineno, "entry lines need 5 fields");
        long matno = detail::parse_int(toks[0], lineno);
        long blk = detail::parse_int(toks[1], lineno);
        long i = detail::parse_int(toks[2], lineno);
        long j = detail::parse_int(toks[3], lineno);
        double v = 0.0;
        if (!parse_double(toks[4], v)) throw ParseError(lineno, "malformed value '" + toks[4] + "'");
        if (matno < 0 || matno > m) throw ParseError(lineno, "matrix number out of range");
        if (blk < 1 || blk > nblocks) throw ParseError(lineno, "block number out of range");
        long dim = std::abs(p.block_sizes[blk - 1]);
        if (i < 1 || j < 1 || i > dim || j > dim) throw ParseError(lineno, "index out of range");
        if (p.block_sizes[blk - 1] < 0 && i != j) {
          throw ParseError(lineno, "off-diagonal entry in a diagonal block");
        }
        if (i > j) std::swap(i, j);
        SdpEntry e{static_cast<std::uint32_t>(blk - 1), static_cast<std::uint32_t>(i - 1),
                   static_cast<std::uint32_t>(j - 1), v};
        if (matno == 0) {
          p.objective.push_back(e);
        } else {
          p.constraints[matno - 1].entries.push_back(e);
        }
        break;
      }
    }
  }
  if (stage != Stage::Entries) throw ParseError(lineno, "unexpected end of input in header");
  return p;
}

}  // namespace sos_sparse
