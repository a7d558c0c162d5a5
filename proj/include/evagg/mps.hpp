#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evagg/milp.hpp"

namespace evagg {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline bool valid_mps_name(const std::string& s) {
  if (s.empty() || s.size() > 8) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  return true;
}

// Keeps user names when they are short, unique and MPS-safe; otherwise
// substitutes a generated one.
inline std::vector<std::string> mps_names(const std::vector<std::string>& user,
                                          char prefix) {
  std::vector<std::string> out(user.size());
  std::set<std::string> used;
  used.insert("COST");
  used.insert("RHS");
  used.insert("BND");
  for (size_t i = 0; i < user.size(); ++i) {
    std::string candidate = user[i];
    if (!valid_mps_name(candidate) || used.count(candidate)) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%c%07zu", prefix, i + 1);
      candidate = buf;
    }
    used.insert(candidate);
    out[i] = candidate;
  }
  return out;
}

inline void put_field(std::string& line, size_t col, const std::string& text) {
  if (line.size() + 1 < col) line.resize(col - 1, ' ');
  if (!line.empty() && line.back() != ' ') line += ' ';
  line += text;
}

}  // namespace detail

/// Writes the instance in (fixed-layout) MPS with integrality markers for the
/// binaries. Long numerals may overflow their column; the fields stay
/// whitespace-separated, which every common reader (and read_mps) accepts.
inline void write_mps(const MilpProblem& p, std::ostream& os,
                      const std::string& name = "EVAGG") {
  const LpProblem& lp = p.lp;
  const auto col_names = detail::mps_names(lp.var_names, 'C');
  std::vector<std::string> row_user(lp.n_rows());
  for (int i = 0; i < lp.n_rows(); ++i) row_user[i] = lp.rows[i].name;
  const auto row_names = detail::mps_names(row_user, 'R');

  std::vector<char> is_binary(lp.n_vars(), 0);
  for (int j : p.binary_vars) is_binary[j] = 1;

  os << "NAME          " << name << "\n";
  os << "ROWS\n";
  os << " N  COST\n";
  for (int i = 0; i < lp.n_rows(); ++i) {
    const char rel = lp.rows[i].rel == Relation::le   ? 'L'
                     : lp.rows[i].rel == Relation::ge ? 'G'
                                                      : 'E';
    os << ' ' << rel << "  " << row_names[i] << "\n";
  }

  // Entries grouped per column.
  std::vector<std::vector<std::pair<int, double>>> by_col(lp.n_vars());
  for (int i = 0; i < lp.n_rows(); ++i)
    for (const auto& [j, a] : lp.rows[i].coeffs) by_col[j].push_back({i, a});

  os << "COLUMNS\n";
  bool in_integer = false;
  int marker_count = 0;
  for (int j = 0; j < lp.n_vars(); ++j) {
    if (is_binary[j] != in_integer) {
      std::string line;
      char mk[16];
      std::snprintf(mk, sizeof(mk), "MK%07d", ++marker_count);
      detail::put_field(line, 5, mk);
      detail::put_field(line, 15, "'MARKER'");
      detail::put_field(line, 40, is_binary[j] ? "'INTORG'" : "'INTEND'");
      os << line << "\n";
      in_integer = is_binary[j];
    }
    std::vector<std::pair<std::string, double>> entries;
    if (lp.cost[j] != 0.0 || by_col[j].empty())
      entries.push_back({"COST", lp.cost[j]});
    for (const auto& [i, a] : by_col[j]) entries.push_back({row_names[i], a});
    for (size_t q = 0; q < entries.size(); q += 2) {
      std::string line;
      detail::put_field(line, 5, col_names[j]);
      detail::put_field(line, 15, entries[q].first);
      detail::put_field(line, 25, detail::format_double(entries[q].second));
      if (q + 1 < entries.size()) {
        detail::put_field(line, 40, entries[q + 1].first);
        detail::put_field(line, 50, detail::format_double(entries[q + 1].second));
      }
      os << line << "\n";
    }
  }
  if (in_integer) {
    std::string line;
    char mk[16];
    std::snprintf(mk, sizeof(mk), "MK%07d", ++marker_count);
    detail::put_field(line, 5, mk);
    detail::put_field(line, 15, "'MARKER'");
    detail::put_field(line, 40, "'INTEND'");
    os << line << "\n";
  }

  os << "RHS\n";
  for (int i = 0; i < lp.n_rows(); ++i) {
    if (lp.rows[i].rhs == 0.0) continue;
    std::string line;
    detail::put_field(line, 5, "RHS");
    detail::put_field(line, 15, row_names[i]);
    detail::put_field(line, 25, detail::format_double(lp.rows[i].rhs));
    os << line << "\n";
  }

  os << "BOUNDS\n";
  for (int j = 0; j < lp.n_vars(); ++j) {
    const double lo = lp.lo[j], hi = lp.hi[j];
    auto bound_line = [&](const char* type, bool with_value, double v) {
      std::string line;
      detail::put_field(line, 2, type);
      detail::put_field(line, 5, "BND");
      detail::put_field(line, 15, col_names[j]);
      if (with_value) detail::put_field(line, 25, detail::format_double(v));
      os << line << "\n";
    };
    if (is_binary[j]) {
      bound_line("LO", true, lo);
      bound_line("UP", true, hi);
      continue;
    }
    if (lo == hi) {
      bound_line("FX", true, lo);
      continue;
    }
    const bool lo_finite = std::isfinite(lo), hi_finite = std::isfinite(hi);
    if (!lo_finite && !hi_finite) {
      bound_line("FR", false, 0.0);
      continue;
    }
    if (!lo_finite)
      bound_line("MI", false, 0.0);
    else if (lo != 0.0)
      bound_line("LO", true, lo);
    if (hi_finite) bound_line("UP", true, hi);
  }
  os << "ENDATA\n";
}

inline void write_mps_file(const MilpProblem& p, const std::string& path,
                           const std::string& name = "EVAGG") {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_mps(p, os, name);
  os.flush();
  if (!os) throw DataError("write failure on " + path);
}

/// Reads the subset of MPS emitted by write_mps (plus the usual BV bound).
inline MilpProblem read_mps(std::istream& is) {
  MilpProblem out;
  LpProblem& lp = out.lp;

  enum class Section { none, rows, columns, rhs, ranges, bounds, done };
  Section section = Section::none;
  std::string objective_row;
  std::map<std::string, int> row_index;
  std::map<std::string, int> col_index;
  std::set<int> integer_cols;
  bool in_integer = false;
  int line_no = 0;
  std::string raw;

  auto fail = [&](const std::string& msg) -> void {
    throw DataError("MPS line " + std::to_string(line_no) + ": " + msg);
  };
  auto parse_num = [&](const std::string& tok) -> double {
    try {
      size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) fail("bad numeral '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad numeral '" + tok + "'");
      return 0.0;
    }
  };
  auto get_col = [&](const std::string& name) -> int {
    auto it = col_index.find(name);
    if (it != col_index.end()) return it->second;
    const int j = lp.add_var(name, 0.0, kInf, 0.0);
    col_index[name] = j;
    if (in_integer) {
      integer_cols.insert(j);
      lp.lo[j] = 0.0;
      lp.hi[j] = 1.0;
    }
    return j;
  };

  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;

    std::istringstream ss(raw);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (raw[0] != ' ') {  // section header
      const std::string& kw = tok[0];
      if (kw == "NAME") section = Section::none;
      else if (kw == "ROWS") section = Section::rows;
      else if (kw == "COLUMNS") section = Section::columns;
      else if (kw == "RHS") section = Section::rhs;
      else if (kw == "RANGES") section = Section::ranges;
      else if (kw == "BOUNDS") section = Section::bounds;
      else if (kw == "ENDATA") { section = Section::done; break; }
      else fail("unknown section '" + kw + "'");
      continue;
    }

    switch (section) {
      case Section::rows: {
        if (tok.size() != 2) fail("ROWS entries need a type and a name");
        const std::string& type = tok[0];
        const std::string& name = tok[1];
        if (type == "N") {
          if (objective_row.empty()) objective_row = name;
        } else if (type == "L" || type == "G" || type == "E") {
          if (row_index.count(name)) fail("duplicate row '" + name + "'");
          row_index[name] = lp.n_rows();
          lp.add_row(type == "L"   ? Relation::le
                     : type == "G" ? Relation::ge
                                   : Relation::eq,
                     0.0, {}, name);
        } else {
          fail("unknown row type '" + type + "'");
        }
        break;
      }
      case Section::columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          const std::string& what = tok[tok.size() - 1];
          if (what == "'INTORG'") in_integer = true;
          else if (what == "'INTEND'") in_integer = false;
          else fail("unknown marker '" + what + "'");
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) fail("COLUMNS entries come in pairs");
        const int j = get_col(tok[0]);
        for (size_t q = 1; q + 1 < tok.size(); q += 2) {
          const std::string& row = tok[q];
          const double v = parse_num(tok[q + 1]);
          if (row == objective_row) {
            lp.cost[j] += v;
          } else {
            auto it = row_index.find(row);
            if (it == row_index.end()) fail("unknown row '" + row + "'");
            if (v != 0.0) lp.rows[it->second].coeffs.push_back({j, v});
          }
        }
        break;
      }
      case Section::rhs: {
        if (tok.size() != 3 && tok.size() != 5) fail("RHS entries come in pairs");
        for (size_t q = 1; q + 1 < tok.size(); q += 2) {
          const std::string& row = tok[q];
          const double v = parse_num(tok[q + 1]);
          if (row == objective_row) continue;  // objective constant unsupported
          auto it = row_index.find(row);
          if (it == row_index.end()) fail("unknown row '" + row + "'");
          lp.rows[it->second].rhs = v;
        }
        break;
      }
      case Section::ranges:
        fail("RANGES are not supported");
        break;
      case Section::bounds: {
        if (tok.size() < 3) fail("BOUNDS entries need type, set and column");
        const std::string& type = tok[0];
        auto it = col_index.find(tok[2]);
        if (it == col_index.end()) fail("unknown column '" + tok[2] + "'");
        const int j = it->second;
        const bool needs_value = (type == "UP" || type == "LO" || type == "FX");
        if (needs_value && tok.size() != 4) fail("bound type " + type + " needs a value");
        const double v = needs_value ? parse_num(tok[3]) : 0.0;
        if (type == "UP") lp.hi[j] = v;
        else if (type == "LO") lp.lo[j] = v;
        else if (type == "FX") { lp.lo[j] = v; lp.hi[j] = v; }
        else if (type == "FR") { lp.lo[j] = -kInf; lp.hi[j] = kInf; }
        else if (type == "MI") lp.lo[j] = -kInf;
        else if (type == "PL") lp.hi[j] = kInf;
        else if (type == "BV") { lp.lo[j] = 0.0; lp.hi[j] = 1.0; integer_cols.insert(j); }
        else fail("unknown bound type '" + type + "'");
        break;
      }
      case Section::none:
      case Section::done:
        fail("data before a section header");
        break;
    }
  }
  if (section != Section::done) {
    ++line_no;
    fail("missing ENDATA");
  }
  out.binary_vars.assign(integer_cols.begin(), integer_cols.end());
  const std::string issue = out.validate();
  if (!issue.empty()) throw DataError("MPS instance invalid: " + issue);
  return out;
}

inline MilpProblem read_mps_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return read_mps(is);
}

/// Equality of the mathematical instance: dimensions, bounds, costs, rows
/// (with coefficients compared as sorted lists) and the binary set.
inline bool structurally_equal(const MilpProblem& a, const MilpProblem& b,
                               double tol = 0.0) {
  const LpProblem &x = a.lp, &y = b.lp;
  if (x.n_vars() != y.n_vars() || x.n_rows() != y.n_rows()) return false;
  auto close = [&](double u, double v) {
    if (std::isinf(u) || std::isinf(v)) return u == v;
    return std::abs(u - v) <= tol;
  };
  for (int j = 0; j < x.n_vars(); ++j)
    if (!close(x.cost[j], y.cost[j]) || !close(x.lo[j], y.lo[j]) || !close(x.hi[j], y.hi[j]))
      return false;
  for (int i = 0; i < x.n_rows(); ++i) {
    if (x.rows[i].rel != y.rows[i].rel || !close(x.rows[i].rhs, y.rows[i].rhs)) return false;
    auto ca = x.rows[i].coeffs, cb = y.rows[i].coeffs;
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    if (ca.size() != cb.size()) return false;
    for (size_t q = 0; q < ca.size(); ++q)
      if (ca[q].first != cb[q].first || !close(ca[q].second, cb[q].second)) return false;
  }
  auto ba = a.binary_vars, bb = b.binary_vars;
  std::sort(ba.begin(), ba.end());
  std::sort(bb.begin(), bb.end());
  return ba == bb;
}

}  // namespace evagg
