#include "cmeb/export.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cmeb {

namespace {

std::string fmt_val(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string to_sdpa(const ConicProgram& cp) {
  const size_t m = cp.num_vars();
  const size_t p = cp.equalities().size();
  const bool maxim = cp.sense() == ConicProgram::Sense::Max;
  double flip = maxim ? -1.0 : 1.0;

  std::ostringstream out;
  out << "*sense=" << (maxim ? "max" : "min") << "\n";
  if (p > 0) out << "*eqrows=" << p << "\n";
  out << m << " = mDIM\n";
  size_t nblocks = cp.blocks().size() + (p > 0 ? 1 : 0);
  out << nblocks << " = nBLOCK\n";
  for (size_t b = 0; b < cp.blocks().size(); ++b) {
    if (b) out << " ";
    out << cp.blocks()[b].dim;
  }
  if (p > 0) {
    if (!cp.blocks().empty()) out << " ";
    out << "-" << 2 * p;
  }
  out << "\n";
  for (size_t j = 0; j < m; ++j) {
    if (j) out << " ";
    out << fmt_val(flip * cp.objective()[j]);
  }
  out << "\n";

  // entry lines: matno blkno i j value, 1-based, upper triangle (i <= j)
  auto emit = [&](size_t matno, size_t blkno, size_t r, size_t c, double v) {
    if (v == 0) return;
    if (r > c) std::swap(r, c);
    out << matno << " " << blkno << " " << r + 1 << " " << c + 1 << " " << fmt_val(v) << "\n";
  };
  // accumulate duplicates so output is canonical
  for (size_t b = 0; b < cp.blocks().size(); ++b) {
    const auto& blk = cp.blocks()[b];
    std::map<std::pair<size_t, size_t>, double> acc;
    for (const auto& e : blk.constant) acc[{std::min(e.r, e.c), std::max(e.r, e.c)}] += e.v;
    for (const auto& [rc, v] : acc) emit(0, b + 1, rc.first, rc.second, -v);
    std::map<size_t, std::map<std::pair<size_t, size_t>, double>> tacc;
    for (const auto& [var, es] : blk.terms)
      for (const auto& e : es) tacc[var][{std::min(e.r, e.c), std::max(e.r, e.c)}] += e.v;
    for (const auto& [var, entries] : tacc)
      for (const auto& [rc, v] : entries) emit(var + 1, b + 1, rc.first, rc.second, v);
  }
  if (p > 0) {
    size_t blkno = cp.blocks().size() + 1;
    for (size_t r = 0; r < p; ++r) {
      const auto& row = cp.equalities()[r];
      // slot 2r: a.y - rhs >= 0; slot 2r+1: rhs - a.y >= 0
      emit(0, blkno, 2 * r, 2 * r, row.rhs);
      emit(0, blkno, 2 * r + 1, 2 * r + 1, -row.rhs);
      std::map<size_t, double> acc;
      for (const auto& [j, a] : row.coeffs) acc[j] += a;
      for (const auto& [j, a] : acc) {
        emit(j + 1, blkno, 2 * r, 2 * r, a);
        emit(j + 1, blkno, 2 * r + 1, 2 * r + 1, -a);
      }
    }
  }
  return out.str();
}

void write_sdpa(const ConicProgram& cp, const std::string& path) {
  write_file(path, to_sdpa(cp));
}

ConicProgram read_sdpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool maxim = false;
  size_t eqrows = 0;

  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      size_t pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos) continue;
      if (line[pos] == '"' || line[pos] == '*') {
        std::string c = line.substr(pos);
        if (c.rfind("*sense=max", 0) == 0) maxim = true;
        if (c.rfind("*eqrows=", 0) == 0) eqrows = std::stoull(c.substr(8));
        continue;
      }
      return true;
    }
    return false;
  };
  auto numbers_of = [](const std::string& s) {
    std::vector<double> vals;
    std::string tok;
    std::istringstream ls(s);
    while (ls >> tok) {
      // the header lines may carry annotations like "= mDIM"; stop there
      try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) break;
        vals.push_back(v);
      } catch (...) {
        break;
      }
    }
    return vals;
  };

  if (!next_data_line()) throw std::runtime_error("sdpa: missing mDIM");
  auto v1 = numbers_of(line);
  if (v1.empty()) throw std::runtime_error("sdpa: bad mDIM line");
  size_t m = static_cast<size_t>(v1[0]);

  if (!next_data_line()) throw std::runtime_error("sdpa: missing nBLOCK");
  auto v2 = numbers_of(line);
  if (v2.empty()) throw std::runtime_error("sdpa: bad nBLOCK line");
  size_t nblocks = static_cast<size_t>(v2[0]);

  if (!next_data_line()) throw std::runtime_error("sdpa: missing block sizes");
  auto sizes = numbers_of(line);
  if (sizes.size() < nblocks) throw std::runtime_error("sdpa: short block-size line");

  if (!next_data_line()) throw std::runtime_error("sdpa: missing objective");
  std::vector<double> c = numbers_of(line);
  while (c.size() < m) {  // objective may wrap across lines
    if (!next_data_line()) throw std::runtime_error("sdpa: short objective");
    for (double v : numbers_of(line)) c.push_back(v);
  }
  if (c.size() != m) throw std::runtime_error("sdpa: objective length mismatch");

  size_t psd_blocks = nblocks;
  size_t eq_block = 0;
  if (eqrows > 0) {
    if (nblocks == 0 || sizes[nblocks - 1] > 0 ||
        static_cast<size_t>(-sizes[nblocks - 1]) != 2 * eqrows)
      throw std::runtime_error("sdpa: equality block header mismatch");
    psd_blocks = nblocks - 1;
    eq_block = nblocks;
  }

  double flip = maxim ? -1.0 : 1.0;
  ConicProgram cp(m, maxim ? ConicProgram::Sense::Max : ConicProgram::Sense::Min);
  for (size_t j = 0; j < m; ++j) cp.set_objective(j, flip * c[j]);
  for (size_t b = 0; b < psd_blocks; ++b) {
    double s = sizes[b];
    size_t dim = static_cast<size_t>(s < 0 ? -s : s);
    cp.add_block(dim);
  }
  struct EqAcc {
    std::map<size_t, double> coeffs;
    double rhs = 0;
  };
  std::vector<EqAcc> eqs(eqrows);

  while (next_data_line()) {
    auto vals = numbers_of(line);
    if (vals.size() != 5) throw std::runtime_error("sdpa: bad entry line: " + line);
    size_t matno = static_cast<size_t>(vals[0]);
    size_t blkno = static_cast<size_t>(vals[1]);
    size_t i = static_cast<size_t>(vals[2]) - 1;
    size_t j = static_cast<size_t>(vals[3]) - 1;
    double v = vals[4];
    if (matno > m || blkno == 0 || blkno > nblocks)
      throw std::runtime_error("sdpa: entry indices out of range: " + line);
    if (eqrows > 0 && blkno == eq_block) {
      if (i != j) throw std::runtime_error("sdpa: off-diagonal entry in diagonal block");
      size_t row = i / 2;
      double sign = (i % 2 == 0) ? 1.0 : -1.0;
      if (row >= eqrows) throw std::runtime_error("sdpa: equality slot out of range");
      // both paired slots carry the same datum up to sign, so assignment suffices
      if (matno == 0)
        eqs[row].rhs = sign * v;
      else
        eqs[row].coeffs[matno - 1] = sign * v;
    } else {
      if (matno == 0)
        cp.block_add_constant(blkno - 1, i, j, -v);
      else
        cp.block_add_term(blkno - 1, matno - 1, i, j, v);
    }
  }
  for (auto& e : eqs) {
    std::vector<std::pair<size_t, double>> coeffs(e.coeffs.begin(), e.coeffs.end());
    cp.add_equality(std::move(coeffs), e.rhs);
  }
  return cp;
}

ConicProgram read_sdpa_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_sdpa(ss.str());
}

namespace {

std::string pad(const std::string& s, size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::string mps_val(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string to_mps(const LinearProgram& lp, const std::string& name) {
  const auto& rows = lp.rows();
  const size_t n = lp.num_vars();
  std::ostringstream out;
  out << "NAME          " << name << "\n";
  if (lp.sense() == LinearProgram::Sense::Max) out << "OBJSENSE\n    MAX\n";

  auto rname = [](size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "R%04zu", i);
    return std::string(buf);
  };
  auto cname = [](size_t j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "X%04zu", j);
    return std::string(buf);
  };

  out << "ROWS\n";
  out << " N  COST\n";
  std::vector<char> rtype(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    char t;
    if (r.lo == r.hi)
      t = 'E';
    else if (r.lo > -kInf && r.hi < kInf)
      t = 'L';  // ranged, RANGES supplies the width
    else if (r.hi < kInf)
      t = 'L';
    else if (r.lo > -kInf)
      t = 'G';
    else
      t = 'N';
    rtype[i] = t;
    out << " " << t << "  " << rname(i) << "\n";
  }

  out << "COLUMNS\n";
  for (size_t j = 0; j < n; ++j) {
    double cj = lp.objective()[j];
    if (cj != 0)
      out << "    " << pad(cname(j), 10) << pad("COST", 10) << mps_val(cj) << "\n";
    for (size_t i = 0; i < rows.size(); ++i) {
      double a = 0;
      for (const auto& [col, val] : rows[i].coeffs)
        if (col == j) a += val;
      if (a != 0)
        out << "    " << pad(cname(j), 10) << pad(rname(i), 10) << mps_val(a) << "\n";
    }
  }

  out << "RHS\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    double rhs;
    switch (rtype[i]) {
      case 'E': rhs = rows[i].lo; break;
      case 'L': rhs = rows[i].hi; break;
      case 'G': rhs = rows[i].lo; break;
      default: continue;
    }
    if (rhs != 0)
      out << "    " << pad("RHS", 10) << pad(rname(i), 10) << mps_val(rhs) << "\n";
  }

  bool any_range = false;
  for (size_t i = 0; i < rows.size(); ++i)
    if (rtype[i] == 'L' && rows[i].lo > -kInf && rows[i].lo != rows[i].hi) any_range = true;
  if (any_range) {
    out << "RANGES\n";
    for (size_t i = 0; i < rows.size(); ++i)
      if (rtype[i] == 'L' && rows[i].lo > -kInf && rows[i].lo != rows[i].hi)
        out << "    " << pad("RNG", 10) << pad(rname(i), 10) << mps_val(rows[i].hi - rows[i].lo)
            << "\n";
  }

  out << "BOUNDS\n";
  for (size_t j = 0; j < n; ++j) {
    double lo = lp.var_lo(j), hi = lp.var_hi(j);
    if (lo == hi) {
      out << " FX " << pad("BND", 9) << pad(cname(j), 10) << mps_val(lo) << "\n";
    } else if (lo <= -kInf && hi >= kInf) {
      out << " FR " << pad("BND", 9) << cname(j) << "\n";
    } else {
      if (lo <= -kInf)
        out << " MI " << pad("BND", 9) << cname(j) << "\n";
      else if (lo != 0)
        out << " LO " << pad("BND", 9) << pad(cname(j), 10) << mps_val(lo) << "\n";
      if (hi < kInf)
        out << " UP " << pad("BND", 9) << pad(cname(j), 10) << mps_val(hi) << "\n";
    }
  }
  out << "ENDATA\n";
  return out.str();
}

void write_mps(const LinearProgram& lp, const std::string& path, const std::string& name) {
  write_file(path, to_mps(lp, name));
}

}  // namespace cmeb
