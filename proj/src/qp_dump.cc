// Copyright 2026 The wt_empc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wt_empc/qp_dump.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "wt_empc/errors.h"

namespace wt_empc {
namespace {

constexpr char kMagic[] = "wt_empc-qp-dump 1";

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteVector(std::ostream& out, const char* name,
                 const Eigen::VectorXd& v) {
  out << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << Num(v(i)) << '\n';
}

void WriteMatrix(std::ostream& out, const char* name, const SparseMatrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros()
      << '\n';
  for (int j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      out << it.row() << ' ' << j << ' ' << Num(it.value()) << '\n';
    }
  }
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string Token() {
    std::string t;
    if (!(in_ >> t)) throw ParseError("QP dump ended early");
    return t;
  }

  void Expect(const std::string& word) {
    const std::string t = Token();
    if (t != word) {
      throw ParseError("QP dump: expected '" + word + "', got '" + t + "'");
    }
  }

  long Int() {
    const std::string t = Token();
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used == t.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("QP dump: bad integer '" + t + "'");
  }

  double Real() {
    const std::string t = Token();
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used == t.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("QP dump: bad number '" + t + "'");
  }

  Eigen::VectorXd Vector(const std::string& name) {
    Expect(name);
    const long n = Int();
    if (n < 0) throw ParseError("QP dump: negative size");
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) v(i) = Real();
    return v;
  }

  SparseMatrix Matrix(const std::string& name) {
    Expect(name);
    const long rows = Int();
    const long cols = Int();
    const long nnz = Int();
    if (rows < 0 || cols < 0 || nnz < 0) {
      throw ParseError("QP dump: negative size");
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (long k = 0; k < nnz; ++k) {
      const long i = Int();
      const long j = Int();
      const double v = Real();
      if (i < 0 || i >= rows || j < 0 || j >= cols) {
        throw ParseError("QP dump: entry outside matrix " + name);
      }
      trips.emplace_back(i, j, v);
    }
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }

  bool AtEnd() {
    in_ >> std::ws;
    return in_.eof();
  }

 private:
  std::istream& in_;
};

}  // namespace

void WriteQpDump(std::ostream& out, const QuadraticProgram& qp,
                 const Eigen::VectorXd* solution) {
  out << kMagic << '\n';
  WriteMatrix(out, "hessian", qp.hessian);
  WriteVector(out, "gradient", qp.gradient);
  WriteMatrix(out, "eq_matrix", qp.eq_matrix);
  WriteVector(out, "eq_rhs", qp.eq_rhs);
  WriteMatrix(out, "ineq_matrix", qp.ineq_matrix);
  WriteVector(out, "ineq_lower", qp.ineq_lower);
  WriteVector(out, "ineq_upper", qp.ineq_upper);
  WriteVector(out, "var_lower", qp.var_lower);
  WriteVector(out, "var_upper", qp.var_upper);
  if (solution) WriteVector(out, "solution", *solution);
}

QpDump ReadQpDump(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic) throw ParseError("not a QP dump");
  Reader r(in);
  QpDump dump;
  QuadraticProgram& qp = dump.qp;
  qp.hessian = r.Matrix("hessian");
  qp.gradient = r.Vector("gradient");
  qp.eq_matrix = r.Matrix("eq_matrix");
  qp.eq_rhs = r.Vector("eq_rhs");
  qp.ineq_matrix = r.Matrix("ineq_matrix");
  qp.ineq_lower = r.Vector("ineq_lower");
  qp.ineq_upper = r.Vector("ineq_upper");
  qp.var_lower = r.Vector("var_lower");
  qp.var_upper = r.Vector("var_upper");
  if (!r.AtEnd()) dump.solution = r.Vector("solution");
  try {
    qp.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return dump;
}

}  // namespace wt_empc
