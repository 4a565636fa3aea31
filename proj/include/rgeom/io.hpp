#pragma once

#include <iosfwd>
#include <string>

#include "rgeom/geometry.hpp"
#include "rgeom/stochastic.hpp"

namespace rgeom::io {

/// Shortest round-tripping form is not required; 17 significant digits are
/// always written so that output bytes are reproducible.
std::string format_double(double v);

/// Plain CSV: one matrix row per line, no header.
void write_matrix_csv(std::ostream& out, const Matrix& M);
Matrix read_matrix_csv(std::istream& in);

/// Model file:
///
///   # rgeom model v1
///   family=rbf|linear
///   variance=<real>
///   length_scale=<real>
///   noise=<real>
///   d=<int>
///   N=<int>
///   m=<int>
///   [X]
///   <d CSV rows of N values>
///   [Y]
///   <m CSV rows of N values>
struct Model {
  KernelSpec spec;
  double noise = 0.0;
  Matrix X;
  Matrix Y;
};

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

/// Header `t,z1,...,zd`, one row per node.
void write_curve_csv(std::ostream& out, const DiscreteCurve& curve);
DiscreteCurve read_curve_csv(std::istream& in);

/// Header `n,L_n,l_n,stderr,rel_err,h_n,rel_err_minus_h,flag`.
void write_bound_report_csv(std::ostream& out, const BoundReport& report);

}  // namespace rgeom::io
